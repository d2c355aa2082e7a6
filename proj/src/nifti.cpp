#include "pastagen/nifti.hpp"

#include <algorithm>
#include <bit>
#include <string>
#include <cmath>
#include <cstring>
#include <limits>

namespace pastagen {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

class HeaderReader {
public:
    HeaderReader(const Bytes& b, bool swap) : b_(b), swap_(swap) {}

    template <class T>
    T get(std::size_t off) const {
        T v;
        std::array<std::uint8_t, sizeof(T)> raw;
        std::memcpy(raw.data(), b_.data() + off, sizeof(T));
        if (swap_) std::reverse(raw.begin(), raw.end());
        std::memcpy(&v, raw.data(), sizeof(T));
        return v;
    }

private:
    const Bytes& b_;
    bool swap_;
};

template <class T>
void put(Bytes& b, std::size_t off, T v) {
    static_assert(std::endian::native == std::endian::little, "writer assumes a little-endian host");
    std::memcpy(b.data() + off, &v, sizeof(T));
}

std::size_t type_size(NiftiType t) {
    switch (t) {
        case NiftiType::UInt8:
        case NiftiType::Int8: return 1;
        case NiftiType::Int16:
        case NiftiType::UInt16: return 2;
        case NiftiType::Int32:
        case NiftiType::UInt32:
        case NiftiType::Float32: return 4;
        case NiftiType::Float64: return 8;
    }
    throw IoError("unsupported NIfTI datatype");
}

NiftiType checked_type(short code) {
    switch (code) {
        case 2: case 4: case 8: case 16: case 64: case 256: case 512: case 768:
            return static_cast<NiftiType>(code);
        default:
            throw IoError("unsupported NIfTI datatype " + std::to_string(code));
    }
}

double read_value(const std::uint8_t* p, NiftiType t, bool swap) {
    auto load = [&](auto tag) {
        using T = decltype(tag);
        std::array<std::uint8_t, sizeof(T)> raw;
        std::memcpy(raw.data(), p, sizeof(T));
        if (swap) std::reverse(raw.begin(), raw.end());
        T v;
        std::memcpy(&v, raw.data(), sizeof(T));
        return static_cast<double>(v);
    };
    switch (t) {
        case NiftiType::UInt8: return load(std::uint8_t{});
        case NiftiType::Int8: return load(std::int8_t{});
        case NiftiType::Int16: return load(std::int16_t{});
        case NiftiType::UInt16: return load(std::uint16_t{});
        case NiftiType::Int32: return load(std::int32_t{});
        case NiftiType::UInt32: return load(std::uint32_t{});
        case NiftiType::Float32: return load(float{});
        case NiftiType::Float64: return load(double{});
    }
    return 0.0;
}

template <class T>
void store_integer(std::uint8_t* p, double v) {
    const double r = std::clamp(std::round(v), double(std::numeric_limits<T>::min()), double(std::numeric_limits<T>::max()));
    const T x = static_cast<T>(r);
    std::memcpy(p, &x, sizeof(T));
}

void write_value(std::uint8_t* p, NiftiType t, double v) {
    switch (t) {
        case NiftiType::UInt8: store_integer<std::uint8_t>(p, v); break;
        case NiftiType::Int8: store_integer<std::int8_t>(p, v); break;
        case NiftiType::Int16: store_integer<std::int16_t>(p, v); break;
        case NiftiType::UInt16: store_integer<std::uint16_t>(p, v); break;
        case NiftiType::Int32: store_integer<std::int32_t>(p, v); break;
        case NiftiType::UInt32: store_integer<std::uint32_t>(p, v); break;
        case NiftiType::Float32: {
            const float f = static_cast<float>(v);
            std::memcpy(p, &f, 4);
            break;
        }
        case NiftiType::Float64: std::memcpy(p, &v, 8); break;
    }
}

using Mat3 = std::array<Vec3, 3>;  // columns

Mat3 quaternion_columns(double b, double c, double d, double qfac) {
    double a = 1.0 - (b * b + c * c + d * d);
    if (a < 1e-7) {
        const double n = 1.0 / std::sqrt(b * b + c * c + d * d);
        b *= n;
        c *= n;
        d *= n;
        a = 0.0;
    } else {
        a = std::sqrt(a);
    }
    // Row-major rotation, then split into columns.
    const double r[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
        {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
        {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b},
    };
    Mat3 cols{};
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) cols[j][i] = r[i][j] * (j == 2 ? qfac : 1.0);
    return cols;
}

struct Quaternion {
    double b, c, d, qfac;
};

// Inverse of quaternion_columns for an orthonormal matrix.
Quaternion columns_to_quaternion(Mat3 cols) {
    const double det = cols[0][0] * (cols[1][1] * cols[2][2] - cols[2][1] * cols[1][2]) -
                       cols[1][0] * (cols[0][1] * cols[2][2] - cols[2][1] * cols[0][2]) +
                       cols[2][0] * (cols[0][1] * cols[1][2] - cols[1][1] * cols[0][2]);
    double qfac = 1.0;
    if (det < 0) {
        qfac = -1.0;
        for (auto& v : cols[2]) v = -v;
    }
    auto r = [&](int i, int j) { return cols[j][i]; };
    double a = r(0, 0) + r(1, 1) + r(2, 2) + 1.0, b, c, d;
    if (a > 0.5) {
        a = 0.5 * std::sqrt(a);
        b = 0.25 * (r(2, 1) - r(1, 2)) / a;
        c = 0.25 * (r(0, 2) - r(2, 0)) / a;
        d = 0.25 * (r(1, 0) - r(0, 1)) / a;
    } else {
        const double xd = 1.0 + r(0, 0) - (r(1, 1) + r(2, 2));
        const double yd = 1.0 + r(1, 1) - (r(0, 0) + r(2, 2));
        const double zd = 1.0 + r(2, 2) - (r(0, 0) + r(1, 1));
        if (xd > 1.0) {
            b = 0.5 * std::sqrt(xd);
            c = 0.25 * (r(0, 1) + r(1, 0)) / b;
            d = 0.25 * (r(0, 2) + r(2, 0)) / b;
            a = 0.25 * (r(2, 1) - r(1, 2)) / b;
        } else if (yd > 1.0) {
            c = 0.5 * std::sqrt(yd);
            b = 0.25 * (r(0, 1) + r(1, 0)) / c;
            d = 0.25 * (r(1, 2) + r(2, 1)) / c;
            a = 0.25 * (r(0, 2) - r(2, 0)) / c;
        } else {
            d = 0.5 * std::sqrt(zd);
            b = 0.25 * (r(0, 2) + r(2, 0)) / d;
            c = 0.25 * (r(1, 2) + r(2, 1)) / d;
            a = 0.25 * (r(1, 0) - r(0, 1)) / d;
        }
        if (a < 0.0) {
            b = -b;
            c = -c;
            d = -d;
        }
    }
    return {b, c, d, qfac};
}

}  // namespace

NiftiImage decode_nifti(const Bytes& bytes) {
    if (bytes.size() < kHeaderSize) throw IoError("file too small for a NIfTI-1 header");
    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, bytes.data(), 4);
    bool swap = false;
    if (sizeof_hdr != 348) {
        swap = true;
        if (static_cast<std::int32_t>(__builtin_bswap32(static_cast<std::uint32_t>(sizeof_hdr))) != 348) throw IoError("not a NIfTI-1 file (bad sizeof_hdr)");
    }
    if (std::memcmp(bytes.data() + 344, "n+1", 4) != 0) throw IoError("only single-file NIfTI-1 (n+1) is supported");
    const HeaderReader h(bytes, swap);

    const auto ndim = h.get<std::int16_t>(40);
    if (ndim < 1 || ndim > 7) throw IoError("invalid NIfTI dim[0]");
    Geometry g;
    for (int a = 0; a < 3; ++a) {
        const auto d = a < ndim ? h.get<std::int16_t>(42 + 2 * a) : std::int16_t{1};
        if (d < 1) throw IoError("invalid NIfTI dimension");
        g.dims[a] = static_cast<std::size_t>(d);
        const float s = h.get<float>(80 + 4 * a);
        g.spacing[a] = (a < ndim && s > 0.0f) ? double(s) : 1.0;
    }
    for (int a = 3; a < ndim; ++a)
        if (h.get<std::int16_t>(42 + 2 * a) > 1) throw IoError("only 3D NIfTI volumes are supported");

    NiftiImage img;
    img.type = checked_type(h.get<std::int16_t>(70));

    const auto qform_code = h.get<std::int16_t>(252);
    const auto sform_code = h.get<std::int16_t>(254);
    Mat3 cols{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    if (sform_code > 0) {
        for (int row = 0; row < 3; ++row) {
            for (int j = 0; j < 3; ++j) cols[j][row] = h.get<float>(280 + 16 * row + 4 * j);
            g.origin[row] = h.get<float>(280 + 16 * row + 12);
        }
        for (int j = 0; j < 3; ++j) {
            const double n = std::sqrt(cols[j][0] * cols[j][0] + cols[j][1] * cols[j][1] + cols[j][2] * cols[j][2]);
            if (n <= 0.0) throw IoError("degenerate NIfTI sform");
            for (auto& v : cols[j]) v /= n;
            g.spacing[j] = n;
        }
    } else if (qform_code > 0) {
        float qfac = h.get<float>(76);
        cols = quaternion_columns(h.get<float>(256), h.get<float>(260), h.get<float>(264), qfac < 0 ? -1.0 : 1.0);
        g.origin = {h.get<float>(268), h.get<float>(272), h.get<float>(276)};
    }
    g.orientation = Orientation::from_ras_columns(cols);
    g.validate();
    img.geometry = g;

    double slope = h.get<float>(112);
    double inter = h.get<float>(116);
    if (slope == 0.0 || !std::isfinite(slope)) {
        slope = 1.0;
        inter = 0.0;
    }
    if (!std::isfinite(inter)) inter = 0.0;

    const float vox_offset = h.get<float>(108);
    const auto offset = static_cast<std::size_t>(std::max(vox_offset, float(kHeaderSize)));
    const std::size_t tsize = type_size(img.type);
    const std::size_t n = g.voxel_count();
    if (bytes.size() < offset + n * tsize) throw IoError("NIfTI data shorter than its header claims");
    img.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) img.values[i] = read_value(bytes.data() + offset + i * tsize, img.type, swap) * slope + inter;
    return img;
}

NiftiImage read_nifti(const std::filesystem::path& path) { return decode_nifti(read_file(path)); }

Bytes encode_nifti(const Geometry& geometry, const std::vector<double>& values, NiftiType type) {
    geometry.validate();
    if (values.size() != geometry.voxel_count()) throw InvalidInput("value count does not match geometry");
    for (int a = 0; a < 3; ++a)
        if (geometry.dims[a] > 32767) throw InvalidInput("dimension too large for NIfTI-1");
    const std::size_t tsize = type_size(type);
    Bytes b(kDataOffset + values.size() * tsize, 0);

    put<std::int32_t>(b, 0, 348);
    b[38] = 'r';
    put<std::int16_t>(b, 40, 3);
    for (int a = 0; a < 3; ++a) put<std::int16_t>(b, 42 + 2 * a, static_cast<std::int16_t>(geometry.dims[a]));
    for (int a = 3; a < 7; ++a) put<std::int16_t>(b, 42 + 2 * a, 1);
    put<std::int16_t>(b, 70, static_cast<std::int16_t>(type));
    put<std::int16_t>(b, 72, static_cast<std::int16_t>(tsize * 8));

    Mat3 cols{};
    for (int j = 0; j < 3; ++j) cols[j] = geometry.orientation.ras_direction(j);
    const Quaternion q = columns_to_quaternion(cols);
    put<float>(b, 76, static_cast<float>(q.qfac));
    for (int a = 0; a < 3; ++a) put<float>(b, 80 + 4 * a, static_cast<float>(geometry.spacing[a]));
    put<float>(b, 108, float(kDataOffset));
    put<float>(b, 112, 1.0f);
    put<float>(b, 116, 0.0f);
    b[123] = 2;  // mm
    const char descrip[] = "pastagen";
    std::memcpy(b.data() + 148, descrip, sizeof(descrip));
    put<std::int16_t>(b, 252, 1);
    put<std::int16_t>(b, 254, 1);
    put<float>(b, 256, static_cast<float>(q.b));
    put<float>(b, 260, static_cast<float>(q.c));
    put<float>(b, 264, static_cast<float>(q.d));
    for (int row = 0; row < 3; ++row) {
        put<float>(b, 268 + 4 * row, static_cast<float>(geometry.origin[row]));
        for (int j = 0; j < 3; ++j) put<float>(b, 280 + 16 * row + 4 * j, static_cast<float>(cols[j][row] * geometry.spacing[j]));
        put<float>(b, 280 + 16 * row + 12, static_cast<float>(geometry.origin[row]));
    }
    std::memcpy(b.data() + 344, "n+1", 4);

    for (std::size_t i = 0; i < values.size(); ++i) write_value(b.data() + kDataOffset + i * tsize, type, values[i]);
    return b;
}

void write_nifti(const std::filesystem::path& path, const Geometry& geometry, const std::vector<double>& values,
                 NiftiType type) {
    write_file_atomic(path, encode_nifti(geometry, values, type));
}

Volume3D read_volume(const std::filesystem::path& path) {
    NiftiImage img = read_nifti(path);
    std::vector<float> v(img.values.begin(), img.values.end());
    Volume3D vol(img.geometry, std::move(v));
    require_finite(vol);
    return vol;
}

LabelMap read_labels(const std::filesystem::path& path) {
    NiftiImage img = read_nifti(path);
    std::vector<std::uint8_t> v(img.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = img.values[i];
        if (!(x >= 0.0 && x <= 255.0) || x != std::floor(x)) throw IoError("label map holds a non-label value in " + path.string());
        v[i] = static_cast<std::uint8_t>(x);
    }
    return LabelMap(img.geometry, std::move(v));
}

void write_volume(const std::filesystem::path& path, const Volume3D& vol, NiftiType type) {
    std::vector<double> v(vol.voxels().begin(), vol.voxels().end());
    write_nifti(path, vol.geometry(), v, type);
}

void write_labels(const std::filesystem::path& path, const LabelMap& labels) {
    std::vector<double> v(labels.voxels().begin(), labels.voxels().end());
    write_nifti(path, labels.geometry(), v, NiftiType::UInt8);
}

}  // namespace pastagen
