#include "pastagen/volume.hpp"

#include <algorithm>
#include <string>

namespace pastagen {

namespace {

constexpr std::array<std::array<int, 3>, 6> kPermutations{{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

// Canonical RAS sign of each anatomical axis: right->left is -x, anterior->posterior is -y.
constexpr std::array<double, 3> kCanonicalSign{-1.0, -1.0, 1.0};

}  // namespace

Orientation Orientation::from_code(int code) {
    if (code < 0 || code >= kCount) throw InvalidInput("unknown orientation code " + std::to_string(code));
    Orientation o;
    o.axes_ = kPermutations[static_cast<std::size_t>(code / 8)];
    for (int i = 0; i < 3; ++i) o.flips_[i] = ((code % 8) >> i) & 1;
    return o;
}

Orientation Orientation::from_axes(std::array<int, 3> anatomical, std::array<bool, 3> flipped) {
    auto sorted = anatomical;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != std::array<int, 3>{0, 1, 2}) throw InvalidInput("orientation axes must be a permutation of 0,1,2");
    Orientation o;
    o.axes_ = anatomical;
    o.flips_ = flipped;
    return o;
}

Orientation Orientation::from_ras_columns(const std::array<Vec3, 3>& columns) {
    std::array<int, 3> axes{};
    std::array<bool, 3> flips{};
    for (int i = 0; i < 3; ++i) {
        int best = 0;
        for (int j = 1; j < 3; ++j)
            if (std::abs(columns[i][j]) > std::abs(columns[i][best])) best = j;
        axes[i] = best;
        flips[i] = (columns[i][best] * kCanonicalSign[best]) < 0.0;
    }
    return from_axes(axes, flips);
}

int Orientation::code() const noexcept {
    int p = 0;
    for (int i = 0; i < 6; ++i)
        if (kPermutations[i] == axes_) p = i;
    return p * 8 + int(flips_[0]) + 2 * int(flips_[1]) + 4 * int(flips_[2]);
}

Vec3 Orientation::ras_direction(int stored_axis) const noexcept {
    Vec3 d{0.0, 0.0, 0.0};
    const int a = axes_[stored_axis];
    d[a] = kCanonicalSign[a] * (flips_[stored_axis] ? -1.0 : 1.0);
    return d;
}

Vec3 Geometry::world(const Vec3& index) const noexcept {
    Vec3 p = origin;
    for (int i = 0; i < 3; ++i) {
        const Vec3 d = orientation.ras_direction(i);
        for (int j = 0; j < 3; ++j) p[j] += d[j] * spacing[i] * index[i];
    }
    return p;
}

void Geometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 1) throw InvalidInput("grid dimension must be >= 1");
        if (!std::isfinite(spacing[a]) || spacing[a] <= 0.0) throw InvalidInput("voxel spacing must be finite and > 0");
        if (!std::isfinite(origin[a])) throw InvalidInput("origin must be finite");
    }
}

void require_finite(const Volume3D& vol) {
    for (float v : vol.voxels())
        if (!std::isfinite(v)) throw InvalidInput("volume contains non-finite voxel values");
}

namespace {

std::size_t resampled_extent(std::size_t n, double spacing) {
    // Count of 1 mm centres spanning the input centre-to-centre extent.
    const double span = double(n - 1) * spacing;
    return static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
}

struct AxisSample {
    std::size_t i0, i1;
    double t;
};

std::vector<AxisSample> axis_samples(std::size_t n_in, double spacing, std::size_t n_out) {
    std::vector<AxisSample> out(n_out);
    const double last = double(n_in - 1);
    for (std::size_t j = 0; j < n_out; ++j) {
        const double u = std::clamp(double(j) / spacing, 0.0, last);
        const auto i0 = static_cast<std::size_t>(std::floor(u));
        const std::size_t i1 = std::min(i0 + 1, n_in - 1);
        out[j] = {i0, i1, u - double(i0)};
    }
    return out;
}

Geometry resampled_geometry(const Geometry& g) {
    Geometry out = g;
    for (int a = 0; a < 3; ++a) {
        out.dims[a] = resampled_extent(g.dims[a], g.spacing[a]);
        out.spacing[a] = 1.0;
    }
    return out;
}

}  // namespace

namespace {

template <class T>
Grid3<T> resample_trilinear(const Grid3<T>& vol) {
    vol.geometry().validate();
    for (T v : vol.voxels())
        if (!std::isfinite(v)) throw InvalidInput("volume contains non-finite voxels");
    const Geometry& g = vol.geometry();
    const Geometry og = resampled_geometry(g);
    std::array<std::vector<AxisSample>, 3> s;
    for (int a = 0; a < 3; ++a) s[a] = axis_samples(g.dims[a], g.spacing[a], og.dims[a]);

    Grid3<T> out(og);
    for (std::size_t z = 0; z < og.dims[2]; ++z) {
        const auto& sz = s[2][z];
        for (std::size_t y = 0; y < og.dims[1]; ++y) {
            const auto& sy = s[1][y];
            for (std::size_t x = 0; x < og.dims[0]; ++x) {
                const auto& sx = s[0][x];
                auto at = [&](std::size_t i, std::size_t j, std::size_t k) { return double(vol(i, j, k)); };
                const double c00 = at(sx.i0, sy.i0, sz.i0) * (1 - sx.t) + at(sx.i1, sy.i0, sz.i0) * sx.t;
                const double c10 = at(sx.i0, sy.i1, sz.i0) * (1 - sx.t) + at(sx.i1, sy.i1, sz.i0) * sx.t;
                const double c01 = at(sx.i0, sy.i0, sz.i1) * (1 - sx.t) + at(sx.i1, sy.i0, sz.i1) * sx.t;
                const double c11 = at(sx.i0, sy.i1, sz.i1) * (1 - sx.t) + at(sx.i1, sy.i1, sz.i1) * sx.t;
                const double c0 = c00 * (1 - sy.t) + c10 * sy.t;
                const double c1 = c01 * (1 - sy.t) + c11 * sy.t;
                out(x, y, z) = static_cast<T>(c0 * (1 - sz.t) + c1 * sz.t);
            }
        }
    }
    return out;
}

}  // namespace

Volume3D resample_isotropic_1mm(const Volume3D& vol) { return resample_trilinear(vol); }
Grid3<double> resample_isotropic_1mm(const Grid3<double>& vol) { return resample_trilinear(vol); }

LabelMap resample_labels_1mm(const LabelMap& labels) {
    const Geometry& g = labels.geometry();
    const Geometry og = resampled_geometry(g);
    std::array<std::vector<std::size_t>, 3> nearest;
    for (int a = 0; a < 3; ++a) {
        nearest[a].resize(og.dims[a]);
        for (std::size_t j = 0; j < og.dims[a]; ++j) {
            const double u = std::clamp(double(j) / g.spacing[a], 0.0, double(g.dims[a] - 1));
            nearest[a][j] = static_cast<std::size_t>(std::floor(u + 0.5));
        }
    }
    LabelMap out(og);
    for (std::size_t z = 0; z < og.dims[2]; ++z)
        for (std::size_t y = 0; y < og.dims[1]; ++y)
            for (std::size_t x = 0; x < og.dims[0]; ++x)
                out(x, y, z) = labels(nearest[0][x], nearest[1][y], nearest[2][z]);
    return out;
}

double mask_volume_mm3(std::span<const std::uint8_t> mask, const Vec3& spacing) {
    std::size_t n = 0;
    for (auto v : mask) n += (v != 0);
    return double(n) * spacing[0] * spacing[1] * spacing[2];
}

double mask_volume_mm3(const Mask& mask) { return mask_volume_mm3(mask.voxels(), mask.spacing()); }

Mask select_label(const LabelMap& labels, std::uint8_t value) {
    Mask out = labels.like<std::uint8_t>(0);
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == value ? 1 : 0;
    return out;
}

std::size_t count_nonzero(const Mask& mask) {
    return static_cast<std::size_t>(std::count_if(mask.voxels().begin(), mask.voxels().end(), [](auto v) { return v != 0; }));
}

std::pair<Dims, Dims> centered_box(const Dims& dims, const Vec3& center, std::size_t edge) {
    Dims lo{}, size{};
    for (int a = 0; a < 3; ++a) {
        size[a] = std::min(edge == 0 ? dims[a] : edge, dims[a]);
        const double start = std::round(center[a] - double(size[a]) / 2.0);
        const double max_start = double(dims[a] - size[a]);
        lo[a] = static_cast<std::size_t>(std::clamp(start, 0.0, max_start));
    }
    return {lo, size};
}

}  // namespace pastagen
