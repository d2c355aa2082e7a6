#include "pastagen/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pastagen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher lower envelope along one line, sample pitch `h`.
void edt_line(const double* f, double* d, std::size_t n, double h, std::vector<std::size_t>& v, std::vector<double>& z) {
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
        if (!std::isfinite(f[q])) continue;
        if (!any) {
            any = true;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        const double xq = double(q) * h;
        while (true) {
            const double xv = double(v[k]) * h;
            const double s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
            if (s <= z[k]) {
                if (k == 0) {
                    v[0] = q;
                    z[0] = -kInf;
                    z[1] = kInf;
                    break;
                }
                --k;
                continue;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = kInf;
            break;
        }
    }
    if (!any) {
        std::fill(d, d + n, kInf);
        return;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double xq = double(q) * h;
        while (z[k + 1] < xq) ++k;
        const double dx = xq - double(v[k]) * h;
        d[q] = dx * dx + f[v[k]];
    }
}

}  // namespace

std::vector<double> squared_distance_to(const Mask& mask) {
    const Geometry& g = mask.geometry();
    const Dims& n = g.dims;
    std::vector<double> dist(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) dist[i] = mask[i] ? 0.0 : kInf;

    std::vector<double> line_in, line_out;
    std::vector<std::size_t> v;
    std::vector<double> z;
    const std::array<std::size_t, 3> stride{1, n[0], n[0] * n[1]};
    for (int axis = 0; axis < 3; ++axis) {
        const std::size_t len = n[axis];
        line_in.resize(len);
        line_out.resize(len);
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (std::size_t j = 0; j < n[a2]; ++j)
            for (std::size_t i = 0; i < n[a1]; ++i) {
                const std::size_t base = i * stride[a1] + j * stride[a2];
                for (std::size_t q = 0; q < len; ++q) line_in[q] = dist[base + q * stride[axis]];
                edt_line(line_in.data(), line_out.data(), len, g.spacing[axis], v, z);
                for (std::size_t q = 0; q < len; ++q) dist[base + q * stride[axis]] = line_out[q];
            }
    }
    return dist;
}

std::vector<double> distance_to(const Mask& mask) {
    auto d = squared_distance_to(mask);
    for (auto& x : d) x = std::sqrt(x);
    return d;
}

Mask dilate(const Mask& mask, double radius_mm) {
    if (radius_mm < 0.0) throw InvalidInput("morphology radius must be >= 0");
    const auto d2 = squared_distance_to(mask);
    Mask out = mask.like<std::uint8_t>(0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = within_radius_sq(d2[i], radius_mm) ? 1 : 0;
    return out;
}

Mask erode(const Mask& mask, double radius_mm) {
    if (radius_mm < 0.0) throw InvalidInput("morphology radius must be >= 0");
    Mask background = mask.like<std::uint8_t>(0);
    for (std::size_t i = 0; i < mask.size(); ++i) background[i] = mask[i] ? 0 : 1;
    const auto d2 = squared_distance_to(background);

    const Geometry& g = mask.geometry();
    Mask out = mask.like<std::uint8_t>(0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i] || within_radius_sq(d2[i], radius_mm)) continue;
        const Dims p = g.unravel(i);
        bool clear = true;
        for (int a = 0; a < 3 && clear; ++a) {
            const double lo = double(p[a] + 1) * g.spacing[a];
            const double hi = double(g.dims[a] - p[a]) * g.spacing[a];
            clear = !within_radius_sq(lo * lo, radius_mm) && !within_radius_sq(hi * hi, radius_mm);
        }
        out[i] = clear ? 1 : 0;
    }
    return out;
}

Mask morphology(const Mask& mask, MorphOp op, double radius_mm) {
    return op == MorphOp::Erode ? erode(mask, radius_mm) : dilate(mask, radius_mm);
}

}  // namespace pastagen
