#include "pastagen/tiling.hpp"

#include <algorithm>
#include <cmath>

namespace pastagen {

WindowTiling::WindowTiling(Dims dims, std::size_t window, double overlap_fraction) : dims_(dims) {
    if (window == 0) throw InvalidInput("window edge must be > 0");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) throw InvalidInput("overlap fraction must be in [0, 1)");
    for (int a = 0; a < 3; ++a)
        if (dims[a] == 0) throw InvalidInput("grid dimension must be >= 1");

    for (int a = 0; a < 3; ++a) {
        const std::size_t w = std::min(window, dims[a]);
        window_[a] = w;
        const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(double(w) * (1.0 - overlap_fraction))));
        auto& st = starts_[a];
        for (std::size_t s = 0; s + w < dims[a]; s += stride) st.push_back(s);
        st.push_back(dims[a] - w);

        // Raw ramp: distance to the nearer window edge, counted from 1.
        std::vector<double> ramp(w);
        for (std::size_t i = 0; i < w; ++i) ramp[i] = double(std::min(i + 1, w - i));
        std::vector<double> total(dims[a], 0.0);
        for (std::size_t s : st)
            for (std::size_t i = 0; i < w; ++i) total[s + i] += ramp[i];
        auto& aw = axis_weights_[a];
        aw.resize(st.size());
        for (std::size_t k = 0; k < st.size(); ++k) {
            aw[k].resize(w);
            for (std::size_t i = 0; i < w; ++i) aw[k][i] = ramp[i] / total[st[k] + i];
        }
    }

    for (std::size_t kz = 0; kz < starts_[2].size(); ++kz)
        for (std::size_t ky = 0; ky < starts_[1].size(); ++ky)
            for (std::size_t kx = 0; kx < starts_[0].size(); ++kx) {
                boxes_.push_back({{starts_[0][kx], starts_[1][ky], starts_[2][kz]}, window_});
                box_axis_index_.push_back({kx, ky, kz});
            }
}

double WindowTiling::weight(std::size_t w, const Dims& p) const noexcept {
    const Box& b = boxes_[w];
    if (!b.contains(p)) return 0.0;
    double out = 1.0;
    for (int a = 0; a < 3; ++a) out *= axis_weights_[a][box_axis_index_[w][a]][p[a] - b.lo[a]];
    return out;
}

std::vector<double> WindowTiling::weight_field(std::size_t w) const {
    const auto& k = box_axis_index_[w];
    const auto& wx = axis_weights_[0][k[0]];
    const auto& wy = axis_weights_[1][k[1]];
    const auto& wz = axis_weights_[2][k[2]];
    std::vector<double> out(window_[0] * window_[1] * window_[2]);
    std::size_t i = 0;
    for (double fz : wz)
        for (double fy : wy)
            for (double fx : wx) out[i++] = fx * fy * fz;
    return out;
}

WindowTiling tile_sliding_windows(const Dims& dims, std::size_t window, double overlap_fraction) {
    return WindowTiling(dims, window, overlap_fraction);
}

}  // namespace pastagen
