#pragma once

#include <vector>

#include "pastagen/volume.hpp"

namespace pastagen {

struct Box {
    Dims lo{};
    Dims size{};

    bool contains(const Dims& p) const noexcept {
        for (int a = 0; a < 3; ++a)
            if (p[a] < lo[a] || p[a] >= lo[a] + size[a]) return false;
        return true;
    }
    friend bool operator==(const Box&, const Box&) = default;
};

/// Overlapping cubic windows covering a grid, with blend weights that form a
/// partition of unity. Windows are the Cartesian product of per-axis starts;
/// the last start on each axis sits flush with the far edge. Each window
/// carries a separable triangular ramp normalised per axis, so the weights of
/// the windows covering any voxel sum to one.
class WindowTiling {
public:
    WindowTiling(Dims dims, std::size_t window, double overlap_fraction);

    const Dims& dims() const noexcept { return dims_; }
    /// Window edge per axis (the requested edge clipped to the grid).
    const Dims& window() const noexcept { return window_; }
    const std::vector<Box>& boxes() const noexcept { return boxes_; }
    std::size_t size() const noexcept { return boxes_.size(); }

    /// Blend weight of window `w` at absolute voxel `p` (0 outside the window).
    double weight(std::size_t w, const Dims& p) const noexcept;
    /// Weight field over a window's own box, x-fastest.
    std::vector<double> weight_field(std::size_t w) const;

    const std::vector<std::size_t>& starts(int axis) const noexcept { return starts_[axis]; }

private:
    Dims dims_;
    Dims window_;
    std::array<std::vector<std::size_t>, 3> starts_;
    // axis_weights_[a][k][i]: normalised weight of start k at local offset i.
    std::array<std::vector<std::vector<double>>, 3> axis_weights_;
    std::vector<Box> boxes_;
    std::vector<std::array<std::size_t, 3>> box_axis_index_;
};

WindowTiling tile_sliding_windows(const Dims& dims, std::size_t window, double overlap_fraction);

}  // namespace pastagen
