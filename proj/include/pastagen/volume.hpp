#pragma once

// Volumetric grids with physical geometry. Voxels are stored x-fastest:
// linear index = x + nx * (y + ny * z).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pastagen/error.hpp"

namespace pastagen {

using Dims = std::array<std::size_t, 3>;
using Vec3 = std::array<double, 3>;

/// Which anatomical axis each stored axis runs along, and in which direction.
///
/// Anatomical axes are numbered in the canonical frame: 0 runs right to left,
/// 1 anterior to posterior, 2 inferior to superior. A stored axis is "flipped"
/// when its index increases in the opposite sense. The 48 codes enumerate the
/// six axis permutations (lexicographic) times the eight flip patterns;
/// code 0 is canonical.
class Orientation {
public:
    static constexpr int kCount = 48;

    constexpr Orientation() = default;

    static Orientation from_code(int code);
    static Orientation from_axes(std::array<int, 3> anatomical, std::array<bool, 3> flipped);
    /// Nearest orientation for a voxel-to-RAS direction matrix (columns = stored axes).
    static Orientation from_ras_columns(const std::array<Vec3, 3>& columns);

    int code() const noexcept;
    int anatomical_axis(int stored_axis) const noexcept { return axes_[stored_axis]; }
    bool flipped(int stored_axis) const noexcept { return flips_[stored_axis]; }
    bool is_canonical() const noexcept { return code() == 0; }
    /// Unit RAS direction in which the index of `stored_axis` increases.
    Vec3 ras_direction(int stored_axis) const noexcept;

    friend bool operator==(const Orientation&, const Orientation&) = default;

private:
    std::array<int, 3> axes_{0, 1, 2};
    std::array<bool, 3> flips_{false, false, false};
};

struct Geometry {
    Dims dims{1, 1, 1};
    Vec3 spacing{1.0, 1.0, 1.0};
    /// RAS position (mm) of the centre of voxel (0, 0, 0).
    Vec3 origin{0.0, 0.0, 0.0};
    Orientation orientation{};

    std::size_t voxel_count() const noexcept { return dims[0] * dims[1] * dims[2]; }
    std::size_t linear(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return x + dims[0] * (y + dims[1] * z);
    }
    Dims unravel(std::size_t i) const noexcept {
        return {i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])};
    }
    double voxel_volume_mm3() const noexcept { return spacing[0] * spacing[1] * spacing[2]; }
    /// RAS position of a voxel centre.
    Vec3 world(const Vec3& index) const noexcept;

    /// Throws InvalidInput unless dims >= 1 and spacing finite and > 0.
    void validate() const;

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

template <class T>
class Grid3 {
public:
    using value_type = T;

    Grid3() = default;
    explicit Grid3(Geometry geometry, T fill = T{})
        : geometry_(std::move(geometry)), voxels_(checked_count(geometry_), fill) {}
    Grid3(Geometry geometry, std::vector<T> voxels) : geometry_(std::move(geometry)), voxels_(std::move(voxels)) {
        if (voxels_.size() != checked_count(geometry_)) throw InvalidInput("voxel count does not match dims");
    }

    const Geometry& geometry() const noexcept { return geometry_; }
    const Dims& dims() const noexcept { return geometry_.dims; }
    const Vec3& spacing() const noexcept { return geometry_.spacing; }
    std::size_t size() const noexcept { return voxels_.size(); }

    T& operator()(std::size_t x, std::size_t y, std::size_t z) noexcept { return voxels_[geometry_.linear(x, y, z)]; }
    const T& operator()(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return voxels_[geometry_.linear(x, y, z)];
    }
    T& operator[](std::size_t i) noexcept { return voxels_[i]; }
    const T& operator[](std::size_t i) const noexcept { return voxels_[i]; }

    std::span<T> voxels() noexcept { return voxels_; }
    std::span<const T> voxels() const noexcept { return voxels_; }

    template <class U>
    Grid3<U> like(U fill = U{}) const {
        return Grid3<U>(geometry_, fill);
    }

    friend bool operator==(const Grid3&, const Grid3&) = default;

private:
    static std::size_t checked_count(const Geometry& g) {
        g.validate();
        return g.voxel_count();
    }

    Geometry geometry_{};
    std::vector<T> voxels_ = std::vector<T>(1);
};

/// Scalar field in Hounsfield units (or unitless).
using Volume3D = Grid3<float>;
/// Class ids 0..25; see anatomy.hpp.
using LabelMap = Grid3<std::uint8_t>;
/// Binary mask, 0 or 1.
using Mask = Grid3<std::uint8_t>;

/// Throws InvalidInput if any voxel is NaN or infinite.
void require_finite(const Volume3D& vol);

/// Re-index a grid into `target` orientation. Voxel values move, never change,
/// so reorient(reorient(g, t), g.orientation) has g's voxels bit for bit; the
/// origin is recomputed in floating point and can differ in the last place.
template <class T>
Grid3<T> reorient(const Grid3<T>& grid, Orientation target);

template <class T>
Grid3<T> canonicalize_orientation(const Grid3<T>& grid) {
    return reorient(grid, Orientation{});
}

/// Trilinear resampling to 1 mm spacing. Voxel centres stay aligned to the
/// first input centre; samples past the last centre clamp to the edge.
Volume3D resample_isotropic_1mm(const Volume3D& vol);
Grid3<double> resample_isotropic_1mm(const Grid3<double>& vol);
/// Nearest-neighbour counterpart for label maps.
LabelMap resample_labels_1mm(const LabelMap& labels);

double mask_volume_mm3(const Mask& mask);
double mask_volume_mm3(std::span<const std::uint8_t> mask, const Vec3& spacing);

/// Binary mask of voxels equal to `value`.
Mask select_label(const LabelMap& labels, std::uint8_t value);
std::size_t count_nonzero(const Mask& mask);

/// Sub-grid [lo, lo + size) with origin moved accordingly.
template <class T>
Grid3<T> crop(const Grid3<T>& grid, const Dims& lo, const Dims& size);

/// Box of edge `edge` (clipped to the grid) centred as closely as possible on `center`.
std::pair<Dims, Dims> centered_box(const Dims& dims, const Vec3& center, std::size_t edge);

}  // namespace pastagen

#include "pastagen/detail/volume_impl.hpp"
