#pragma once

namespace pastagen {

namespace detail {

// Maps stored indices to canonical (anatomical) indices and back.
inline Dims to_canonical(const Orientation& o, const Dims& dims, const Dims& idx) noexcept {
    Dims c{};
    for (int i = 0; i < 3; ++i) {
        const int a = o.anatomical_axis(i);
        c[a] = o.flipped(i) ? dims[i] - 1 - idx[i] : idx[i];
    }
    return c;
}

inline Dims from_canonical(const Orientation& o, const Dims& canon_dims, const Dims& c) noexcept {
    Dims idx{};
    for (int i = 0; i < 3; ++i) {
        const int a = o.anatomical_axis(i);
        idx[i] = o.flipped(i) ? canon_dims[a] - 1 - c[a] : c[a];
    }
    return idx;
}

}  // namespace detail

template <class T>
Grid3<T> reorient(const Grid3<T>& grid, Orientation target) {
    const Geometry& src = grid.geometry();
    const Orientation& from = src.orientation;

    Dims canon_dims{};
    Vec3 canon_spacing{};
    for (int i = 0; i < 3; ++i) {
        canon_dims[from.anatomical_axis(i)] = src.dims[i];
        canon_spacing[from.anatomical_axis(i)] = src.spacing[i];
    }

    Geometry dst;
    dst.orientation = target;
    for (int i = 0; i < 3; ++i) {
        dst.dims[i] = canon_dims[target.anatomical_axis(i)];
        dst.spacing[i] = canon_spacing[target.anatomical_axis(i)];
    }
    // New origin is the world position of whichever source voxel lands at (0,0,0).
    const Dims zero_canon = detail::to_canonical(target, dst.dims, Dims{0, 0, 0});
    const Dims zero_src = detail::from_canonical(from, canon_dims, zero_canon);
    dst.origin = src.world({double(zero_src[0]), double(zero_src[1]), double(zero_src[2])});

    if (from == target) return grid;

    Grid3<T> out(dst);
    for (std::size_t z = 0; z < src.dims[2]; ++z)
        for (std::size_t y = 0; y < src.dims[1]; ++y)
            for (std::size_t x = 0; x < src.dims[0]; ++x) {
                const Dims c = detail::to_canonical(from, src.dims, {x, y, z});
                const Dims t = detail::from_canonical(target, canon_dims, c);
                out(t[0], t[1], t[2]) = grid(x, y, z);
            }
    return out;
}

template <class T>
Grid3<T> crop(const Grid3<T>& grid, const Dims& lo, const Dims& size) {
    const Geometry& g = grid.geometry();
    for (int a = 0; a < 3; ++a)
        if (size[a] == 0 || lo[a] + size[a] > g.dims[a]) throw InvalidInput("crop box outside the grid");
    Geometry out_geom = g;
    out_geom.dims = size;
    out_geom.origin = g.world({double(lo[0]), double(lo[1]), double(lo[2])});
    Grid3<T> out(out_geom);
    for (std::size_t z = 0; z < size[2]; ++z)
        for (std::size_t y = 0; y < size[1]; ++y)
            for (std::size_t x = 0; x < size[0]; ++x) out(x, y, z) = grid(lo[0] + x, lo[1] + y, lo[2] + z);
    return out;
}

}  // namespace pastagen
