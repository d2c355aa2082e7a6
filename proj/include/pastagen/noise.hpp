#pragma once

// Seeded, position-hashed noise: every value depends only on (seed, lattice
// coordinate), so fields can be evaluated piecewise or in parallel.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "pastagen/rng.hpp"

namespace pastagen {

inline std::uint64_t hash_coords(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z) noexcept {
    std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(x));
    h = splitmix64(h ^ static_cast<std::uint64_t>(y));
    return splitmix64(h ^ static_cast<std::uint64_t>(z));
}

/// Lattice value in [-1, 1).
inline double lattice_value(std::uint64_t seed, std::int64_t x, std::int64_t y, std::int64_t z) noexcept {
    return 2.0 * unit_from_bits(hash_coords(seed, x, y, z)) - 1.0;
}

/// Trilinearly interpolated lattice value noise; `p` is in lattice units.
inline double value_noise(std::uint64_t seed, double px, double py, double pz) noexcept {
    const double fx = std::floor(px), fy = std::floor(py), fz = std::floor(pz);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy), iz = static_cast<std::int64_t>(fz);
    const double tx = px - fx, ty = py - fy, tz = pz - fz;
    double acc = 0.0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
                acc += w * lattice_value(seed, ix + dx, iy + dy, iz + dz);
            }
    return acc;
}

/// Standard normal draw keyed by a voxel index.
inline double hashed_normal(std::uint64_t seed, std::uint64_t index) noexcept {
    const std::uint64_t h1 = splitmix64(seed ^ splitmix64(2 * index + 1));
    const std::uint64_t h2 = splitmix64(h1 ^ 0xd1b54a32d192ed03ULL);
    const double u1 = (static_cast<double>(h1 >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = unit_from_bits(h2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pastagen
