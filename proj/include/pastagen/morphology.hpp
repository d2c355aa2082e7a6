#pragma once

#include <vector>

#include "pastagen/volume.hpp"

namespace pastagen {

/// Exact squared Euclidean distance (mm^2) from every voxel centre to the
/// nearest nonzero voxel centre, honouring anisotropic spacing. Voxels of an
/// all-zero mask get +infinity.
std::vector<double> squared_distance_to(const Mask& mask);

/// Euclidean distance (mm) to the nearest nonzero voxel.
std::vector<double> distance_to(const Mask& mask);

/// Ball structuring element: voxel centres within `radius_mm` (inclusive).
/// Voxels outside the grid count as background, so erosion peels the border.
Mask dilate(const Mask& mask, double radius_mm);
Mask erode(const Mask& mask, double radius_mm);

enum class MorphOp { Erode, Dilate };
Mask morphology(const Mask& mask, MorphOp op, double radius_mm);

/// Inclusive ball test shared by the morphology routines.
inline bool within_radius_sq(double d2, double radius_mm) noexcept { return d2 <= radius_mm * radius_mm + 1e-9; }

}  // namespace pastagen
