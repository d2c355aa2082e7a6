#pragma once

// Analytic torso phantom with the ten organ classes, vessels and vertebral
// landmarks. Used as a stand-in template where no clinical scans are at hand.

#include <cstdint>

#include "pastagen/anatomy.hpp"
#include "pastagen/curation.hpp"
#include "pastagen/volume.hpp"

namespace pastagen {

struct PhantomOptions {
    Modality modality = Modality::Enhanced;
    ScanRange range = ScanRange::ThoraxAbdomenPelvis;  // Thorax and AbdomenPelvis crop the full torso
    std::uint64_t seed = 0;
    double noise_hu = 8.0;
};

struct Phantom {
    Volume3D image;
    LabelMap organs;      // classes 1..10
    LabelMap structures;  // AuxStructure ids
};

/// 80 x 64 x 128 voxels at 1 mm in canonical orientation (fewer slices for cropped ranges).
Phantom make_phantom(const PhantomOptions& options);

}  // namespace pastagen
