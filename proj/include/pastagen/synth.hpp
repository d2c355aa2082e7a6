#pragma once

// Procedural lesion synthesis on a healthy template: placement, shape,
// invasion, density, texture, margin blur and label composition.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "pastagen/lesion_model.hpp"
#include "pastagen/tiling.hpp"
#include "pastagen/volume.hpp"

namespace pastagen {

struct Template {
    std::string id;
    Volume3D image;
    LabelMap labels;  // organ classes 1..10
};

struct RingStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

/// HU statistics over target-organ voxels within `thickness_mm` of the lesion
/// (lesion voxels excluded). Throws StageError("density") if the shell is empty.
RingStats ring_stats(const Volume3D& image, const Mask& lesion, const Mask& organ, double thickness_mm);

/// Uniform draw from the organ eroded by half the lesion's smallest extent
/// (at least 1 mm). Throws StageError("place") when nothing survives erosion.
Dims place_lesion(const Mask& organ, const LesionSpec& spec, std::uint64_t seed);

/// Pre-blur lesion mask around `center`. `image` is consulted only for wall
/// thickening, to find an air-filled lumen (without one the band runs under
/// the organ surface). Wall-thickening lesions snap to the nearest wall voxel;
/// throws StageError("shape") if no wall voxel exists.
Mask make_shape_mask(const LesionSpec& spec, const Dims& center, const Volume3D& image, const Mask& organ,
                     const SamplingParams& params, std::uint64_t seed);

/// Offset from the ring mean, drawn from the option's interval.
double sample_density_offset(Density density, const SamplingParams& params, std::uint64_t seed);

/// Sets every voxel of `region` to `value`.
Volume3D apply_density(const Volume3D& image, const Mask& region, double value);

struct TextureParams {
    double amplitude_hu = 0.0;    // std of the low-frequency field inside the lesion
    double fine_sigma_hu = 0.0;   // std of white noise
    double lattice_mm = 8.0;
};

TextureParams sample_texture(Heterogeneity heterogeneity, const SamplingParams& params, std::uint64_t seed);

/// Adds value noise scaled to zero mean and `amplitude_hu` std over `lesion`,
/// plus white noise of `fine_sigma_hu`, to every voxel of `region` (defaults
/// to the lesion). All-zero amplitudes leave the image untouched.
Volume3D apply_heterogeneity(const Volume3D& image, const Mask& lesion, const TextureParams& texture, std::uint64_t seed,
                             const Mask* region = nullptr);

double sample_blur_sigma(Surface surface, const SamplingParams& params, std::uint64_t seed);

/// Blend `lesion_field` into `background` through the lesion mask blurred by a
/// Gaussian of `sigma_mm`. The blend weight is exactly 0 farther than 3 sigma
/// outside the mask and exactly 1 farther than 3 sigma inside it.
Volume3D apply_surface(const Volume3D& background, const Volume3D& lesion_field, const Mask& lesion, double sigma_mm);

struct InvasionGeometry {
    double depth_mm = 0.0;
    double cone_deg = 35.0;
};

InvasionGeometry sample_invasion(const SamplingParams& params, std::uint64_t seed);

/// Non-invasive (or zero depth): lesion clipped to the organ. Invasive: the
/// clipped lesion plus a cone from its centroid through the nearest organ
/// boundary, extending at most `depth_mm` outside the organ.
Mask apply_invasion(const Mask& lesion, const Mask& organ, Invasion invasion, const InvasionGeometry& geometry,
                    std::uint64_t seed);

/// Organ labels with lesion voxels overwritten by the lesion's class id.
LabelMap compose_labels(const LabelMap& organ_labels, const Mask& lesion, LesionType type);

struct Provenance {
    std::string template_id;
    LesionSpec spec;
    Dims center{};
    RingStats ring;
    double density_offset_hu = 0.0;
    TextureParams texture;
    double blur_sigma_mm = 0.0;
    InvasionGeometry invasion;
};

struct SynthSample {
    Volume3D image;
    LabelMap labels;
    StructuredReport report;
    Provenance provenance;
};

/// place -> shape -> invasion -> ring -> density -> heterogeneity -> surface -> compose.
/// Stage failures surface as StageError carrying the stage name.
SynthSample synthesize(const Template& tmpl, const LesionSpec& spec, const SamplingParams& params);

Mask lesion_mask(const LabelMap& labels);

nlohmann::ordered_json spec_to_json(const LesionSpec& spec);
LesionSpec spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json provenance_to_json(const Provenance& p);

}  // namespace pastagen
