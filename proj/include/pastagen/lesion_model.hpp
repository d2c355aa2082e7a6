#pragma once

// Structured lesion attributes: option vocabularies, per-type sampling,
// report rendering/parsing and classification-label encoding.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pastagen/anatomy.hpp"

namespace pastagen {

// Option order is the canonical listing order; the enum value is the class label.
enum class Shape : std::uint8_t { RoundLike, Irregular, WallThickening, PunctateNodular };
enum class Density : std::uint8_t { Hypodense, Isodense, Hyperdense };
enum class Heterogeneity : std::uint8_t { Homogeneous, Heterogeneous };
enum class Surface : std::uint8_t { WellDefined, IllDefined };
enum class Invasion : std::uint8_t { NoCloseRelationship, CloseRelationship };

inline constexpr std::array<std::string_view, 2> kEnhancementOptions{"Enhanced CT", "Plain CT"};
inline constexpr std::array<std::string_view, 4> kShapeOptions{"Round-like", "Irregular", "Wall thickening",
                                                               "Punctate, nodular"};
inline constexpr std::array<std::string_view, 3> kDensityOptions{"Hypodense", "Isodense", "Hyperdense"};
inline constexpr std::array<std::string_view, 2> kHeterogeneityOptions{"Homogeneous", "Heterogeneous"};
inline constexpr std::array<std::string_view, 2> kSurfaceOptions{"Well-defined margin", "Ill-defined margin"};
inline constexpr std::array<std::string_view, 2> kInvasionOptions{"No close relationship with surrounding structures",
                                                                  "Close relationship with adjacent structures"};

std::string_view option_name(Shape v) noexcept;
std::string_view option_name(Density v) noexcept;
std::string_view option_name(Heterogeneity v) noexcept;
std::string_view option_name(Surface v) noexcept;
std::string_view option_name(Invasion v) noexcept;
std::string_view enhancement_name(Modality m) noexcept;

/// Lesion extents in mm, in report order (Z x X x Y). Z runs inferior to
/// superior, X right to left, Y anterior to posterior.
struct SizeMm {
    double z = 0.0;
    double x = 0.0;
    double y = 0.0;

    double min() const noexcept { return std::min({z, x, y}); }
    friend bool operator==(const SizeMm&, const SizeMm&) = default;
};

struct LesionSpec {
    LesionType type = LesionType::LiverCyst;
    Modality enhancement = Modality::Enhanced;
    SizeMm size;
    Shape shape = Shape::RoundLike;
    Density density = Density::Hypodense;
    Heterogeneity heterogeneity = Heterogeneity::Homogeneous;
    Surface surface = Surface::WellDefined;
    Invasion invasion = Invasion::NoCloseRelationship;
    std::uint64_t seed = 0;

    Organ organ() const noexcept { return target_organ(type); }
    friend bool operator==(const LesionSpec&, const LesionSpec&) = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct TypeParams {
    std::array<double, 3> log_mean{};   // z, x, y
    std::array<double, 3> log_sigma{};  // z, x, y
    std::array<double, 4> shape_weights{};
    std::array<double, 3> density_weights{};
    std::array<double, 2> heterogeneity_weights{};
    std::array<double, 2> surface_weights{};
    std::array<double, 2> invasion_weights{};
};

/// Sampling distributions plus the intensity/geometry knobs the synthesis
/// stages read. Shipped defaults are illustrative and sized for small grids.
struct SamplingParams {
    std::array<TypeParams, kLesionTypeCount> types{};
    Interval size_bounds_mm{3.0, 120.0};

    std::array<Interval, 3> density_offset_hu{{{-100.0, -20.0}, {-5.0, 5.0}, {20.0, 400.0}}};
    double homogeneous_sigma_hu = 3.0;
    Interval heterogeneity_amplitude_hu{25.0, 60.0};
    double noise_lattice_mm = 8.0;
    Interval blur_well_mm{0.3, 0.8};
    Interval blur_ill_mm{1.5, 4.0};
    Interval invasion_depth_mm{2.0, 10.0};
    double invasion_cone_deg = 35.0;
    double ring_mm = 3.0;
    double irregular_amplitude = 0.25;
    int punctate_max_foci = 4;
    double lumen_max_hu = -200.0;

    const TypeParams& of(LesionType t) const noexcept { return types[static_cast<std::size_t>(t) - 11]; }
    TypeParams& of(LesionType t) noexcept { return types[static_cast<std::size_t>(t) - 11]; }

    static SamplingParams defaults();
    /// Throws InvalidInput on sigma <= 0, negative or non-normalisable weights, or unordered bounds.
    void validate() const;

    nlohmann::json to_json() const;
    /// Missing keys keep their defaults.
    static SamplingParams from_json(const nlohmann::json& j);
    static SamplingParams load(const std::filesystem::path& path);
};

/// Draws a spec: per-axis log-normal size clamped to bounds (rounded to
/// 0.1 mm so the report round-trips), categorical attributes from the type's
/// weights, and the benign invasion rule. `enhancement` pins the phase; when
/// absent it is drawn uniformly from the phases the type accepts.
LesionSpec sample_spec(LesionType type, const SamplingParams& params, std::uint64_t seed,
                       std::optional<Modality> enhancement = std::nullopt);

/// Throws InvalidInput naming the first violated invariant.
void validate_spec(const LesionSpec& spec, const SamplingParams& params);

/// The eight attributes as their option strings.
struct StructuredReport {
    std::string enhancement;
    std::string location;
    std::string size;
    std::string shape;
    std::string density;
    std::string heterogeneity;
    std::string surface;
    std::string invasion;

    friend bool operator==(const StructuredReport&, const StructuredReport&) = default;
};

/// "25×40×38 mm"; at most one decimal per extent.
std::string format_size(const SizeMm& size);
/// Accepts "×" or "x" as the separator. Throws InvalidInput on malformed text.
SizeMm parse_size(std::string_view text);

StructuredReport render_report(const LesionSpec& spec);
/// Throws InvalidInput if any field is not a legal option.
void validate_report(const StructuredReport& report);
/// True when the report carries exactly the spec's attributes.
bool report_matches(const StructuredReport& report, const LesionSpec& spec);

/// (shape, density, heterogeneity, surface, invasion) option indices.
using ReportLabels = std::array<int, 5>;
inline constexpr std::array<int, 5> kLabelCardinalities{4, 3, 2, 2, 2};
ReportLabels report_class_labels(const StructuredReport& report);

nlohmann::ordered_json report_to_json(const StructuredReport& report);
StructuredReport report_from_json(const nlohmann::json& j);

}  // namespace pastagen
