#include "pastagen/lesion_model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "pastagen/error.hpp"
#include "pastagen/io.hpp"
#include "pastagen/rng.hpp"

namespace pastagen {

namespace {

template <class E, std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& options, E v) noexcept {
    return options[static_cast<std::size_t>(v)];
}

template <std::size_t N>
int index_of(const std::array<std::string_view, N>& options, std::string_view value, const char* attribute) {
    for (std::size_t i = 0; i < N; ++i)
        if (options[i] == value) return static_cast<int>(i);
    throw InvalidInput(std::string("unknown ") + attribute + " option '" + std::string(value) + "'");
}

TypeParams make_type(double z_med, double x_med, double y_med, std::array<double, 4> shape, std::array<double, 3> density,
                     std::array<double, 2> hetero, std::array<double, 2> surface, std::array<double, 2> invasion) {
    TypeParams p;
    p.log_mean = {std::log(z_med), std::log(x_med), std::log(y_med)};
    p.log_sigma = {0.25, 0.25, 0.25};
    p.shape_weights = shape;
    p.density_weights = density;
    p.heterogeneity_weights = hetero;
    p.surface_weights = surface;
    p.invasion_weights = invasion;
    return p;
}

constexpr std::array<double, 2> kBenignInvasion{1.0, 0.0};

template <std::size_t N>
void check_weights(const std::array<double, N>& w, const std::string& what) {
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidInput(what + ": weights must be finite and >= 0");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-6) throw InvalidInput(what + ": weights must sum to 1");
}

void check_interval(const Interval& i, const std::string& what) {
    if (!std::isfinite(i.lo) || !std::isfinite(i.hi) || i.lo > i.hi) throw InvalidInput(what + ": bounds must be ordered");
}

double round_tenth(double v) { return std::round(v * 10.0) / 10.0; }

template <std::size_t N>
nlohmann::ordered_json weights_json(const std::array<double, N>& w, const std::array<std::string_view, N>& names) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < N; ++i) j[std::string(names[i])] = w[i];
    return j;
}

template <std::size_t N>
void read_weights(const nlohmann::json& j, std::array<double, N>& w, const std::array<std::string_view, N>& names,
                  const std::string& what) {
    if (!j.is_object()) throw InvalidInput(what + ": expected an object of option weights");
    std::array<double, N> out{};
    for (auto it = j.begin(); it != j.end(); ++it) out[static_cast<std::size_t>(index_of(names, it.key(), what.c_str()))] = it.value().get<double>();
    w = out;
}

nlohmann::ordered_json interval_json(const Interval& i) { return nlohmann::ordered_json::array({i.lo, i.hi}); }

void read_interval(const nlohmann::json& j, const char* key, Interval& out) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw InvalidInput(std::string(key) + ": expected [lo, hi]");
    out = {a[0].get<double>(), a[1].get<double>()};
}

template <class T>
void read_scalar(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string_view option_name(Shape v) noexcept { return pick(kShapeOptions, v); }
std::string_view option_name(Density v) noexcept { return pick(kDensityOptions, v); }
std::string_view option_name(Heterogeneity v) noexcept { return pick(kHeterogeneityOptions, v); }
std::string_view option_name(Surface v) noexcept { return pick(kSurfaceOptions, v); }
std::string_view option_name(Invasion v) noexcept { return pick(kInvasionOptions, v); }
std::string_view enhancement_name(Modality m) noexcept { return m == Modality::Enhanced ? kEnhancementOptions[0] : kEnhancementOptions[1]; }

SamplingParams SamplingParams::defaults() {
    SamplingParams p;
    // shape: round, irregular, wall, punctate | density: hypo, iso, hyper
    // heterogeneity: homo, hetero | surface: well, ill | invasion: none, close
    p.of(LesionType::LungTumor) = make_type(14, 14, 14, {0.4, 0.4, 0.0, 0.2}, {0.3, 0.6, 0.1}, {0.5, 0.5}, {0.4, 0.6}, {0.6, 0.4});
    p.of(LesionType::LiverTumor) = make_type(16, 16, 16, {0.5, 0.5, 0.0, 0.0}, {0.8, 0.1, 0.1}, {0.4, 0.6}, {0.5, 0.5}, {0.7, 0.3});
    p.of(LesionType::GallbladderCancer) = make_type(14, 12, 12, {0.0, 0.4, 0.6, 0.0}, {0.3, 0.4, 0.3}, {0.4, 0.6}, {0.3, 0.7}, {0.5, 0.5});
    p.of(LesionType::PancreasTumor) = make_type(12, 12, 12, {0.4, 0.6, 0.0, 0.0}, {0.8, 0.2, 0.0}, {0.4, 0.6}, {0.3, 0.7}, {0.6, 0.4});
    p.of(LesionType::EsophagealCancer) = make_type(18, 10, 10, {0.0, 0.3, 0.7, 0.0}, {0.2, 0.7, 0.1}, {0.5, 0.5}, {0.4, 0.6}, {0.5, 0.5});
    p.of(LesionType::GastricCancer) = make_type(16, 14, 14, {0.0, 0.3, 0.7, 0.0}, {0.2, 0.5, 0.3}, {0.5, 0.5}, {0.4, 0.6}, {0.5, 0.5});
    p.of(LesionType::ColorectalCancer) = make_type(14, 12, 12, {0.0, 0.3, 0.7, 0.0}, {0.2, 0.6, 0.2}, {0.5, 0.5}, {0.4, 0.6}, {0.5, 0.5});
    p.of(LesionType::KidneyTumor) = make_type(14, 14, 14, {0.6, 0.4, 0.0, 0.0}, {0.6, 0.2, 0.2}, {0.3, 0.7}, {0.6, 0.4}, {0.7, 0.3});
    p.of(LesionType::BladderCancer) = make_type(12, 12, 12, {0.0, 0.3, 0.5, 0.2}, {0.1, 0.5, 0.4}, {0.5, 0.5}, {0.4, 0.6}, {0.6, 0.4});
    p.of(LesionType::BoneMetastasis) = make_type(12, 12, 12, {0.3, 0.5, 0.0, 0.2}, {0.5, 0.1, 0.4}, {0.3, 0.7}, {0.3, 0.7}, {0.7, 0.3});
    p.of(LesionType::LiverCyst) = make_type(12, 12, 12, {1.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, kBenignInvasion);
    p.of(LesionType::Gallstone) = make_type(7, 7, 7, {0.6, 0.0, 0.0, 0.4}, {0.1, 0.1, 0.8}, {0.8, 0.2}, {1.0, 0.0}, kBenignInvasion);
    p.of(LesionType::PancreasCyst) = make_type(10, 10, 10, {0.8, 0.2, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.9, 0.1}, {0.9, 0.1}, kBenignInvasion);
    p.of(LesionType::KidneyCyst) = make_type(10, 10, 10, {1.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, kBenignInvasion);
    p.of(LesionType::KidneyStone) = make_type(5, 5, 5, {0.4, 0.0, 0.0, 0.6}, {0.0, 0.0, 1.0}, {0.8, 0.2}, {1.0, 0.0}, kBenignInvasion);
    return p;
}

void SamplingParams::validate() const {
    for (LesionType t : kAllLesionTypes) {
        const std::string name(lesion_name(t));
        const TypeParams& tp = of(t);
        for (int a = 0; a < 3; ++a) {
            if (!(tp.log_sigma[a] > 0.0) || !std::isfinite(tp.log_sigma[a])) throw InvalidInput(name + ": size sigma must be > 0");
            if (!std::isfinite(tp.log_mean[a])) throw InvalidInput(name + ": size mu must be finite");
        }
        check_weights(tp.shape_weights, name + " shape");
        check_weights(tp.density_weights, name + " density");
        check_weights(tp.heterogeneity_weights, name + " heterogeneity");
        check_weights(tp.surface_weights, name + " surface");
        check_weights(tp.invasion_weights, name + " invasion");
    }
    check_interval(size_bounds_mm, "size bounds");
    if (!(size_bounds_mm.lo > 0.0)) throw InvalidInput("size bounds must be > 0");
    for (std::size_t i = 0; i < 3; ++i) check_interval(density_offset_hu[i], std::string(kDensityOptions[i]) + " offset");
    if (!(density_offset_hu[0].hi < 0.0)) throw InvalidInput("hypodense offsets must be < 0");
    if (!(density_offset_hu[2].lo > 0.0)) throw InvalidInput("hyperdense offsets must be > 0");
    check_interval(heterogeneity_amplitude_hu, "heterogeneity amplitude");
    check_interval(blur_well_mm, "well-defined blur");
    check_interval(blur_ill_mm, "ill-defined blur");
    check_interval(invasion_depth_mm, "invasion depth");
    if (blur_well_mm.lo < 0.0 || invasion_depth_mm.lo < 0.0 || heterogeneity_amplitude_hu.lo < 0.0)
        throw InvalidInput("blur, depth and amplitude bounds must be >= 0");
    if (!(homogeneous_sigma_hu >= 0.0) || !(noise_lattice_mm > 0.0) || !(ring_mm > 0.0) || !(irregular_amplitude >= 0.0) ||
        punctate_max_foci < 1 || !(invasion_cone_deg > 0.0 && invasion_cone_deg < 90.0))
        throw InvalidInput("invalid synthesis parameter");
}

nlohmann::json SamplingParams::to_json() const {
    nlohmann::ordered_json j;
    j["size_bounds_mm"] = interval_json(size_bounds_mm);
    nlohmann::ordered_json offsets;
    for (std::size_t i = 0; i < 3; ++i) offsets[std::string(kDensityOptions[i])] = interval_json(density_offset_hu[i]);
    j["density_offset_hu"] = offsets;
    j["homogeneous_sigma_hu"] = homogeneous_sigma_hu;
    j["heterogeneity_amplitude_hu"] = interval_json(heterogeneity_amplitude_hu);
    j["noise_lattice_mm"] = noise_lattice_mm;
    j["blur_well_mm"] = interval_json(blur_well_mm);
    j["blur_ill_mm"] = interval_json(blur_ill_mm);
    j["invasion_depth_mm"] = interval_json(invasion_depth_mm);
    j["invasion_cone_deg"] = invasion_cone_deg;
    j["ring_mm"] = ring_mm;
    j["irregular_amplitude"] = irregular_amplitude;
    j["punctate_max_foci"] = punctate_max_foci;
    j["lumen_max_hu"] = lumen_max_hu;
    nlohmann::ordered_json types;
    for (LesionType t : kAllLesionTypes) {
        const TypeParams& tp = of(t);
        nlohmann::ordered_json e;
        e["size_log_mean_zxy"] = tp.log_mean;
        e["size_log_sigma_zxy"] = tp.log_sigma;
        e["shape"] = weights_json(tp.shape_weights, kShapeOptions);
        e["density"] = weights_json(tp.density_weights, kDensityOptions);
        e["heterogeneity"] = weights_json(tp.heterogeneity_weights, kHeterogeneityOptions);
        e["surface"] = weights_json(tp.surface_weights, kSurfaceOptions);
        e["invasion"] = weights_json(tp.invasion_weights, kInvasionOptions);
        types[std::string(lesion_key(t))] = e;
    }
    j["types"] = types;
    return j;
}

SamplingParams SamplingParams::from_json(const nlohmann::json& j) {
    SamplingParams p = defaults();
    try {
        read_interval(j, "size_bounds_mm", p.size_bounds_mm);
        if (j.contains("density_offset_hu")) {
            const auto& o = j.at("density_offset_hu");
            for (std::size_t i = 0; i < 3; ++i) read_interval(o, std::string(kDensityOptions[i]).c_str(), p.density_offset_hu[i]);
        }
        read_scalar(j, "homogeneous_sigma_hu", p.homogeneous_sigma_hu);
        read_interval(j, "heterogeneity_amplitude_hu", p.heterogeneity_amplitude_hu);
        read_scalar(j, "noise_lattice_mm", p.noise_lattice_mm);
        read_interval(j, "blur_well_mm", p.blur_well_mm);
        read_interval(j, "blur_ill_mm", p.blur_ill_mm);
        read_interval(j, "invasion_depth_mm", p.invasion_depth_mm);
        read_scalar(j, "invasion_cone_deg", p.invasion_cone_deg);
        read_scalar(j, "ring_mm", p.ring_mm);
        read_scalar(j, "irregular_amplitude", p.irregular_amplitude);
        read_scalar(j, "punctate_max_foci", p.punctate_max_foci);
        read_scalar(j, "lumen_max_hu", p.lumen_max_hu);
        if (j.contains("types")) {
            for (auto it = j.at("types").begin(); it != j.at("types").end(); ++it) {
                const auto t = lesion_from_name(it.key());
                if (!t) throw InvalidInput("unknown lesion type '" + it.key() + "'");
                TypeParams& tp = p.of(*t);
                const auto& e = it.value();
                if (e.contains("size_log_mean_zxy")) tp.log_mean = e.at("size_log_mean_zxy").get<std::array<double, 3>>();
                if (e.contains("size_log_sigma_zxy")) tp.log_sigma = e.at("size_log_sigma_zxy").get<std::array<double, 3>>();
                if (e.contains("shape")) read_weights(e.at("shape"), tp.shape_weights, kShapeOptions, "shape");
                if (e.contains("density")) read_weights(e.at("density"), tp.density_weights, kDensityOptions, "density");
                if (e.contains("heterogeneity"))
                    read_weights(e.at("heterogeneity"), tp.heterogeneity_weights, kHeterogeneityOptions, "heterogeneity");
                if (e.contains("surface")) read_weights(e.at("surface"), tp.surface_weights, kSurfaceOptions, "surface");
                if (e.contains("invasion")) read_weights(e.at("invasion"), tp.invasion_weights, kInvasionOptions, "invasion");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("sampling params: ") + e.what());
    }
    p.validate();
    return p;
}

SamplingParams SamplingParams::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

LesionSpec sample_spec(LesionType type, const SamplingParams& params, std::uint64_t seed, std::optional<Modality> enhancement) {
    if (static_cast<int>(type) < 11 || static_cast<int>(type) > 25) throw InvalidInput("unknown lesion type");
    const TypeParams& tp = params.of(type);
    Rng rng(derive_seed(seed, "spec"));

    LesionSpec s;
    s.type = type;
    s.seed = seed;

    const bool plain = accepts_modality(type, Modality::Plain);
    const bool enh = accepts_modality(type, Modality::Enhanced);
    const double phase_draw = rng.uniform();
    if (enhancement) {
        if (!accepts_modality(type, *enhancement)) throw InvalidInput("lesion type does not accept the requested phase");
        s.enhancement = *enhancement;
    } else if (plain && enh) {
        s.enhancement = phase_draw < 0.5 ? Modality::Plain : Modality::Enhanced;
    } else {
        s.enhancement = plain ? Modality::Plain : Modality::Enhanced;
    }

    std::array<double, 3> zxy{};
    for (int a = 0; a < 3; ++a) {
        const double v = rng.lognormal(tp.log_mean[a], tp.log_sigma[a]);
        zxy[a] = round_tenth(std::clamp(v, params.size_bounds_mm.lo, params.size_bounds_mm.hi));
    }
    s.size = {zxy[0], zxy[1], zxy[2]};

    s.shape = static_cast<Shape>(rng.choose(tp.shape_weights));
    s.density = static_cast<Density>(rng.choose(tp.density_weights));
    s.heterogeneity = static_cast<Heterogeneity>(rng.choose(tp.heterogeneity_weights));
    s.surface = static_cast<Surface>(rng.choose(tp.surface_weights));
    s.invasion = static_cast<Invasion>(rng.choose(tp.invasion_weights));
    if (is_benign(type)) s.invasion = Invasion::NoCloseRelationship;
    return s;
}

void validate_spec(const LesionSpec& spec, const SamplingParams& params) {
    const auto& b = params.size_bounds_mm;
    for (double v : {spec.size.z, spec.size.x, spec.size.y})
        if (!(v > 0.0) || v < b.lo - 0.05 || v > b.hi + 0.05) throw InvalidInput("lesion size outside the configured bounds");
    if (is_benign(spec.type) && spec.invasion != Invasion::NoCloseRelationship)
        throw InvalidInput("benign lesions cannot be invasive");
    if (!(params.of(spec.type).shape_weights[static_cast<std::size_t>(spec.shape)] > 0.0))
        throw InvalidInput(std::string(option_name(spec.shape)) + " is not a shape of " + std::string(lesion_name(spec.type)));
    if (!accepts_modality(spec.type, spec.enhancement)) throw InvalidInput("phase not accepted for this lesion type");
}

std::string format_size(const SizeMm& size) {
    auto one = [](double v) {
        char buf[32];
        const double r = round_tenth(v);
        if (r == std::floor(r)) std::snprintf(buf, sizeof(buf), "%.0f", r);
        else std::snprintf(buf, sizeof(buf), "%.1f", r);
        return std::string(buf);
    };
    return one(size.z) + "×" + one(size.x) + "×" + one(size.y) + " mm";
}

SizeMm parse_size(std::string_view text) {
    std::string s(text);
    const std::string times = "×";
    for (std::size_t p; (p = s.find(times)) != std::string::npos;) s.replace(p, times.size(), "x");
    if (s.size() < 3 || s.compare(s.size() - 3, 3, " mm") != 0) throw InvalidInput("size must end with ' mm': " + std::string(text));
    s.resize(s.size() - 3);
    std::array<double, 3> v{};
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t end = i < 2 ? s.find('x', start) : s.size();
        if (end == std::string::npos) throw InvalidInput("size needs three extents: " + std::string(text));
        const std::string part = s.substr(start, end - start);
        char* stop = nullptr;
        v[i] = std::strtod(part.c_str(), &stop);
        if (part.empty() || *stop != '\0' || !(v[i] > 0.0)) throw InvalidInput("bad size extent '" + part + "'");
        start = end + 1;
    }
    return {v[0], v[1], v[2]};
}

StructuredReport render_report(const LesionSpec& spec) {
    StructuredReport r;
    r.enhancement = enhancement_name(spec.enhancement);
    r.location = location_name(spec.organ());
    r.size = format_size(spec.size);
    r.shape = option_name(spec.shape);
    r.density = option_name(spec.density);
    r.heterogeneity = option_name(spec.heterogeneity);
    r.surface = option_name(spec.surface);
    r.invasion = option_name(spec.invasion);
    return r;
}

void validate_report(const StructuredReport& r) {
    index_of(kEnhancementOptions, r.enhancement, "enhancement");
    if (!organ_from_location(r.location)) throw InvalidInput("unknown location option '" + r.location + "'");
    parse_size(r.size);
    report_class_labels(r);
}

bool report_matches(const StructuredReport& report, const LesionSpec& spec) {
    try {
        validate_report(report);
        const SizeMm size = parse_size(report.size);
        const ReportLabels labels = report_class_labels(report);
        return report.enhancement == enhancement_name(spec.enhancement) &&
               organ_from_location(report.location) == spec.organ() && size == spec.size &&
               labels == ReportLabels{int(spec.shape), int(spec.density), int(spec.heterogeneity), int(spec.surface),
                                      int(spec.invasion)};
    } catch (const InvalidInput&) {
        return false;
    }
}

ReportLabels report_class_labels(const StructuredReport& r) {
    return {index_of(kShapeOptions, r.shape, "shape"), index_of(kDensityOptions, r.density, "density"),
            index_of(kHeterogeneityOptions, r.heterogeneity, "heterogeneity"), index_of(kSurfaceOptions, r.surface, "surface"),
            index_of(kInvasionOptions, r.invasion, "invasion")};
}

nlohmann::ordered_json report_to_json(const StructuredReport& r) {
    nlohmann::ordered_json j;
    j["enhancement"] = r.enhancement;
    j["location"] = r.location;
    j["size_mm"] = r.size;
    j["shape"] = r.shape;
    j["density"] = r.density;
    j["heterogeneity"] = r.heterogeneity;
    j["surface"] = r.surface;
    j["invasion"] = r.invasion;
    return j;
}

StructuredReport report_from_json(const nlohmann::json& j) {
    static constexpr std::array<const char*, 8> kKeys{"enhancement", "location", "size_mm", "shape",
                                                      "density", "heterogeneity", "surface", "invasion"};
    if (!j.is_object() || j.size() != kKeys.size()) throw InvalidInput("report must be an object with exactly 8 keys");
    for (const char* k : kKeys)
        if (!j.contains(k) || !j.at(k).is_string()) throw InvalidInput(std::string("report missing string field '") + k + "'");
    StructuredReport r;
    r.enhancement = j.at("enhancement").get<std::string>();
    r.location = j.at("location").get<std::string>();
    r.size = j.at("size_mm").get<std::string>();
    r.shape = j.at("shape").get<std::string>();
    r.density = j.at("density").get<std::string>();
    r.heterogeneity = j.at("heterogeneity").get<std::string>();
    r.surface = j.at("surface").get<std::string>();
    r.invasion = j.at("invasion").get<std::string>();
    validate_report(r);
    return r;
}

}  // namespace pastagen
