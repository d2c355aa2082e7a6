#include "pastagen/curation.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>

#include "pastagen/error.hpp"
#include "pastagen/io.hpp"

namespace pastagen {

std::string_view scan_range_name(ScanRange r) noexcept {
    switch (r) {
        case ScanRange::Thorax: return "Thorax";
        case ScanRange::AbdomenPelvis: return "AbdomenPelvis";
        case ScanRange::ThoraxAbdomenPelvis: return "ThoraxAbdomenPelvis";
        case ScanRange::Other: return "Other";
    }
    return "Other";
}

std::optional<ScanRange> scan_range_from_name(std::string_view name) noexcept {
    for (ScanRange r : {ScanRange::Thorax, ScanRange::AbdomenPelvis, ScanRange::ThoraxAbdomenPelvis, ScanRange::Other})
        if (scan_range_name(r) == name) return r;
    return std::nullopt;
}

ScanRange classify_scan_range(const RangeLandmarks& p) noexcept {
    const bool chest = p.t1 && p.left_upper_lobe && p.right_upper_lobe;
    if (chest && p.bladder) return ScanRange::ThoraxAbdomenPelvis;
    if (chest && !p.l5) return ScanRange::Thorax;
    if (p.t8 && p.bladder && !p.t1) return ScanRange::AbdomenPelvis;
    return ScanRange::Other;
}

Modality classify_contrast(double aorta_mean_hu, double ivc_mean_hu) noexcept {
    return (aorta_mean_hu < kContrastThresholdHu && ivc_mean_hu < kContrastThresholdHu) ? Modality::Plain
                                                                                      : Modality::Enhanced;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(char(std::tolower(c)));
    }
    return out;
}

bool is_healthy_organ(double organ_volume_mm3, std::string_view impression, std::span<const std::string> keywords) {
    if (keywords.empty()) throw InvalidInput("keyword list must not be empty");
    if (!(organ_volume_mm3 > kMinHealthyOrganMm3)) return false;
    const std::string text = normalize_text(impression);
    for (const auto& kw : keywords) {
        const std::string k = normalize_text(kw);
        if (!k.empty() && text.find(k) != std::string::npos) return false;
    }
    return true;
}

KeywordConfig KeywordConfig::defaults() {
    KeywordConfig c;
    c.keywords_ = {
        {Organ::Lung, {"lung", "pulmonary", "lobe", "bronch", "pleura"}},
        {Organ::Liver, {"liver", "hepatic", "hepato"}},
        {Organ::Gallbladder, {"gallbladder", "cholecyst", "gallstone", "biliary"}},
        {Organ::Pancreas, {"pancrea"}},
        {Organ::Esophagus, {"esophag", "oesophag"}},
        {Organ::Stomach, {"stomach", "gastric"}},
        {Organ::Colorectum, {"colon", "colorectal", "rectum", "rectal", "sigmoid", "cecum", "caecum", "bowel"}},
        {Organ::Kidney, {"kidney", "renal", "nephr"}},
        {Organ::Bladder, {"bladder", "vesical"}},
        {Organ::Bone, {"bone", "osseous", "vertebra", "skelet", "fracture", "lytic", "sclerotic"}},
    };
    return c;
}

KeywordConfig KeywordConfig::from_json_text(std::string_view text) {
    KeywordConfig c = defaults();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("keyword config: ") + e.what());
    }
    if (!j.is_object()) throw IoError("keyword config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto organ = organ_from_key(it.key());
        if (!organ) throw IoError("keyword config: unknown organ '" + it.key() + "'");
        if (!it.value().is_array() || it.value().empty()) throw IoError("keyword config: '" + it.key() + "' needs a non-empty array");
        std::vector<std::string> words;
        for (const auto& w : it.value()) words.push_back(w.get<std::string>());
        c.keywords_[*organ] = std::move(words);
    }
    return c;
}

KeywordConfig KeywordConfig::load(const std::filesystem::path& path) { return from_json_text(read_text_file(path)); }

const std::vector<std::string>& KeywordConfig::keywords(Organ organ) const { return keywords_.at(organ); }

std::string KeywordConfig::to_json_text() const {
    nlohmann::ordered_json j;
    for (const auto& [organ, words] : keywords_) j[std::string(organ_key(organ))] = words;
    return j.dump(2);
}

bool range_covers(ScanRange range, Organ organ) noexcept {
    switch (range) {
        case ScanRange::ThoraxAbdomenPelvis: return true;
        case ScanRange::Thorax: return organ == Organ::Lung || organ == Organ::Esophagus || organ == Organ::Bone;
        case ScanRange::AbdomenPelvis: return organ != Organ::Lung && organ != Organ::Esophagus;
        case ScanRange::Other: return false;
    }
    return false;
}

ScanMeasurements measure_scan(const Volume3D& image, const LabelMap& organs, const LabelMap* structures) {
    if (!(organs.geometry() == image.geometry())) throw InvalidInput("organ labels and image differ in geometry");
    if (structures && !(structures->geometry() == image.geometry()))
        throw InvalidInput("structure labels and image differ in geometry");
    ScanMeasurements m;
    std::array<std::size_t, 256> organ_counts{};
    for (std::size_t i = 0; i < organs.size(); ++i) ++organ_counts[organs[i]];
    const double vv = image.geometry().voxel_volume_mm3();
    for (Organ o : kAllOrgans) m.organ_volume_mm3[class_id(o) - 1] = double(organ_counts[class_id(o)]) * vv;
    m.landmarks.bladder = organ_counts[class_id(Organ::Bladder)] > 0;

    if (structures) {
        std::array<std::size_t, 256> counts{};
        double aorta_sum = 0.0, ivc_sum = 0.0;
        for (std::size_t i = 0; i < structures->size(); ++i) {
            const auto s = (*structures)[i];
            ++counts[s];
            if (s == std::uint8_t(AuxStructure::Aorta)) aorta_sum += image[i];
            if (s == std::uint8_t(AuxStructure::InferiorVenaCava)) ivc_sum += image[i];
        }
        auto present = [&](AuxStructure a) { return counts[std::uint8_t(a)] > 0; };
        m.landmarks.t1 = present(AuxStructure::T1);
        m.landmarks.t8 = present(AuxStructure::T8);
        m.landmarks.l5 = present(AuxStructure::L5);
        m.landmarks.left_upper_lobe = present(AuxStructure::LeftUpperLobe);
        m.landmarks.right_upper_lobe = present(AuxStructure::RightUpperLobe);
        if (present(AuxStructure::Aorta)) m.aorta_mean_hu = aorta_sum / double(counts[std::uint8_t(AuxStructure::Aorta)]);
        if (present(AuxStructure::InferiorVenaCava))
            m.ivc_mean_hu = ivc_sum / double(counts[std::uint8_t(AuxStructure::InferiorVenaCava)]);
    }
    return m;
}

void curate_record(ScanRecord& record, const KeywordConfig& keywords) {
    for (double v : record.organ_volume_mm3)
        if (!(v >= 0.0)) throw InvalidInput("record " + record.id + ": organ volumes must be >= 0");
    record.scan_range = classify_scan_range(record.landmarks);
    const auto& a = record.aorta_mean_hu;
    const auto& v = record.ivc_mean_hu;
    if ((a && !std::isfinite(*a)) || (v && !std::isfinite(*v))) throw InvalidInput("record " + record.id + ": vessel HU mean not finite");
    if (a && v) {
        record.modality = classify_contrast(*a, *v);
    } else if (a || v) {
        const double only = a ? *a : *v;
        record.modality = classify_contrast(only, only);
    } else {
        record.modality.reset();
    }
    for (Organ o : kAllOrgans)
        record.healthy[class_id(o) - 1] = is_healthy_organ(record.volume_of(o), record.impression, keywords.keywords(o));
}

bool template_accepts(const ScanRecord& r, LesionType lesion) noexcept {
    const Organ organ = target_organ(lesion);
    return r.modality && accepts_modality(lesion, *r.modality) && range_covers(r.scan_range, organ) && r.healthy_organ(organ);
}

std::vector<ScanRecord> select_templates(std::span<const ScanRecord> records, LesionType lesion) {
    std::vector<ScanRecord> out;
    for (const auto& r : records)
        if (template_accepts(r, lesion)) out.push_back(r);
    if (out.empty()) {
        std::string modes;
        for (Modality m : {Modality::Plain, Modality::Enhanced})
            if (accepts_modality(lesion, m)) modes += (modes.empty() ? "" : "/") + std::string(modality_name(m));
        throw CurationError("no template for (" + std::string(lesion_name(lesion)) + ", " + modes + ")");
    }
    return out;
}

}  // namespace pastagen
