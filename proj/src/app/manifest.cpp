#include <fstream>
#include <sstream>

#include "common.hpp"
#include "pastagen/error.hpp"
#include "pastagen/io.hpp"
#include "pastagen/nifti.hpp"

namespace pastagen {

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
    const std::string text = read_text_file(path);
    std::vector<nlohmann::json> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidInput(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
        if (!rows.back().is_object()) throw InvalidInput(path.string() + ":" + std::to_string(number) + ": row is not an object");
    }
    return rows;
}

void write_jsonl_atomic(const fs::path& path, const std::vector<nlohmann::json>& rows) {
    std::string text;
    for (const auto& r : rows) text += r.dump() + "\n";
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, text);
}

fs::path resolve_path(const fs::path& manifest, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return p;
    return manifest.parent_path() / p;
}

nlohmann::ordered_json record_to_json(const ScanRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["image"] = r.image_path;
    j["labels"] = r.labels_path;
    j["impression"] = r.impression;
    j["landmarks"] = {{"t1", r.landmarks.t1},
                      {"t8", r.landmarks.t8},
                      {"l5", r.landmarks.l5},
                      {"left_upper_lobe", r.landmarks.left_upper_lobe},
                      {"right_upper_lobe", r.landmarks.right_upper_lobe},
                      {"bladder", r.landmarks.bladder}};
    j["aorta_mean_hu"] = r.aorta_mean_hu ? nlohmann::json(*r.aorta_mean_hu) : nlohmann::json(nullptr);
    j["ivc_mean_hu"] = r.ivc_mean_hu ? nlohmann::json(*r.ivc_mean_hu) : nlohmann::json(nullptr);
    nlohmann::ordered_json vol, healthy;
    for (Organ o : kAllOrgans) {
        vol[std::string(organ_key(o))] = r.volume_of(o);
        healthy[std::string(organ_key(o))] = r.healthy_organ(o);
    }
    j["organ_volume_mm3"] = vol;
    j["scan_range"] = scan_range_name(r.scan_range);
    j["modality"] = r.modality ? nlohmann::json(modality_name(*r.modality)) : nlohmann::json(nullptr);
    j["healthy"] = healthy;
    return j;
}

namespace {

std::optional<double> optional_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

ScanRecord record_from_json(const nlohmann::json& j) {
    try {
        ScanRecord r;
        r.id = j.at("id").get<std::string>();
        r.image_path = j.value("image", "");
        r.labels_path = j.value("labels", "");
        r.impression = j.value("impression", "");
        if (j.contains("landmarks")) {
            const auto& l = j.at("landmarks");
            r.landmarks.t1 = l.value("t1", false);
            r.landmarks.t8 = l.value("t8", false);
            r.landmarks.l5 = l.value("l5", false);
            r.landmarks.left_upper_lobe = l.value("left_upper_lobe", false);
            r.landmarks.right_upper_lobe = l.value("right_upper_lobe", false);
            r.landmarks.bladder = l.value("bladder", false);
        }
        r.aorta_mean_hu = optional_number(j, "aorta_mean_hu");
        r.ivc_mean_hu = optional_number(j, "ivc_mean_hu");
        if (j.contains("organ_volume_mm3")) {
            for (const auto& [key, value] : j.at("organ_volume_mm3").items()) {
                const auto o = organ_from_key(key);
                if (!o) throw InvalidInput("record " + r.id + ": unknown organ '" + key + "'");
                r.organ_volume_mm3[class_id(*o) - 1] = value.get<double>();
            }
        }
        if (j.contains("scan_range")) {
            const auto s = scan_range_from_name(j.at("scan_range").get<std::string>());
            if (!s) throw InvalidInput("record " + r.id + ": unknown scan range");
            r.scan_range = *s;
        }
        if (j.contains("modality") && !j.at("modality").is_null()) {
            const auto m = modality_from_name(j.at("modality").get<std::string>());
            if (!m) throw InvalidInput("record " + r.id + ": unknown modality");
            r.modality = *m;
        }
        if (j.contains("healthy")) {
            for (const auto& [key, value] : j.at("healthy").items()) {
                const auto o = organ_from_key(key);
                if (!o) throw InvalidInput("record " + r.id + ": unknown organ '" + key + "'");
                r.healthy[class_id(*o) - 1] = value.get<bool>();
            }
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("manifest row: ") + e.what());
    }
}

namespace app_detail {

LoadedScan load_scan(const fs::path& image, const fs::path& labels, const std::optional<fs::path>& structures) {
    LoadedScan s{resample_isotropic_1mm(canonicalize_orientation(read_volume(image))),
                 resample_labels_1mm(canonicalize_orientation(read_labels(labels))), std::nullopt};
    if (!(s.organs.geometry() == s.image.geometry()))
        throw InvalidInput(labels.string() + " does not share the geometry of " + image.string());
    if (structures) {
        s.structures = resample_labels_1mm(canonicalize_orientation(read_labels(*structures)));
        if (!(s.structures->geometry() == s.image.geometry()))
            throw InvalidInput(structures->string() + " does not share the geometry of " + image.string());
    }
    return s;
}

std::string json_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw InvalidInput(std::string("manifest row lacks string field '") + key + "'");
    return j.at(key).get<std::string>();
}

}  // namespace app_detail

}  // namespace pastagen
