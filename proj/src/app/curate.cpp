#include <iostream>

#include "common.hpp"
#include "pastagen/error.hpp"

namespace pastagen {

using app_detail::json_string;

CurateResult cmd_curate(const CurateOptions& opt) {
    const KeywordConfig keywords = opt.keywords ? KeywordConfig::load(*opt.keywords) : KeywordConfig::defaults();
    const auto rows = read_jsonl(opt.manifest);
    if (rows.empty()) throw InvalidInput("no records");

    CurateResult result;
    std::vector<nlohmann::json> out;
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const auto& row = rows[n];
        const std::string id = row.contains("id") && row["id"].is_string() ? row["id"].get<std::string>() : "row" + std::to_string(n + 1);
        try {
            ScanRecord rec;
            if (row.contains("image")) {
                rec = record_from_json({{"id", id}, {"impression", row.value("impression", "")}});
                const fs::path image = resolve_path(opt.manifest, json_string(row, "image"));
                const fs::path labels = resolve_path(opt.manifest, json_string(row, "labels"));
                std::optional<fs::path> structures;
                if (row.contains("structures") && !row["structures"].is_null())
                    structures = resolve_path(opt.manifest, json_string(row, "structures"));
                const auto scan = app_detail::load_scan(image, labels, structures);
                const auto m = measure_scan(scan.image, scan.organs, scan.structures ? &*scan.structures : nullptr);
                rec.landmarks = m.landmarks;
                rec.aorta_mean_hu = m.aorta_mean_hu;
                rec.ivc_mean_hu = m.ivc_mean_hu;
                rec.organ_volume_mm3 = m.organ_volume_mm3;
                rec.image_path = fs::absolute(image).lexically_normal().string();
                rec.labels_path = fs::absolute(labels).lexically_normal().string();
            } else {
                // Pre-measured record.
                rec = record_from_json(row);
                rec.id = id;
            }
            curate_record(rec, keywords);
            if (!rec.modality) throw InvalidInput("no aorta or IVC measurement to decide the contrast phase");
            auto j = record_to_json(rec);
            j["status"] = "ok";
            out.push_back(j);
            result.records.push_back(std::move(rec));
        } catch (const Error& e) {
            result.failures.emplace_back(id, e.what());
            out.push_back({{"id", id}, {"status", "failed"}, {"error", e.what()}});
        }
    }

    for (LesionType t : kAllLesionTypes)
        for (Modality m : {Modality::Plain, Modality::Enhanced}) {
            if (!accepts_modality(t, m)) continue;
            std::size_t n = 0;
            for (const auto& r : result.records)
                if (r.modality == m && template_accepts(r, t)) ++n;
            result.pools[{t, m}] = n;
        }

    write_jsonl_atomic(opt.out, out);
    if (result.records.empty()) throw CurationError("every record failed curation");
    return result;
}

}  // namespace pastagen
