#include <fstream>
#include <iostream>
#include <mutex>
#include <set>

#include "common.hpp"
#include "pastagen/error.hpp"
#include "pastagen/io.hpp"
#include "pastagen/nifti.hpp"
#include "pastagen/rng.hpp"
#include "pastagen/synth.hpp"

namespace pastagen {

GenerationConfig GenerationConfig::from_json(const nlohmann::json& j, const fs::path& base) {
    if (!j.is_object()) throw InvalidInput("generation config must be a JSON object");
    static const std::set<std::string> known{"seed", "counts", "count_per_type", "grid", "max_attempts", "sampling_params", "refine"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw InvalidInput("generation config: unknown key '" + k + "'");
    try {
        GenerationConfig c;
        c.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("count_per_type")) {
            const auto n = j.at("count_per_type").get<std::int64_t>();
            if (n < 0) throw InvalidInput("generation config: count_per_type must be >= 0");
            for (LesionType t : kAllLesionTypes) c.counts[t] = static_cast<std::size_t>(n);
        }
        if (j.contains("counts")) {
            for (const auto& [key, v] : j.at("counts").items()) {
                const auto t = lesion_from_name(key);
                if (!t) throw InvalidInput("generation config: unknown lesion type '" + key + "'");
                const auto n = v.get<std::int64_t>();
                if (n < 0) throw InvalidInput("generation config: count for " + key + " must be >= 0");
                c.counts[*t] = static_cast<std::size_t>(n);
            }
        }
        const auto grid = j.value("grid", std::int64_t{64});
        if (grid < 0) throw InvalidInput("generation config: grid must be >= 0");
        c.grid = static_cast<std::size_t>(grid);
        const auto attempts = j.value("max_attempts", std::int64_t{8});
        if (attempts < 1) throw InvalidInput("generation config: max_attempts must be >= 1");
        c.max_attempts = static_cast<std::size_t>(attempts);
        if (j.contains("sampling_params")) {
            const auto& sp = j.at("sampling_params");
            c.params = sp.is_string() ? SamplingParams::load(base / sp.get<std::string>()) : SamplingParams::from_json(sp);
        }
        if (j.contains("refine")) {
            const auto& r = j.at("refine");
            c.refine = r.value("enabled", false);
            c.predictor = r.value("predictor", c.predictor);
            c.refine_config.t_refine = r.value("t_refine", c.refine_config.t_refine);
            if (r.contains("mode")) c.refine_config.mode = reverse_mode_from_name(r.at("mode").get<std::string>());
            c.refine_config.window = r.value("window", c.refine_config.window);
            c.refine_config.overlap = r.value("overlap", c.refine_config.overlap);
            c.refine_config.validate();
            validate_predictor_spec(c.predictor);
        }
        c.params.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("generation config: ") + e.what());
    }
}

GenerationConfig GenerationConfig::load(const fs::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_text_file(path)), path.parent_path());
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

nlohmann::json GenerationConfig::to_json() const {
    nlohmann::json counts_j = nlohmann::json::object();
    for (LesionType t : kAllLesionTypes) {
        const auto it = counts.find(t);
        counts_j[std::string(lesion_key(t))] = it == counts.end() ? 0 : it->second;
    }
    return {{"seed", seed},
            {"counts", counts_j},
            {"grid", grid},
            {"max_attempts", max_attempts},
            {"sampling_params", params.to_json()},
            {"refine",
             {{"enabled", refine},
              {"predictor", predictor},
              {"t_refine", refine_config.t_refine},
              {"mode", reverse_mode_name(refine_config.mode)},
              {"window", refine_config.window},
              {"overlap", refine_config.overlap}}}};
}

std::string GenerationConfig::hash() const { return hash_hex(to_json().dump()); }

namespace {

using app_detail::LoadedScan;

struct CachedScan {
    const ScanRecord* record = nullptr;
    std::once_flag once;
    std::shared_ptr<const LoadedScan> scan;
};

struct Job {
    LesionType type;
    std::size_t index;
    std::string id;
    std::uint64_t seed;
    std::vector<const ScanRecord*> pool;
};

Vec3 centroid_of(const LabelMap& labels, std::uint8_t value) {
    Vec3 acc{0, 0, 0};
    std::size_t n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != value) continue;
        const Dims p = labels.geometry().unravel(i);
        for (int a = 0; a < 3; ++a) acc[a] += double(p[a]);
        ++n;
    }
    if (n == 0) throw StageError("place", "target organ absent from template");
    for (auto& v : acc) v /= double(n);
    return acc;
}

std::string rel(const fs::path& p, const fs::path& base) { return p.lexically_relative(base).generic_string(); }

bool artifacts_exist(const nlohmann::json& row, const fs::path& out) {
    for (const char* key : {"image", "labels", "report", "provenance"})
        if (!row.contains(key) || !fs::exists(out / row[key].get<std::string>())) return false;
    if (row.contains("refined") && !fs::exists(out / row["refined"].get<std::string>())) return false;
    return true;
}

}  // namespace

GenerateResult cmd_generate(const GenerateOptions& opt) {
    const GenerationConfig& cfg = opt.config;
    const std::string config_hash = cfg.hash();
    const std::string manifest_text = read_text_file(opt.curated_manifest);
    const std::string manifest_hash = hash_hex(manifest_text);

    std::vector<ScanRecord> records;
    for (const auto& row : read_jsonl(opt.curated_manifest))
        if (row.value("status", "ok") == "ok") records.push_back(record_from_json(row));

    GenerateResult result;
    result.run_id = "run-" + hash_hex(config_hash + ":" + manifest_hash).substr(0, 12);

    std::map<std::string, CachedScan> cache;
    std::vector<Job> jobs;
    for (LesionType t : kAllLesionTypes) {
        const auto it = cfg.counts.find(t);
        if (it == cfg.counts.end() || it->second == 0) continue;
        std::vector<const ScanRecord*> pool;
        for (const auto& r : records)
            if (template_accepts(r, t)) pool.push_back(&r);
        if (pool.empty()) {
            result.skipped.emplace_back(std::string(lesion_key(t)), "no healthy template of an accepted phase");
            continue;
        }
        for (const ScanRecord* r : pool) cache[r->id].record = r;
        for (std::size_t i = 0; i < it->second; ++i) {
            char id[96];
            std::snprintf(id, sizeof id, "%s_%05zu", std::string(lesion_key(t)).c_str(), i);
            jobs.push_back({t, i, id, derive_seed(cfg.seed, {class_id(t), i}), pool});
        }
    }

    fs::create_directories(opt.out);
    const fs::path journal = opt.out / "progress.jsonl";
    std::map<std::string, nlohmann::json> done;
    if (fs::exists(journal)) {
        std::ifstream in(journal);
        std::string line;
        while (std::getline(in, line)) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error&) {
                continue;  // torn final line from an interrupted run
            }
            if (j.value("config_hash", "") != config_hash || j.value("manifest_hash", "") != manifest_hash) continue;
            const auto& row = j["row"];
            if (row.value("status", "") == "ok" && artifacts_exist(row, opt.out)) done[row["sample_id"].get<std::string>()] = row;
        }
    }
    std::ofstream journal_out(journal, std::ios::app);
    std::mutex journal_mutex;

    std::vector<nlohmann::json> rows(jobs.size());
    app_detail::parallel_for(jobs.size(), opt.workers, [&](std::size_t k) {
        const Job& job = jobs[k];
        if (const auto it = done.find(job.id); it != done.end()) {
            rows[k] = it->second;
            return;
        }
        nlohmann::ordered_json row;
        row["sample_id"] = job.id;
        row["lesion_type"] = lesion_key(job.type);
        row["seed"] = job.seed;
        std::string last_error;
        for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
            Rng pick(derive_seed(job.seed, {attempt, 1}));
            const ScanRecord* rec = job.pool[pick.index(job.pool.size())];
            row["template_id"] = rec->id;
            row["attempt"] = attempt;
            try {
                CachedScan& entry = cache.at(rec->id);
                std::call_once(entry.once, [&] {
                    entry.scan = std::make_shared<const LoadedScan>(
                        app_detail::load_scan(rec->image_path, rec->labels_path, std::nullopt));
                });
                const LoadedScan& scan = *entry.scan;
                const LesionSpec spec = sample_spec(job.type, cfg.params, derive_seed(job.seed, {attempt, 2}), *rec->modality);

                Template tmpl{rec->id, scan.image, scan.organs};
                Dims crop_lo{0, 0, 0};
                if (cfg.grid > 0) {
                    const auto [lo, size] =
                        centered_box(scan.organs.dims(), centroid_of(scan.organs, class_id(target_organ(job.type))), cfg.grid);
                    crop_lo = lo;
                    tmpl.image = crop(scan.image, lo, size);
                    tmpl.labels = crop(scan.organs, lo, size);
                }
                SynthSample s = synthesize(tmpl, spec, cfg.params);

                const fs::path dir = opt.out / "samples" / job.id;
                fs::create_directories(dir);
                write_volume(dir / "image.nii.gz", s.image);
                write_labels(dir / "labels.nii.gz", s.labels);
                write_file_atomic(dir / "report.json", report_to_json(s.report).dump(2) + "\n");
                auto prov = provenance_to_json(s.provenance);
                prov["sample_id"] = job.id;
                prov["sample_seed"] = job.seed;
                prov["attempt"] = attempt;
                prov["crop_lo"] = crop_lo;
                write_file_atomic(dir / "provenance.json", prov.dump(2) + "\n");
                row["image"] = rel(dir / "image.nii.gz", opt.out);
                row["labels"] = rel(dir / "labels.nii.gz", opt.out);
                row["report"] = rel(dir / "report.json", opt.out);
                row["provenance"] = rel(dir / "provenance.json", opt.out);
                if (cfg.refine) {
                    RefineConfig rc = cfg.refine_config;
                    rc.seed = derive_seed(job.seed, "refine");
                    rc.workers = 1;
                    auto predictor = make_predictor(cfg.predictor, rc.seed);
                    write_volume(dir / "image_refined.nii.gz", refine_volume(s.image, s.labels, *predictor, rc));
                    row["refined"] = rel(dir / "image_refined.nii.gz", opt.out);
                }
                row["status"] = "ok";
                last_error.clear();
                break;
            } catch (const StageError& e) {
                last_error = e.what();
            } catch (const Error& e) {
                last_error = e.what();
                break;
            }
        }
        if (!last_error.empty()) {
            row["status"] = "failed";
            row["error"] = last_error;
        }
        rows[k] = row;
        std::lock_guard lock(journal_mutex);
        journal_out << nlohmann::json{{"config_hash", config_hash}, {"manifest_hash", manifest_hash}, {"row", row}}.dump() << "\n";
        journal_out.flush();
    });

    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (done.count(jobs[k].id)) ++result.resumed;
        if (rows[k].value("status", "") == "ok") ++result.succeeded;
        else ++result.failed;
    }
    result.rows = rows;
    write_jsonl_atomic(opt.out / "manifest.jsonl", rows);

    nlohmann::ordered_json run;
    run["run_id"] = result.run_id;
    run["config_hash"] = config_hash;
    run["curated_manifest_hash"] = manifest_hash;
    run["config"] = cfg.to_json();
    run["samples"] = {{"requested", jobs.size()}, {"succeeded", result.succeeded}, {"failed", result.failed}};
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& [key, reason] : result.skipped) skipped.push_back({{"lesion_type", key}, {"reason", reason}});
    run["skipped"] = skipped;
    write_file_atomic(opt.out / "run.json", run.dump(2) + "\n");
    return result;
}

}  // namespace pastagen
