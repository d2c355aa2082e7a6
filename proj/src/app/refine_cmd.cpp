#include <cstdlib>
#include <sstream>

#include "common.hpp"
#include "pastagen/error.hpp"
#include "pastagen/nifti.hpp"
#include "pastagen/rng.hpp"

namespace pastagen {

namespace {

bool is_executable(const fs::path& p) {
    std::error_code ec;
    const auto st = fs::status(p, ec);
    return !ec && fs::is_regular_file(st) && (st.permissions() & fs::perms::owner_exec) != fs::perms::none;
}

// For exec: predictors, the program named by the first word must exist.
void check_predictor_loadable(const std::string& spec) {
    validate_predictor_spec(spec);
    if (spec.rfind("exec:", 0) != 0) return;
    std::istringstream words(spec.substr(5));
    std::string program;
    words >> program;
    if (program.find('/') != std::string::npos) {
        if (!is_executable(program)) throw IoError("predictor program not found or not executable: " + program);
        return;
    }
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path ? path : "");
    std::string dir;
    while (std::getline(dirs, dir, ':'))
        if (!dir.empty() && is_executable(fs::path(dir) / program)) return;
    throw IoError("predictor program not found on PATH: " + program);
}

void copy_atomic(const fs::path& from, const fs::path& to) {
    fs::path tmp = to;
    tmp += ".tmp";
    fs::copy_file(from, tmp, fs::copy_options::overwrite_existing);
    fs::rename(tmp, to);
}

}  // namespace

RefineResult cmd_refine(const RefineOptions& opt) {
    opt.config.validate();
    check_predictor_loadable(opt.predictor);
    const fs::path manifest = fs::absolute(opt.manifest);
    auto rows = read_jsonl(manifest);
    RefineResult result;
    for (auto& row : rows) {
        if (row.value("status", "") != "ok") continue;
        const std::string id = row.value("sample_id", "?");
        try {
            const fs::path image_path = resolve_path(manifest, app_detail::json_string(row, "image"));
            const fs::path labels_path = resolve_path(manifest, app_detail::json_string(row, "labels"));
            const fs::path out = image_path.parent_path() / "image_refined.nii.gz";
            if (opt.config.t_refine == 0) {
                if (!fs::exists(image_path)) throw IoError("missing " + image_path.string());
                copy_atomic(image_path, out);
            } else {
                const Volume3D image = read_volume(image_path);
                const LabelMap labels = read_labels(labels_path);
                RefineConfig rc = opt.config;
                rc.seed = derive_seed(row.value("seed", std::uint64_t{0}), {opt.config.seed, fnv1a64("refine")});
                auto predictor = make_predictor(opt.predictor, rc.seed);
                write_volume(out, refine_volume(image, labels, *predictor, rc));
            }
            row["refined"] = out.lexically_relative(manifest.parent_path()).generic_string();
            row["refine_predictor"] = opt.predictor;
            row["t_refine"] = opt.config.t_refine;
            row.erase("refine_error");
            ++result.refined;
        } catch (const Error& e) {
            row["refine_error"] = e.what();
            row.erase("refined");
            result.failures.emplace_back(id, e.what());
        }
    }
    write_jsonl_atomic(manifest, rows);
    return result;
}

}  // namespace pastagen
