#pragma once

// Batch commands behind the pastagen executable. Each returns a result the
// caller can inspect; files are written atomically.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pastagen/curation.hpp"
#include "pastagen/lesion_model.hpp"
#include "pastagen/refine.hpp"

namespace pastagen {

namespace fs = std::filesystem;

// ---- manifests -------------------------------------------------------------

std::vector<nlohmann::json> read_jsonl(const fs::path& path);
void write_jsonl_atomic(const fs::path& path, const std::vector<nlohmann::json>& rows);

nlohmann::ordered_json record_to_json(const ScanRecord& record);
ScanRecord record_from_json(const nlohmann::json& j);

/// Relative paths in a manifest are taken relative to the manifest's directory.
fs::path resolve_path(const fs::path& manifest, const std::string& path);

// ---- curate ----------------------------------------------------------------

struct CurateOptions {
    fs::path manifest;
    std::optional<fs::path> keywords;
    fs::path out;  // curated manifest
};

struct CurateResult {
    std::vector<ScanRecord> records;  // successfully curated
    std::vector<std::pair<std::string, std::string>> failures;  // id, reason
    std::map<std::pair<LesionType, Modality>, std::size_t> pools;
};

/// Throws InvalidInput("no records") on an empty manifest and CurationError
/// when every row fails.
CurateResult cmd_curate(const CurateOptions& options);

// ---- generate --------------------------------------------------------------

struct GenerationConfig {
    std::uint64_t seed = 0;
    std::map<LesionType, std::size_t> counts;
    SamplingParams params = SamplingParams::defaults();
    std::size_t grid = 64;  // 0: whole template
    std::size_t max_attempts = 8;
    bool refine = false;
    std::string predictor = "smooth";
    RefineConfig refine_config;

    /// Keys: seed, counts {lesion_key: n} or count_per_type, grid, max_attempts,
    /// sampling_params (object or path relative to `base`), refine {enabled,
    /// predictor, t_refine, mode, window, overlap}.
    static GenerationConfig from_json(const nlohmann::json& j, const fs::path& base = {});
    static GenerationConfig load(const fs::path& path);
    /// Canonical form; its hash identifies a run. Worker count is excluded.
    nlohmann::json to_json() const;
    std::string hash() const;
};

struct GenerateOptions {
    GenerationConfig config;
    fs::path curated_manifest;
    fs::path out;
    std::size_t workers = 1;
};

struct GenerateResult {
    std::string run_id;
    std::vector<nlohmann::json> rows;
    std::vector<std::pair<std::string, std::string>> skipped;  // lesion key, reason
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::size_t resumed = 0;
};

/// Writes <out>/samples/<id>/{image,labels}.nii.gz, report.json and
/// provenance.json per sample, then <out>/manifest.jsonl and <out>/run.json.
/// Completed samples listed in <out>/progress.jsonl under the same config
/// hash are reused.
GenerateResult cmd_generate(const GenerateOptions& options);

// ---- refine ----------------------------------------------------------------

struct RefineOptions {
    fs::path manifest;
    std::string predictor = "smooth";
    RefineConfig config;
};

struct RefineResult {
    std::size_t refined = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // sample id, reason
};

/// Writes image_refined.nii.gz next to each image and adds a `refined`
/// column. The predictor is checked before any file is touched.
RefineResult cmd_refine(const RefineOptions& options);

// ---- eval ------------------------------------------------------------------

enum class ComparisonTest { None, Wilcoxon, Permutation };

struct EvalOptions {
    fs::path results;  // CSV: case_id,model,value  or  case_id,model,score,label
    ComparisonTest test = ComparisonTest::None;
    std::size_t bootstrap = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::size_t permutations = 10000;
    std::optional<fs::path> out;  // writes <out>.csv and <out>.json
};

struct ModelSummary {
    std::string model;
    std::string metric;  // "mean" or "auc"
    double point = 0.0, low = 0.0, high = 0.0;
    std::size_t n = 0;
};

struct EvalResult {
    std::vector<ModelSummary> models;  // best first
    std::optional<double> p_value;     // best vs second best
    std::string test_name;
    std::string table;  // printable
};

EvalResult cmd_eval(const EvalOptions& options);

// ---- preview ---------------------------------------------------------------

struct PreviewOptions {
    fs::path manifest;
    std::string sample_id;
    std::optional<fs::path> out;  // defaults to the sample directory
    double window = 400.0;
    double level = 40.0;
};

struct PreviewResult {
    Dims centroid{};
    std::vector<fs::path> files;  // axial, coronal, sagittal
};

PreviewResult cmd_preview(const PreviewOptions& options);

/// Grey level for an HU value under a window/level, clamped to [0, 255].
std::uint8_t window_level(double hu, double window, double level) noexcept;

}  // namespace pastagen
