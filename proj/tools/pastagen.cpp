// pastagen: curate templates, generate lesion samples, refine, evaluate, preview.

#include <iostream>

#include <CLI11.hpp>

#include "pastagen/app.hpp"
#include "pastagen/error.hpp"
#include "pastagen/io.hpp"
#include "pastagen/stats.hpp"

using namespace pastagen;

namespace {

constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kInternal = 3;

int run_curate(const std::string& manifest, const std::string& config, const std::string& out) {
    CurateOptions opt;
    opt.manifest = manifest;
    if (!config.empty()) opt.keywords = config;
    opt.out = out;
    const auto r = cmd_curate(opt);
    for (const auto& [id, reason] : r.failures) std::cerr << "warning: " << id << ": " << reason << "\n";
    std::cout << r.records.size() << " records curated, " << r.failures.size() << " failed -> " << out << "\n";
    std::cout << "template pools (lesion type, phase):\n";
    for (const auto& [key, n] : r.pools)
        std::cout << "  " << lesion_name(key.first) << ", " << modality_name(key.second) << ": " << n << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic lesion generation for CT templates"};
    app.require_subcommand(1);

    std::string manifest, config, out, predictor = "smooth", mode, test, results, sample;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid;
    std::size_t workers = 1, bootstrap = 1000, permutations = 10000;
    std::optional<int> t_refine;
    double level = 0.95;

    auto* curate = app.add_subcommand("curate", "Classify scans and pick healthy templates");
    curate->add_option("--manifest", manifest, "Input JSONL: id, image, labels, structures, impression")->required();
    curate->add_option("--config", config, "Organ keyword JSON");
    curate->add_option("--out", out, "Curated manifest to write")->required();

    auto* generate = app.add_subcommand("generate", "Synthesize lesion samples");
    generate->add_option("--config", config, "Generation config JSON")->required();
    generate->add_option("--manifest", manifest, "Curated manifest")->required();
    generate->add_option("--out", out, "Output directory")->required();
    generate->add_option("--seed", seed, "Global seed (overrides config)");
    generate->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    generate->add_option("--grid", grid, "Crop edge in voxels, 0 for the whole template (overrides config)");

    auto* refine = app.add_subcommand("refine", "Refine generated samples with a noise predictor");
    refine->add_option("--manifest", manifest, "Generation manifest (updated in place)")->required();
    refine->add_option("--predictor", predictor, "oracle, zero, smooth[:sigma] or exec:<command>");
    refine->add_option("--config", config, "Refine config JSON: t_refine, mode, window, overlap, seed");
    refine->add_option("--seed", seed, "Refinement seed");
    refine->add_option("--workers", workers, "Concurrent windows")->check(CLI::PositiveNumber);
    refine->add_option("--t-refine", t_refine, "Noising depth (default 5)")->check(CLI::NonNegativeNumber);
    refine->add_option("--mode", mode, "stochastic or deterministic")->check(CLI::IsMember({"stochastic", "deterministic"}));

    auto* eval = app.add_subcommand("eval", "Summaries with bootstrap CIs and model comparison");
    eval->add_option("results", results, "CSV: case_id,model,value or case_id,model,score,label")->required();
    eval->add_option("--test", test, "Compare the two best models")->check(CLI::IsMember({"wilcoxon", "permutation"}));
    eval->add_option("--bootstrap", bootstrap, "Bootstrap replicates")->check(CLI::PositiveNumber);
    eval->add_option("--level", level, "Confidence level")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--seed", seed, "Resampling seed");
    eval->add_option("--permutations", permutations, "Permutations for the permutation test")->check(CLI::PositiveNumber);
    eval->add_option("--out", out, "Write <out>.csv and <out>.json");

    auto* preview = app.add_subcommand("preview", "Write orthogonal slices through a sample's lesion");
    preview->add_option("sample", sample, "Sample id")->required();
    preview->add_option("--manifest", manifest, "Generation manifest")->required();
    preview->add_option("--out", out, "Output directory (default: the sample directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (curate->parsed()) return run_curate(manifest, config, out);

        if (generate->parsed()) {
            GenerateOptions opt;
            opt.config = GenerationConfig::load(config);
            if (seed) opt.config.seed = *seed;
            if (grid) opt.config.grid = *grid;
            opt.curated_manifest = manifest;
            opt.out = out;
            opt.workers = workers;
            const auto r = cmd_generate(opt);
            for (const auto& [type, reason] : r.skipped) std::cerr << "warning: skipped " << type << ": " << reason << "\n";
            for (const auto& row : r.rows)
                if (row.value("status", "") != "ok")
                    std::cerr << "warning: " << row.value("sample_id", "?") << ": " << row.value("error", "") << "\n";
            std::cout << r.run_id << ": " << r.succeeded << " samples written, " << r.failed << " failed";
            if (r.resumed) std::cout << " (" << r.resumed << " reused from an earlier run)";
            std::cout << " -> " << (opt.out / "manifest.jsonl").string() << "\n";
            return r.failed ? kDataError : 0;
        }

        if (refine->parsed()) {
            RefineOptions opt;
            opt.manifest = manifest;
            opt.predictor = predictor;
            if (!config.empty()) {
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(read_text_file(config));
                    opt.config.t_refine = j.value("t_refine", opt.config.t_refine);
                    if (j.contains("mode")) opt.config.mode = reverse_mode_from_name(j["mode"].get<std::string>());
                    opt.config.window = j.value("window", opt.config.window);
                    opt.config.overlap = j.value("overlap", opt.config.overlap);
                    opt.config.seed = j.value("seed", opt.config.seed);
                } catch (const nlohmann::json::exception& e) {
                    throw InvalidInput(config + ": " + e.what());
                }
            }
            if (seed) opt.config.seed = *seed;
            if (t_refine) opt.config.t_refine = *t_refine;
            if (!mode.empty()) opt.config.mode = reverse_mode_from_name(mode);
            opt.config.workers = workers;
            const auto r = cmd_refine(opt);
            for (const auto& [id, reason] : r.failures) std::cerr << "warning: " << id << ": " << reason << "\n";
            std::cout << r.refined << " samples refined, " << r.failures.size() << " failed\n";
            return r.failures.empty() ? 0 : kDataError;
        }

        if (eval->parsed()) {
            EvalOptions opt;
            opt.results = results;
            opt.test = test == "wilcoxon" ? ComparisonTest::Wilcoxon
                       : test == "permutation" ? ComparisonTest::Permutation
                                               : ComparisonTest::None;
            opt.bootstrap = bootstrap;
            opt.level = level;
            opt.permutations = permutations;
            if (seed) opt.seed = *seed;
            if (!out.empty()) opt.out = out;
            std::cout << cmd_eval(opt).table;
            return 0;
        }

        if (preview->parsed()) {
            PreviewOptions opt;
            opt.manifest = manifest;
            opt.sample_id = sample;
            if (!out.empty()) opt.out = out;
            const auto r = cmd_preview(opt);
            std::cout << "lesion centroid voxel (" << r.centroid[0] << ", " << r.centroid[1] << ", " << r.centroid[2] << ")\n";
            for (const auto& f : r.files) std::cout << f.string() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
