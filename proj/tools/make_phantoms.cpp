// Writes analytic torso phantoms (image, organ labels, structure labels) and a
// curation manifest listing them.

#include <iostream>

#include <CLI11.hpp>

#include "pastagen/app.hpp"
#include "pastagen/error.hpp"
#include "pastagen/nifti.hpp"
#include "pastagen/phantom.hpp"

using namespace pastagen;

int main(int argc, char** argv) {
    CLI::App app{"Write phantom templates and a curation manifest"};
    std::string out;
    std::uint64_t seed = 0;
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--seed", seed, "Noise seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path dir(out);
        fs::create_directories(dir);
        std::vector<nlohmann::json> rows;
        const std::pair<ScanRange, const char*> ranges[] = {
            {ScanRange::ThoraxAbdomenPelvis, "tap"}, {ScanRange::Thorax, "thorax"}, {ScanRange::AbdomenPelvis, "abdomen"}};
        for (const auto& [range, name] : ranges)
            for (Modality m : {Modality::Plain, Modality::Enhanced}) {
                const std::string id = std::string(name) + "_" + (m == Modality::Plain ? "plain" : "enhanced");
                const Phantom ph = make_phantom({m, range, seed, 8.0});
                write_volume(dir / (id + "_image.nii.gz"), ph.image);
                write_labels(dir / (id + "_organs.nii.gz"), ph.organs);
                write_labels(dir / (id + "_structures.nii.gz"), ph.structures);
                rows.push_back({{"id", id},
                                {"image", id + "_image.nii.gz"},
                                {"labels", id + "_organs.nii.gz"},
                                {"structures", id + "_structures.nii.gz"},
                                {"impression", "No acute abnormality."}});
            }
        write_jsonl_atomic(dir / "scans.jsonl", rows);
        std::cout << rows.size() << " phantoms -> " << (dir / "scans.jsonl").string() << "\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
