#include <cmath>
#include <functional>

#include "common.hpp"
#include "pastagen/error.hpp"
#include "pastagen/io.hpp"
#include "pastagen/nifti.hpp"
#include "pastagen/synth.hpp"

namespace pastagen {

std::uint8_t window_level(double hu, double window, double level) noexcept {
    const double lo = level - window / 2.0;
    const double v = (hu - lo) / window * 255.0;
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

namespace {

// Writes a binary PGM. `at(c, r)` yields (hu, in_lesion) for column c, row r.
void write_slice(const fs::path& path, std::size_t width, std::size_t height,
                 const std::function<std::pair<double, bool>(std::ptrdiff_t, std::ptrdiff_t)>& at, double window, double level) {
    std::string data = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    auto inside = [&](std::ptrdiff_t c, std::ptrdiff_t r) {
        if (c < 0 || r < 0 || c >= std::ptrdiff_t(width) || r >= std::ptrdiff_t(height)) return false;
        return at(c, r).second;
    };
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            const auto [hu, lesion] = at(std::ptrdiff_t(c), std::ptrdiff_t(r));
            const auto ci = std::ptrdiff_t(c), ri = std::ptrdiff_t(r);
            const bool edge = lesion && !(inside(ci - 1, ri) && inside(ci + 1, ri) && inside(ci, ri - 1) && inside(ci, ri + 1));
            data += static_cast<char>(edge ? 255 : window_level(hu, window, level));
        }
    write_file_atomic(path, data);
}

}  // namespace

PreviewResult cmd_preview(const PreviewOptions& opt) {
    const fs::path manifest = fs::absolute(opt.manifest);
    const nlohmann::json* row = nullptr;
    const auto rows = read_jsonl(manifest);
    for (const auto& r : rows)
        if (r.value("sample_id", "") == opt.sample_id) row = &r;
    if (!row) throw InvalidInput("sample " + opt.sample_id + " not in " + manifest.string());
    if (row->value("status", "") != "ok") throw InvalidInput("sample " + opt.sample_id + " did not generate");

    const fs::path image_path = resolve_path(manifest, app_detail::json_string(*row, "image"));
    const Volume3D image = read_volume(image_path);
    const LabelMap labels = read_labels(resolve_path(manifest, app_detail::json_string(*row, "labels")));
    if (image.dims() != labels.dims()) throw InvalidInput("image and labels differ in shape");
    const Mask lesion = lesion_mask(labels);

    Vec3 acc{0, 0, 0};
    std::size_t n = 0;
    for (std::size_t i = 0; i < lesion.size(); ++i) {
        if (!lesion[i]) continue;
        const Dims p = lesion.geometry().unravel(i);
        for (int a = 0; a < 3; ++a) acc[a] += double(p[a]);
        ++n;
    }
    if (n == 0) throw InvalidInput("sample " + opt.sample_id + " has an empty lesion mask");
    PreviewResult res;
    for (int a = 0; a < 3; ++a) res.centroid[a] = static_cast<std::size_t>(std::lround(acc[a] / double(n)));

    const fs::path dir = opt.out ? *opt.out : image_path.parent_path();
    fs::create_directories(dir);
    const Dims d = image.dims();
    const auto [cx, cy, cz] = res.centroid;
    using P = std::ptrdiff_t;
    auto voxel = [&](std::size_t x, std::size_t y, std::size_t z) {
        return std::pair<double, bool>{image(x, y, z), lesion(x, y, z) != 0};
    };
    const std::string stem = opt.sample_id;
    res.files = {dir / (stem + "_axial.pgm"), dir / (stem + "_coronal.pgm"), dir / (stem + "_sagittal.pgm")};
    write_slice(res.files[0], d[0], d[1], [&](P c, P r) { return voxel(std::size_t(c), std::size_t(r), cz); }, opt.window, opt.level);
    write_slice(res.files[1], d[0], d[2], [&](P c, P r) { return voxel(std::size_t(c), cy, d[2] - 1 - std::size_t(r)); },
                opt.window, opt.level);
    write_slice(res.files[2], d[1], d[2], [&](P c, P r) { return voxel(cx, std::size_t(c), d[2] - 1 - std::size_t(r)); },
                opt.window, opt.level);
    return res;
}

}  // namespace pastagen
