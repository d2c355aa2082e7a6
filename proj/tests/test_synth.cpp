#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "pastagen/error.hpp"
#include "pastagen/morphology.hpp"
#include "pastagen/phantom.hpp"
#include "pastagen/rng.hpp"
#include "pastagen/synth.hpp"

using namespace pastagen;

namespace {

Geometry cube(std::size_t n) {
    Geometry g;
    g.dims = {n, n, n};
    return g;
}

// Liver-labelled ball in a soft-tissue box (20 HU); optional white noise.
Template ball_template(std::size_t n, double radius, double noise_hu, std::uint64_t seed = 1) {
    Template t;
    t.id = "ball";
    t.image = Volume3D(cube(n), 20.0f);
    t.labels = LabelMap(cube(n), 0);
    Rng rng(seed);
    const double c = (n - 1) / 2.0;
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) {
                const double d2 = (x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c);
                const double e = noise_hu > 0 ? noise_hu * rng.normal() : 0.0;
                if (d2 <= radius * radius) {
                    t.labels(x, y, z) = class_id(Organ::Liver);
                    t.image(x, y, z) = static_cast<float>(60.0 + e);
                } else {
                    t.image(x, y, z) = static_cast<float>(20.0 + e);
                }
            }
    return t;
}

LesionSpec round_spec(SizeMm size, std::uint64_t seed = 3) {
    LesionSpec s;
    s.type = LesionType::LiverTumor;
    s.enhancement = Modality::Enhanced;
    s.size = size;
    s.shape = Shape::RoundLike;
    s.density = Density::Hypodense;
    s.heterogeneity = Heterogeneity::Homogeneous;
    s.surface = Surface::WellDefined;
    s.invasion = Invasion::NoCloseRelationship;
    s.seed = seed;
    return s;
}

Mask ball_mask(std::size_t n, Dims c, double r) {
    Mask m(cube(n), 0);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) {
                const double dx = double(x) - c[0], dy = double(y) - c[1], dz = double(z) - c[2];
                if (dx * dx + dy * dy + dz * dz <= r * r) m(x, y, z) = 1;
            }
    return m;
}

std::pair<double, double> mean_std(const Volume3D& img, const Mask& m) {
    double s = 0, s2 = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.size(); ++i)
        if (m[i]) {
            s += img[i];
            s2 += double(img[i]) * img[i];
            ++n;
        }
    const double mean = s / n;
    return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean))};
}

std::array<std::size_t, 3> extents(const Mask& m) {
    Dims lo{SIZE_MAX, SIZE_MAX, SIZE_MAX}, hi{0, 0, 0};
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) {
            const auto p = m.geometry().unravel(i);
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
    return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
}

// Mean gradient magnitude over voxels within one voxel of the mask boundary.
double band_gradient(const Volume3D& img, const Mask& m) {
    const auto d_in = distance_to(m);
    Mask out = m;
    for (auto& v : out.voxels()) v = v ? 0 : 1;
    const auto d_out = distance_to(out);
    const auto& g = img.geometry();
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t z = 1; z + 1 < g.dims[2]; ++z)
        for (std::size_t y = 1; y + 1 < g.dims[1]; ++y)
            for (std::size_t x = 1; x + 1 < g.dims[0]; ++x) {
                const std::size_t i = g.linear(x, y, z);
                if (std::max(d_in[i], d_out[i]) > 1.0 + 1e-9) continue;
                const double gx = (img(x + 1, y, z) - img(x - 1, y, z)) / 2;
                const double gy = (img(x, y + 1, z) - img(x, y - 1, z)) / 2;
                const double gz = (img(x, y, z + 1) - img(x, y, z - 1)) / 2;
                sum += std::sqrt(gx * gx + gy * gy + gz * gz);
                ++n;
            }
    return sum / n;
}

}  // namespace

TEST_CASE("placement keeps clear of the faces of a full cube") {
    const Mask organ(cube(64), 1);
    const auto spec = round_spec({10, 10, 10});
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto c = place_lesion(organ, spec, seed);
        for (int a = 0; a < 3; ++a) {
            CHECK(c[a] >= 5);
            CHECK(c[a] <= 58);
        }
        CHECK(place_lesion(organ, spec, seed) == c);
    }
}

TEST_CASE("placement with a single candidate") {
    Mask organ(cube(20), 0);
    for (std::size_t z = 10; z < 13; ++z)
        for (std::size_t y = 10; y < 13; ++y)
            for (std::size_t x = 10; x < 13; ++x) organ(x, y, z) = 1;
    const auto spec = round_spec({2, 2, 2});
    for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(place_lesion(organ, spec, seed) == Dims{11, 11, 11});
}

TEST_CASE("placement failure is a stage error") {
    Mask organ(cube(20), 0);
    organ(5, 5, 5) = 1;
    CHECK_THROWS_AS(place_lesion(organ, round_spec({30, 30, 30}), 0), StageError);
}

TEST_CASE("round-like ellipsoid size and volume") {
    const auto params = SamplingParams::defaults();
    const Volume3D img(cube(64), 60.0f);
    const Mask organ(cube(64), 1);
    const auto m = make_shape_mask(round_spec({20, 20, 20}), {32, 32, 32}, img, organ, params, 1);
    for (auto e : extents(m)) {
        CHECK(e >= 19);
        CHECK(e <= 21);
    }
    const double want = 4.0 / 3.0 * std::numbers::pi * 1000.0;
    CHECK(std::abs(double(count_nonzero(m)) - want) / want < 0.10);
}

TEST_CASE("ellipsoid extents follow the report axes") {
    // size is (Z, X, Y); canonical stored axes are x, y, z
    const auto params = SamplingParams::defaults();
    const Volume3D img(cube(64), 60.0f);
    const Mask organ(cube(64), 1);
    const auto m = make_shape_mask(round_spec({30, 10, 20}), {32, 32, 32}, img, organ, params, 1);
    const auto e = extents(m);
    CHECK(std::abs(double(e[0]) - 10) <= 1);
    CHECK(std::abs(double(e[1]) - 20) <= 1);
    CHECK(std::abs(double(e[2]) - 30) <= 1);
}

TEST_CASE("round-like mask is reflection symmetric") {
    const auto params = SamplingParams::defaults();
    const Volume3D img(cube(48), 60.0f);
    const Mask organ(cube(48), 1);
    const Dims c{24, 24, 24};
    const auto m = make_shape_mask(round_spec({15, 21, 11}), c, img, organ, params, 9);
    for (std::size_t z = 0; z < 48; ++z)
        for (std::size_t y = 0; y < 48; ++y)
            for (std::size_t x = 0; x < 48; ++x) {
                if (!m(x, y, z)) continue;
                const auto rx = 2 * c[0] - x, ry = 2 * c[1] - y, rz = 2 * c[2] - z;
                REQUIRE(rx < 48);
                REQUIRE(ry < 48);
                REQUIRE(rz < 48);
                CHECK(m(rx, y, z));
                CHECK(m(x, ry, z));
                CHECK(m(x, y, rz));
            }
}

TEST_CASE("irregular with zero amplitude equals round-like") {
    auto params = SamplingParams::defaults();
    params.irregular_amplitude = 0.0;
    const Volume3D img(cube(48), 60.0f);
    const Mask organ(cube(48), 1);
    auto spec = round_spec({18, 14, 22});
    const auto round = make_shape_mask(spec, {24, 24, 24}, img, organ, params, 4);
    spec.shape = Shape::Irregular;
    CHECK(make_shape_mask(spec, {24, 24, 24}, img, organ, params, 4) == round);
    params.irregular_amplitude = 0.25;
    CHECK_FALSE(make_shape_mask(spec, {24, 24, 24}, img, organ, params, 4) == round);
}

TEST_CASE("punctate foci stay inside the sampled extent") {
    const auto params = SamplingParams::defaults();
    const Volume3D img(cube(48), 60.0f);
    const Mask organ(cube(48), 1);
    auto spec = round_spec({16, 16, 16});
    spec.shape = Shape::PunctateNodular;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = make_shape_mask(spec, {24, 24, 24}, img, organ, params, seed);
        CHECK(count_nonzero(m) > 0);
        for (auto e : extents(m)) CHECK(e <= 17);
        CHECK(count_nonzero(m) < count_nonzero(make_shape_mask(round_spec({16, 16, 16}), {24, 24, 24}, img, organ, params, seed)));
    }
}

TEST_CASE("wall thickening hugs the lumen or the organ surface") {
    const auto params = SamplingParams::defaults();
    Volume3D img(cube(40), 40.0f);
    const Mask organ = ball_mask(40, {20, 20, 20}, 14);
    auto spec = round_spec({12, 12, 12});
    spec.type = LesionType::GastricCancer;
    spec.shape = Shape::WallThickening;
    const double thickness = spec.size.min() / 2;

    // no air inside: band under the organ surface
    Mask outside = organ;
    for (auto& v : outside.voxels()) v = v ? 0 : 1;
    const auto d_surface = distance_to(outside);
    auto m = make_shape_mask(spec, {20, 20, 20}, img, organ, params, 1);
    CHECK(count_nonzero(m) > 0);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) {
            CHECK(organ[i]);
            CHECK(d_surface[i] <= thickness + 1e-9);
        }

    // air lumen: wall tissue thickened inward
    const Mask lumen = ball_mask(40, {20, 20, 20}, 8);
    for (std::size_t i = 0; i < img.size(); ++i)
        if (lumen[i]) img[i] = -900.0f;
    Mask wall = organ;
    for (std::size_t i = 0; i < wall.size(); ++i) wall[i] = organ[i] && !lumen[i];
    const auto d_wall = distance_to(wall);
    m = make_shape_mask(spec, {20, 20, 20}, img, organ, params, 1);
    std::size_t in_lumen = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) {
            CHECK(organ[i]);
            CHECK(d_wall[i] <= thickness + 1e-9);
            in_lumen += lumen[i];
        }
    CHECK(in_lumen > 0);

    const Mask empty(cube(40), 0);
    CHECK_THROWS_AS(make_shape_mask(spec, {20, 20, 20}, img, empty, params, 1), StageError);
}

TEST_CASE("ring statistics") {
    Volume3D img(cube(30), 0.0f);
    const Mask organ(cube(30), 1);
    const Mask lesion = ball_mask(30, {15, 15, 15}, 4);
    const Mask shell = oracle::dilate(lesion, 3.0);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = lesion[i] ? 500.0f : (shell[i] ? 40.0f : -7.0f);
    const auto r = ring_stats(img, lesion, organ, 3.0);
    CHECK(r.mean == doctest::Approx(40.0));
    CHECK(r.stddev == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.count == count_nonzero(shell) - count_nonzero(lesion));
    const Mask none(cube(30), 0);
    CHECK_THROWS_AS(ring_stats(img, lesion, none, 3.0), StageError);
}

TEST_CASE("zero offset without texture paints the ring mean exactly") {
    const auto t = ball_template(40, 16, 4.0);
    auto params = SamplingParams::defaults();
    params.density_offset_hu[1] = {0.0, 0.0};
    params.homogeneous_sigma_hu = 0.0;
    params.blur_well_mm = {0.0, 0.0};
    auto spec = round_spec({10, 10, 10});
    spec.density = Density::Isodense;
    const auto s = synthesize(t, spec, params);
    const auto lesion = lesion_mask(s.labels);
    const float want = static_cast<float>(s.provenance.ring.mean);
    for (std::size_t i = 0; i < lesion.size(); ++i) {
        if (lesion[i]) CHECK(s.image[i] == want);
        else CHECK(s.image[i] == t.image[i]);
    }
    // direct form
    const auto painted = apply_density(t.image, lesion, 12.5);
    for (std::size_t i = 0; i < lesion.size(); ++i) CHECK(painted[i] == (lesion[i] ? 12.5f : t.image[i]));
}

TEST_CASE("density offsets by option") {
    const auto params = SamplingParams::defaults();
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const double hypo = sample_density_offset(Density::Hypodense, params, seed);
        const double iso = sample_density_offset(Density::Isodense, params, seed);
        const double hyper = sample_density_offset(Density::Hyperdense, params, seed);
        CHECK((hypo >= -100 && hypo <= -20));
        CHECK(std::abs(iso) <= 5);
        CHECK((hyper >= 20 && hyper <= 400));
    }
}

TEST_CASE("homogeneous texture stays within 1.2 sigma") {
    const auto params = SamplingParams::defaults();
    const Volume3D img(cube(40), 50.0f);
    const Mask lesion = ball_mask(40, {20, 20, 20}, 10);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto tex = sample_texture(Heterogeneity::Homogeneous, params, seed);
        CHECK(tex.amplitude_hu == 0.0);
        CHECK(tex.fine_sigma_hu <= params.homogeneous_sigma_hu);
        const auto out = apply_heterogeneity(img, lesion, tex, seed);
        CHECK(mean_std(out, lesion).second <= params.homogeneous_sigma_hu * 1.2);
    }
}

TEST_CASE("heterogeneous texture is visibly uneven") {
    const auto params = SamplingParams::defaults();
    const Volume3D img(cube(40), 50.0f);
    const Mask lesion = ball_mask(40, {20, 20, 20}, 10);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto tex = sample_texture(Heterogeneity::Heterogeneous, params, seed);
        CHECK(tex.amplitude_hu >= params.heterogeneity_amplitude_hu.lo);
        CHECK(tex.amplitude_hu <= params.heterogeneity_amplitude_hu.hi);
        const auto out = apply_heterogeneity(img, lesion, tex, seed);
        CHECK(mean_std(out, lesion).second >= 10.0);
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!lesion[i]) REQUIRE(out[i] == img[i]);
    }
}

TEST_CASE("zero amplitude leaves the image unchanged") {
    Volume3D img(cube(24), 0.0f);
    Rng rng(2);
    for (auto& v : img.voxels()) v = static_cast<float>(rng.uniform(-50, 50));
    const Mask lesion = ball_mask(24, {12, 12, 12}, 6);
    CHECK(apply_heterogeneity(img, lesion, TextureParams{0.0, 0.0, 8.0}, 5) == img);
}

TEST_CASE("zero blur is a hard edge") {
    const Volume3D bg(cube(24), 30.0f);
    const Volume3D field(cube(24), -40.0f);
    const Mask lesion = ball_mask(24, {12, 12, 12}, 6);
    const auto out = apply_surface(bg, field, lesion, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == (lesion[i] ? -40.0f : 30.0f));
}

TEST_CASE("blur has compact support") {
    const Volume3D bg(cube(48), 30.0f);
    const Volume3D field(cube(48), -40.0f);
    const Mask lesion = ball_mask(48, {24, 24, 24}, 12);
    Mask outside = lesion;
    for (auto& v : outside.voxels()) v = v ? 0 : 1;
    const auto d_lesion = distance_to(lesion);
    const auto d_outside = distance_to(outside);
    for (double sigma : {0.5, 1.0, 2.5}) {
        const auto out = apply_surface(bg, field, lesion, sigma);
        std::size_t changed_near = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (d_lesion[i] > 3 * sigma) CHECK(out[i] == 30.0f);
            if (d_outside[i] > 3 * sigma) CHECK(out[i] == -40.0f);
            if (!lesion[i] && d_lesion[i] <= 1.0 && out[i] != 30.0f) ++changed_near;
        }
        CHECK(changed_near > 0);
    }
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const double w = sample_blur_sigma(Surface::WellDefined, SamplingParams::defaults(), seed);
        const double ill = sample_blur_sigma(Surface::IllDefined, SamplingParams::defaults(), seed);
        CHECK((w >= 0.3 && w <= 0.8));
        CHECK((ill >= 1.5 && ill <= 4.0));
    }
}

TEST_CASE("well-defined margins are sharper than ill-defined ones") {
    const auto t = ball_template(48, 20, 0.0);
    const auto params = SamplingParams::defaults();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto spec = round_spec({14, 14, 14}, seed);
        const auto well = synthesize(t, spec, params);
        spec.surface = Surface::IllDefined;
        const auto ill = synthesize(t, spec, params);
        const auto lesion = lesion_mask(well.labels);
        REQUIRE(lesion == lesion_mask(ill.labels));
        CHECK(band_gradient(well.image, lesion) > band_gradient(ill.image, lesion));
    }
}

TEST_CASE("invasion stays within depth") {
    const std::size_t n = 48;
    const Mask organ = ball_mask(n, {24, 24, 24}, 16);
    const Mask lesion = ball_mask(n, {24, 24, 36}, 5);
    Mask outside = organ;
    for (auto& v : outside.voxels()) v = v ? 0 : 1;
    const auto d_organ = distance_to(organ);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = apply_invasion(lesion, organ, Invasion::CloseRelationship, InvasionGeometry{5.0, 35.0}, seed);
        std::size_t out = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!m[i]) continue;
            if (!organ[i]) ++out;
            CHECK(d_organ[i] <= 5.0 + 1.0);
        }
        CHECK(out >= 1);
    }
}

TEST_CASE("zero-depth invasion equals the non-invasive result") {
    const Mask organ = ball_mask(40, {20, 20, 20}, 12);
    const Mask lesion = ball_mask(40, {20, 20, 30}, 5);
    const auto clipped = apply_invasion(lesion, organ, Invasion::NoCloseRelationship, {}, 1);
    CHECK(apply_invasion(lesion, organ, Invasion::CloseRelationship, InvasionGeometry{0.0, 35.0}, 1) == clipped);
    for (std::size_t i = 0; i < clipped.size(); ++i) CHECK(clipped[i] == (lesion[i] && organ[i] ? 1 : 0));
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto g = sample_invasion(SamplingParams::defaults(), seed);
        CHECK((g.depth_mm >= 2.0 && g.depth_mm <= 10.0));
    }
}

TEST_CASE("compose_labels matches a brute-force overwrite") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        LabelMap organs(cube(8), 0);
        Mask lesion(cube(8), 0);
        for (auto& v : organs.voxels()) v = static_cast<std::uint8_t>(rng.index(11));
        for (auto& v : lesion.voxels()) v = rng.uniform() < 0.2;
        const auto type = kAllLesionTypes[rng.index(kLesionTypeCount)];
        const auto out = compose_labels(organs, lesion, type);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == (lesion[i] ? class_id(type) : organs[i]));
    }
    LabelMap organs(cube(8), 6);
    Mask lesion(cube(8), 0);
    CHECK(compose_labels(organs, lesion, LesionType::GastricCancer) == organs);
    lesion(3, 3, 3) = 1;
    CHECK(compose_labels(organs, lesion, LesionType::GastricCancer)(3, 3, 3) == 16);
}

TEST_CASE("liver cyst on a phantom liver") {
    PhantomOptions po;
    const auto ph = make_phantom(po);
    Template t{"phantom", ph.image, ph.organs};
    const auto params = SamplingParams::defaults();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto spec = sample_spec(LesionType::LiverCyst, params, seed, Modality::Enhanced);
        const auto s = synthesize(t, spec, params);
        std::size_t n = 0;
        for (std::size_t i = 0; i < s.labels.size(); ++i) {
            if (s.labels[i] > kOrganCount) {
                CHECK(s.labels[i] == 21);
                CHECK(ph.organs[i] == class_id(Organ::Liver));
                ++n;
            } else {
                CHECK(s.labels[i] == ph.organs[i]);
            }
        }
        CHECK(n > 0);
        CHECK(s.image.geometry() == s.labels.geometry());
        // cysts are hypodense round-like
        CHECK(mean_std(s.image, lesion_mask(s.labels)).first < s.provenance.ring.mean);
        const auto again = synthesize(t, spec, params);
        CHECK(again.image == s.image);
        CHECK(again.labels == s.labels);
        CHECK(report_matches(s.report, spec));
    }
}

TEST_CASE("density ordering, containment and locality over many samples") {
    const auto t = ball_template(56, 22, 5.0);
    const auto params = SamplingParams::defaults();
    for (Density d : {Density::Hypodense, Density::Hyperdense}) {
        int ok = 0, total = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto spec = sample_spec(LesionType::LiverTumor, params, seed);
            spec.density = d;
            SynthSample s;
            try {
                s = synthesize(t, spec, params);
            } catch (const StageError&) {
                continue;
            }
            ++total;
            const auto lesion = lesion_mask(s.labels);
            const double mean = mean_std(s.image, lesion).first;
            ok += d == Density::Hypodense ? mean < s.provenance.ring.mean : mean > s.provenance.ring.mean;

            const Mask organ = select_label(t.labels, class_id(Organ::Liver));
            if (spec.invasion == Invasion::NoCloseRelationship)
                for (std::size_t i = 0; i < lesion.size(); ++i)
                    if (lesion[i]) REQUIRE(organ[i]);
            const Mask reach = s.provenance.blur_sigma_mm > 0 ? dilate(lesion, 3 * s.provenance.blur_sigma_mm) : lesion;
            for (std::size_t i = 0; i < lesion.size(); ++i) {
                if (!reach[i]) REQUIRE(s.image[i] == t.image[i]);
                if (!lesion[i]) REQUIRE(s.labels[i] == t.labels[i]);
            }
        }
        CHECK(total >= 90);
        CHECK(ok >= 0.99 * total);
    }
}

TEST_CASE("stage errors carry the stage name") {
    auto t = ball_template(24, 8, 0.0);  // about 2100 mm^3, too small
    try {
        (void)synthesize(t, round_spec({6, 6, 6}), SamplingParams::defaults());
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(std::string(e.what()).find("place") != std::string::npos);
    }
}

TEST_CASE("spec JSON round trip") {
    const auto params = SamplingParams::defaults();
    for (LesionType type : kAllLesionTypes) {
        const auto s = sample_spec(type, params, 42);
        CHECK(spec_from_json(spec_to_json(s)) == s);
    }
}
