#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "pastagen/error.hpp"
#include "pastagen/lesion_model.hpp"

using namespace pastagen;

namespace {

LesionSpec gastric() {
    LesionSpec s;
    s.type = LesionType::GastricCancer;
    s.enhancement = Modality::Enhanced;
    s.size = {25, 40, 38};
    s.shape = Shape::WallThickening;
    s.density = Density::Hypodense;
    s.heterogeneity = Heterogeneity::Heterogeneous;
    s.surface = Surface::IllDefined;
    s.invasion = Invasion::CloseRelationship;
    return s;
}

// Rebuild a spec from its report; type and seed are not part of the report.
LesionSpec parse_back(const StructuredReport& r, LesionType type) {
    const auto labels = report_class_labels(r);
    LesionSpec s;
    s.type = type;
    s.enhancement = r.enhancement == "Plain CT" ? Modality::Plain : Modality::Enhanced;
    s.size = parse_size(r.size);
    s.shape = static_cast<Shape>(labels[0]);
    s.density = static_cast<Density>(labels[1]);
    s.heterogeneity = static_cast<Heterogeneity>(labels[2]);
    s.surface = static_cast<Surface>(labels[3]);
    s.invasion = static_cast<Invasion>(labels[4]);
    CHECK(organ_from_location(r.location) == target_organ(type));
    return s;
}

}  // namespace

TEST_CASE("option vocabularies") {
    CHECK(kShapeOptions.size() == 4);
    CHECK(kDensityOptions.size() == 3);
    CHECK(kHeterogeneityOptions.size() == 2);
    CHECK(kSurfaceOptions.size() == 2);
    CHECK(kInvasionOptions.size() == 2);
    CHECK(kEnhancementOptions.size() == 2);
    std::set<std::string_view> locations;
    for (Organ o : kAllOrgans) locations.insert(location_name(o));
    CHECK(locations.size() == 10);
    CHECK(kLabelCardinalities == std::array<int, 5>{4, 3, 2, 2, 2});
}

TEST_CASE("benign types are never invasive") {
    auto params = SamplingParams::defaults();
    for (LesionType t : kAllLesionTypes)
        if (is_benign(t)) params.of(t).invasion_weights = {0.0, 1.0};  // even when the weights say otherwise
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        CHECK(sample_spec(LesionType::LiverCyst, params, seed).invasion == Invasion::NoCloseRelationship);
        CHECK(sample_spec(LesionType::KidneyStone, params, seed).invasion == Invasion::NoCloseRelationship);
    }
    int benign = 0;
    for (LesionType t : kAllLesionTypes) benign += is_benign(t);
    CHECK(benign == 5);
}

TEST_CASE("log-normal size median") {
    auto params = SamplingParams::defaults();
    params.size_bounds_mm = {0.01, 10000.0};
    auto& tp = params.of(LesionType::LiverTumor);
    tp.log_mean = {3.0, 3.0, 3.0};
    tp.log_sigma = {0.5, 0.5, 0.5};
    std::array<std::vector<double>, 3> axis;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const auto s = sample_spec(LesionType::LiverTumor, params, seed);
        axis[0].push_back(s.size.z);
        axis[1].push_back(s.size.x);
        axis[2].push_back(s.size.y);
    }
    const double want = std::exp(3.0);
    for (auto& v : axis) {
        std::nth_element(v.begin(), v.begin() + 5000, v.end());
        CHECK(std::abs(v[5000] - want) / want < 0.05);
    }
}

TEST_CASE("sampling is deterministic") {
    const auto params = SamplingParams::defaults();
    for (LesionType t : kAllLesionTypes)
        for (std::uint64_t seed : {0ull, 1ull, 77ull, 0xdeadbeefull}) CHECK(sample_spec(t, params, seed) == sample_spec(t, params, seed));
}

TEST_CASE("sampled specs satisfy every invariant") {
    const auto params = SamplingParams::defaults();
    for (LesionType t : kAllLesionTypes) {
        for (std::uint64_t seed = 0; seed < 10000; ++seed) {
            const auto s = sample_spec(t, params, seed);
            CHECK_NOTHROW(validate_spec(s, params));
            const double lo = params.size_bounds_mm.lo, hi = params.size_bounds_mm.hi;
            for (double v : {s.size.z, s.size.x, s.size.y}) {
                REQUIRE(v > 0.0);
                REQUIRE(v >= lo - 0.05);
                REQUIRE(v <= hi + 0.05);
            }
            if (t == LesionType::Gallstone || t == LesionType::KidneyStone) REQUIRE(s.shape != Shape::WallThickening);
            REQUIRE(accepts_modality(t, s.enhancement));
        }
    }
}

TEST_CASE("pinned phase and rejected phase") {
    const auto params = SamplingParams::defaults();
    CHECK(sample_spec(LesionType::LiverCyst, params, 3, Modality::Plain).enhancement == Modality::Plain);
    CHECK(sample_spec(LesionType::LiverCyst, params, 3, Modality::Enhanced).enhancement == Modality::Enhanced);
    CHECK_THROWS_AS(sample_spec(LesionType::LungTumor, params, 3, Modality::Enhanced), InvalidInput);
}

TEST_CASE("shape frequencies match the configured weights") {
    const auto params = SamplingParams::defaults();
    for (LesionType t : {LesionType::LungTumor, LesionType::GastricCancer, LesionType::Gallstone}) {
        const auto& w = params.of(t).shape_weights;
        std::array<double, 4> count{};
        const int n = 100000;
        for (int i = 0; i < n; ++i) count[static_cast<int>(sample_spec(t, params, 1000003ull * i + 17).shape)] += 1;
        double chi2 = 0.0;
        int k = 0;
        for (int c = 0; c < 4; ++c) {
            if (w[c] == 0.0) {
                CHECK(count[c] == 0);
                continue;
            }
            const double e = n * w[c];
            chi2 += (count[c] - e) * (count[c] - e) / e;
            ++k;
        }
        REQUIRE(k >= 2);
        const boost::math::chi_squared dist(k - 1);
        CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
    }
}

TEST_CASE("report rendering") {
    const auto r = render_report(gastric());
    CHECK(r.size == "25×40×38 mm");
    CHECK(r.location == "Stomach");
    CHECK(r.enhancement == "Enhanced CT");
    CHECK(r.shape == "Wall thickening");
    auto plain = gastric();
    plain.type = LesionType::LungTumor;
    plain.enhancement = Modality::Plain;
    CHECK(render_report(plain).enhancement == "Plain CT");
    CHECK(render_report(plain).location == "Lung");
    CHECK(report_matches(r, gastric()));
    CHECK_FALSE(report_matches(render_report(plain), gastric()));
}

TEST_CASE("size strings") {
    CHECK(format_size({12.5, 3, 100}) == "12.5×3×100 mm");
    CHECK(parse_size("25×40×38 mm") == SizeMm{25, 40, 38});
    CHECK(parse_size("2.5x4x3.8 mm") == SizeMm{2.5, 4, 3.8});
    CHECK_THROWS_AS(parse_size("25×40 mm"), InvalidInput);
    CHECK_THROWS_AS(parse_size("25×40×38"), InvalidInput);
    CHECK_THROWS_AS(parse_size("25×-1×38 mm"), InvalidInput);
    CHECK_THROWS_AS(parse_size("a×b×c mm"), InvalidInput);
}

TEST_CASE("rendered reports round-trip to the spec") {
    const auto params = SamplingParams::defaults();
    for (LesionType t : kAllLesionTypes) {
        for (std::uint64_t seed = 0; seed < 300; ++seed) {
            auto s = sample_spec(t, params, seed);
            const auto r = render_report(s);
            CHECK_NOTHROW(validate_report(r));
            auto back = parse_back(r, t);
            back.seed = s.seed;
            CHECK(back == s);
            CHECK(report_from_json(report_to_json(r)) == r);
        }
    }
}

TEST_CASE("class labels") {
    StructuredReport r;
    r.enhancement = "Plain CT";
    r.location = "Liver";
    r.size = "1×1×1 mm";
    r.shape = "Round-like";
    r.density = "Hypodense";
    r.heterogeneity = "Homogeneous";
    r.surface = "Well-defined margin";
    r.invasion = std::string(kInvasionOptions[0]);
    CHECK(report_class_labels(r) == ReportLabels{0, 0, 0, 0, 0});
    r.shape = "Punctate, nodular";
    CHECK(report_class_labels(r)[0] == 3);
    r.shape = "Spiculated";
    CHECK_THROWS_AS(report_class_labels(r), InvalidInput);
}

TEST_CASE("label encoding is a bijection over all option tuples") {
    std::set<ReportLabels> seen;
    StructuredReport r;
    r.enhancement = "Enhanced CT";
    r.location = "Kidney";
    r.size = "5×5×5 mm";
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d)
                    for (int e = 0; e < 2; ++e) {
                        r.shape = kShapeOptions[a];
                        r.density = kDensityOptions[b];
                        r.heterogeneity = kHeterogeneityOptions[c];
                        r.surface = kSurfaceOptions[d];
                        r.invasion = kInvasionOptions[e];
                        const auto l = report_class_labels(r);
                        CHECK(l == ReportLabels{a, b, c, d, e});
                        seen.insert(l);
                    }
    CHECK(seen.size() == 4 * 3 * 2 * 2 * 2);  // 96
}

TEST_CASE("report JSON key set") {
    const auto j = report_to_json(render_report(gastric()));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"enhancement", "location", "size_mm", "shape", "density", "heterogeneity",
                                           "surface", "invasion"});
    auto bad = nlohmann::json(j);
    bad.erase("shape");
    CHECK_THROWS_AS(report_from_json(bad), InvalidInput);
}

TEST_CASE("sampling params validation and JSON") {
    auto p = SamplingParams::defaults();
    CHECK_NOTHROW(p.validate());
    const auto back = SamplingParams::from_json(p.to_json());
    CHECK(back.to_json() == p.to_json());

    auto bad = p;
    bad.of(LesionType::LiverTumor).log_sigma[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = p;
    bad.of(LesionType::LiverTumor).shape_weights = {0.5, 0.5, 0.5, -0.5};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = p;
    bad.of(LesionType::LiverTumor).density_weights = {0.2, 0.2, 0.2};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = p;
    bad.size_bounds_mm = {10, 5};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = p;
    bad.blur_ill_mm = {4, 1};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}
