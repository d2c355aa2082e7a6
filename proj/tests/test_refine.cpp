#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pastagen/error.hpp"
#include "pastagen/refine.hpp"
#include "pastagen/rng.hpp"

using namespace pastagen;

namespace {

Volume3D random_ct(Dims dims, std::uint64_t seed, double lo = -1000, double hi = 1000) {
    Geometry g;
    g.dims = dims;
    Volume3D v(g);
    Rng rng(seed);
    for (auto& x : v.voxels()) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

LabelMap labels_for(const Volume3D& v) {
    LabelMap l(v.geometry(), 0);
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<std::uint8_t>(i % 3);
    return l;
}

double max_abs_diff(const Volume3D& a, const Volume3D& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
    return m;
}

// Predicts the noise that makes the clean estimate equal a fixed value.
class ConstantCleanPredictor final : public NoisePredictor {
public:
    explicit ConstantCleanPredictor(double clean) : clean_(clean) {}
    std::vector<double> predict(const PatchRequest& r) override {
        const double ab = schedule_.alpha_bar(r.t);
        std::vector<double> eps(r.x_t.size());
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (r.x_t[i] - std::sqrt(ab) * clean_) / std::sqrt(1 - ab);
        return eps;
    }
    std::string name() const override { return "constant"; }

private:
    double clean_;
    NoiseSchedule schedule_ = build_schedule();
};

class WrongSizePredictor final : public NoisePredictor {
public:
    std::vector<double> predict(const PatchRequest& r) override { return std::vector<double>(r.x_t.size() + 1, 0.0); }
    std::string name() const override { return "wrong"; }
};

class NanPredictor final : public NoisePredictor {
public:
    std::vector<double> predict(const PatchRequest& r) override {
        return std::vector<double>(r.x_t.size(), std::numeric_limits<double>::quiet_NaN());
    }
    std::string name() const override { return "nan"; }
};

RefineConfig small_config(ReverseMode mode = ReverseMode::Deterministic, std::uint64_t seed = 7) {
    RefineConfig c;
    c.window = 16;
    c.overlap = 0.5;
    c.mode = mode;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("schedule examples") {
    const auto one = build_schedule(1, 1e-4, 0.02);
    CHECK(one.T() == 1);
    CHECK(one.alpha_bar(1) == doctest::Approx(1 - 1e-4).epsilon(1e-15));

    const auto s = build_schedule();
    CHECK(s.T() == 1000);
    CHECK(s.beta(1) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(s.beta(1000) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(s.alpha_bar(0) == 1.0);
    for (int t = 1; t <= 1000; ++t) {
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
        CHECK(s.beta(t) > 0.0);
        CHECK(s.beta(t) < 1.0);
    }
    CHECK(s.alpha_bar(1000) < 1e-4);
    CHECK(s.alpha_bar(1000) > 0.0);

    const auto flat = build_schedule(50, 0.01, 0.01);
    for (int t = 1; t <= 50; ++t) CHECK(flat.alpha_bar(t) == doctest::Approx(std::pow(0.99, t)).epsilon(1e-12));

    CHECK_THROWS_AS(build_schedule(0, 1e-4, 0.02), InvalidInput);
    CHECK_THROWS_AS(build_schedule(10, 0.0, 0.02), InvalidInput);
    CHECK_THROWS_AS(build_schedule(10, 0.02, 0.01), InvalidInput);
    CHECK_THROWS_AS(build_schedule(10, 1e-4, 1.0), InvalidInput);
}

TEST_CASE("forward noise examples") {
    const auto s = build_schedule();
    Rng rng(1);
    std::vector<double> x0(500), eps(500), zero(500, 0.0);
    for (auto& v : x0) v = rng.uniform(-1, 1);
    for (auto& v : eps) v = rng.normal();
    for (int t : {1, 5, 100, 1000}) {
        const double ab = s.alpha_bar(t);
        const auto no_noise = forward_noise(x0, t, zero, s);
        const auto no_signal = forward_noise(zero, t, eps, s);
        const auto xt = forward_noise(x0, t, eps, s);
        for (std::size_t i = 0; i < x0.size(); ++i) {
            CHECK(no_noise[i] == doctest::Approx(std::sqrt(ab) * x0[i]).epsilon(1e-14));
            CHECK(no_signal[i] == doctest::Approx(std::sqrt(1 - ab) * eps[i]).epsilon(1e-14));
            if (t <= 100) CHECK(std::abs((xt[i] - std::sqrt(1 - ab) * eps[i]) / std::sqrt(ab) - x0[i]) < 1e-5);
        }
    }
    std::vector<double> shorter(499, 0.0);
    CHECK_THROWS_AS(forward_noise(x0, 5, shorter, s), InvalidInput);
}

TEST_CASE("forward noise variance") {
    const auto s = build_schedule();
    Rng rng(99);
    const std::size_t n = 200000;
    std::vector<double> x0(n), eps(n);
    const double sd0 = 0.6;
    for (auto& v : x0) v = sd0 * rng.normal();
    for (auto& v : eps) v = rng.normal();
    for (int t : {5, 200, 700}) {
        const auto xt = forward_noise(x0, t, eps, s);
        double m = 0, m2 = 0;
        for (double v : xt) m += v, m2 += v * v;
        m /= n;
        const double var = m2 / n - m * m;
        const double want = s.alpha_bar(t) * sd0 * sd0 + (1 - s.alpha_bar(t));
        CHECK(std::abs(var - want) / want < 0.02);
    }
}

TEST_CASE("reverse step closed forms") {
    const auto s = build_schedule();
    Rng rng(2);
    std::vector<double> xt(300), zero(300, 0.0), eps(300);
    for (auto& v : xt) v = rng.normal();
    for (auto& v : eps) v = rng.normal();
    for (int t : {1, 2, 5, 500}) {
        const auto prev = reverse_step(xt, t, zero, s, ReverseMode::Deterministic);
        const double k = std::sqrt(s.alpha_bar(t - 1) / s.alpha_bar(t));
        for (std::size_t i = 0; i < xt.size(); ++i) CHECK(prev[i] == doctest::Approx(k * xt[i]).epsilon(1e-12));
    }
    // t = 1 stochastic: no noise, and the result is the clean estimate
    const auto a = reverse_step(xt, 1, eps, s, ReverseMode::Stochastic, 1);
    const auto b = reverse_step(xt, 1, eps, s, ReverseMode::Stochastic, 2);
    CHECK(a == b);
    const double ab = s.alpha_bar(1);
    for (std::size_t i = 0; i < xt.size(); ++i)
        CHECK(a[i] == doctest::Approx((xt[i] - std::sqrt(1 - ab) * eps[i]) / std::sqrt(ab)).epsilon(1e-12));
    // later steps do inject seeded noise
    const auto c = reverse_step(xt, 3, eps, s, ReverseMode::Stochastic, 1);
    CHECK(c != reverse_step(xt, 3, eps, s, ReverseMode::Stochastic, 2));
    CHECK(c == reverse_step(xt, 3, eps, s, ReverseMode::Stochastic, 1));
}

TEST_CASE("stochastic step mean and spread") {
    // x_{t-1} = mu + sigma_t z with the DDPM posterior
    const auto s = build_schedule();
    const int t = 4;
    const std::size_t n = 100000;
    std::vector<double> xt(n, 0.3), eps(n, 0.1);
    const auto out = reverse_step(xt, t, eps, s, ReverseMode::Stochastic, 11);
    const double ab = s.alpha_bar(t), abp = s.alpha_bar(t - 1), beta = s.beta(t), alpha = s.alpha(t);
    const double x0 = (0.3 - std::sqrt(1 - ab) * 0.1) / std::sqrt(ab);
    const double mu = std::sqrt(abp) * beta / (1 - ab) * x0 + std::sqrt(alpha) * (1 - abp) / (1 - ab) * 0.3;
    const double sigma = std::sqrt(beta * (1 - abp) / (1 - ab));
    double m = 0, m2 = 0;
    for (double v : out) m += v, m2 += v * v;
    m /= n;
    const double sd = std::sqrt(m2 / n - m * m);
    CHECK(std::abs(m - mu) < 5 * sigma / std::sqrt(double(n)));
    CHECK(std::abs(sd - sigma) / sigma < 0.02);
}

TEST_CASE("five deterministic steps with the true noise recover x0") {
    const auto s = build_schedule();
    Rng rng(3);
    std::vector<double> x0(1000), eps(1000);
    for (auto& v : x0) v = rng.uniform(-1, 1);
    for (auto& v : eps) v = rng.normal();
    auto x = forward_noise(x0, 5, eps, s);
    for (int t = 5; t >= 1; --t) x = reverse_step(x, t, eps, s, ReverseMode::Deterministic);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(std::abs(x[i] - x0[i]) < 1e-5);
}

TEST_CASE("HU normalisation") {
    CHECK(normalize_hu(-2000) == -1.0);
    CHECK(normalize_hu(3000) == 1.0);
    CHECK(normalize_hu(250) == 0.25);
    CHECK(denormalize_hu(0.25) == 250.0);
}

TEST_CASE("oracle round trip through windows") {
    const auto img = random_ct({40, 33, 28}, 4);
    const auto labels = labels_for(img);
    auto cfg = small_config();
    OraclePredictor oracle(cfg.seed);
    const auto out = refine_volume(img, labels, oracle, cfg);
    CHECK(out.geometry() == img.geometry());
    CHECK(max_abs_diff(out, img) < 1e-4);
}

TEST_CASE("values outside the clip range pass through an identity refinement") {
    auto img = random_ct({20, 20, 20}, 5);
    img(3, 4, 5) = 1800.0f;
    img(10, 2, 7) = -1024.0f;
    const auto cfg = small_config();
    OraclePredictor oracle(cfg.seed);
    const auto out = refine_volume(img, labels_for(img), oracle, cfg);
    CHECK(std::abs(out(3, 4, 5) - 1800.0f) < 1e-4);
    CHECK(std::abs(out(10, 2, 7) + 1024.0f) < 1e-4);
}

TEST_CASE("t_refine 0 is bit-equal") {
    const auto img = random_ct({17, 9, 12}, 6);
    auto cfg = small_config(ReverseMode::Stochastic);
    cfg.t_refine = 0;
    ZeroPredictor zero;
    CHECK(refine_volume(img, labels_for(img), zero, cfg) == img);
}

TEST_CASE("constant input stays constant across window seams") {
    Geometry g;
    g.dims = {37, 30, 26};
    const Volume3D img(g, 120.0f);
    const LabelMap labels(g, 2);
    for (ReverseMode mode : {ReverseMode::Deterministic, ReverseMode::Stochastic}) {
        auto cfg = small_config(mode);
        ConstantCleanPredictor pred(normalize_hu(120.0));
        const auto out = refine_volume(img, labels, pred, cfg);
        for (float v : out.voxels()) CHECK(std::abs(v - 120.0f) <= 1e-4);
        // 1e-6 in normalised units
        double jump = 0;
        for (std::size_t z = 0; z < 26; ++z)
            for (std::size_t y = 0; y < 30; ++y)
                for (std::size_t x = 0; x + 1 < 37; ++x) jump = std::max(jump, double(std::abs(out(x + 1, y, z) - out(x, y, z))));
        CHECK(jump <= 1e-6 * 1000);
    }
}

TEST_CASE("refinement is deterministic and worker-independent") {
    const auto img = random_ct({30, 30, 30}, 8, -200, 300);
    const auto labels = labels_for(img);
    auto cfg = small_config(ReverseMode::Stochastic, 21);
    SmoothingPredictor smooth(1.0);
    const auto a = refine_volume(img, labels, smooth, cfg);
    cfg.workers = 4;
    const auto b = refine_volume(img, labels, smooth, cfg);
    CHECK(a == b);
    cfg.seed = 22;
    CHECK_FALSE(refine_volume(img, labels, smooth, cfg) == a);
}

TEST_CASE("predictor contract violations name the window") {
    const auto img = random_ct({20, 20, 20}, 9);
    const auto labels = labels_for(img);
    const auto cfg = small_config();
    WrongSizePredictor wrong;
    try {
        (void)refine_volume(img, labels, wrong, cfg);
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "refine");
        CHECK(std::string(e.what()).find("window") != std::string::npos);
    }
    NanPredictor nan;
    CHECK_THROWS_AS(refine_volume(img, labels, nan, cfg), StageError);

    LabelMap other(Geometry{{5, 5, 5}, {1, 1, 1}, {0, 0, 0}, {}}, 0);
    CHECK_THROWS_AS(refine_volume(img, other, wrong, cfg), InvalidInput);
}

TEST_CASE("config validation") {
    RefineConfig c;
    CHECK_NOTHROW(c.validate());
    c.t_refine = 1001;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = RefineConfig{};
    c.t_refine = -1;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = RefineConfig{};
    c.overlap = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = RefineConfig{};
    c.window = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    CHECK(reverse_mode_from_name(reverse_mode_name(ReverseMode::Deterministic)) == ReverseMode::Deterministic);
    CHECK_THROWS_AS(reverse_mode_from_name("ancestral"), InvalidInput);
}

TEST_CASE("predictor specs") {
    CHECK(make_predictor("oracle", 1)->name() == "oracle");
    CHECK(make_predictor("zero", 1)->name() == "zero");
    CHECK_NOTHROW(make_predictor("smooth:2.5", 1));
    CHECK_THROWS_AS(make_predictor("smooth:abc", 1), InvalidInput);
    CHECK_THROWS_AS(make_predictor("unet", 1), InvalidInput);
    CHECK_THROWS_AS(validate_predictor_spec("smooth:-1"), InvalidInput);
}

TEST_CASE("external predictor protocol") {
    const std::string helper = FAKE_PREDICTOR;
    REQUIRE(std::filesystem::exists(helper));
    const auto img = random_ct({18, 18, 18}, 10);
    const auto labels = labels_for(img);
    const auto cfg = small_config(ReverseMode::Stochastic);

    auto ext = make_predictor("exec:" + helper + " zero", cfg.seed);
    ZeroPredictor zero;
    CHECK(refine_volume(img, labels, *ext, cfg) == refine_volume(img, labels, zero, cfg));

    auto short_out = make_predictor("exec:" + helper + " short", cfg.seed);
    CHECK_THROWS_AS(refine_volume(img, labels, *short_out, cfg), StageError);
    auto failing = make_predictor("exec:" + helper + " fail", cfg.seed);
    CHECK_THROWS_AS(refine_volume(img, labels, *failing, cfg), Error);
}
