#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "pastagen/error.hpp"
#include "pastagen/rng.hpp"
#include "pastagen/stats.hpp"

using namespace pastagen;

namespace {

PairedScores paired(std::vector<double> a, std::vector<double> b) {
    PairedScores p;
    for (std::size_t i = 0; i < a.size(); ++i) p.case_ids.push_back("c" + std::to_string(i));
    p.a = std::move(a);
    p.b = std::move(b);
    return p;
}

PairedScores from_diffs(const std::vector<double>& d) { return paired(d, std::vector<double>(d.size(), 0.0)); }

// Integer-valued differences make ties common.
PairedScores random_pairs(Rng& rng, std::size_t n, int spread) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = double(rng.index(2 * spread + 1)) - spread;
        b[i] = double(rng.index(2 * spread + 1)) - spread;
    }
    return paired(a, b);
}

double normal_upper(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("dice examples") {
    Geometry g;
    g.dims = {4, 4, 4};
    Mask a(g, 0), b(g, 0);
    CHECK(dice(a, b) == 1.0);
    a(1, 1, 1) = 1;
    CHECK(dice(a, b) == 0.0);
    CHECK(dice(a, a) == 1.0);
    b(2, 2, 2) = 1;
    CHECK(dice(a, b) == 0.0);
    b(1, 1, 1) = 1;
    CHECK(dice(a, b) == doctest::Approx(2.0 / 3.0));
    Geometry h;
    h.dims = {4, 4, 5};
    CHECK_THROWS_AS(dice(a, Mask(h, 0)), InvalidInput);
}

TEST_CASE("dice matches the counting oracle") {
    Rng rng(1);
    Geometry g;
    g.dims = {4, 4, 4};
    for (int trial = 0; trial < 1000; ++trial) {
        Mask a(g, 0), b(g, 0);
        const double pa = rng.uniform(), pb = rng.uniform();
        for (auto& v : a.voxels()) v = rng.uniform() < pa;
        for (auto& v : b.voxels()) v = rng.uniform() < pb;
        const double d = dice(a, b);
        CHECK(d == oracle::dice(a.voxels(), b.voxels()));
        CHECK(d == dice(b, a));
        CHECK((d >= 0.0 && d <= 1.0));
    }
}

TEST_CASE("auc examples") {
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
    const std::vector<int> y{0, 0, 1, 1};
    CHECK(auc(s, y) == 1.0);
    const std::vector<double> flat(4, 0.5);
    CHECK(auc(flat, y) == 0.5);
    const std::vector<int> one_class{1, 1, 1, 1};
    CHECK_THROWS_AS(auc(s, one_class), UndefinedStatistic);
    const std::vector<int> bad{0, 2, 1, 1};
    CHECK_THROWS_AS(auc(s, bad), InvalidInput);
}

TEST_CASE("auc matches pair counting, complement and rank invariance") {
    Rng rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.index(19);
        std::vector<double> s(n);
        std::vector<int> y(n), flipped(n);
        for (auto& v : s) v = double(rng.index(6));  // plenty of ties
        for (auto& v : y) v = rng.uniform() < 0.5;
        y[0] = 0;
        y[1] = 1;
        for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
        const double a = auc(s, y);
        CHECK(a == oracle::auc(s, y));
        CHECK(std::abs(a + auc(s, flipped) - 1.0) <= 1e-12);
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
        CHECK(auc(t, y) == a);
    }
}

TEST_CASE("accuracy and macro-F1 examples") {
    const std::vector<int> y{0, 1, 2, 1, 0, 2};
    CHECK(accuracy(y, y) == 1.0);
    CHECK(macro_f1(y, y, 3) == 1.0);

    // binary, hand counted: tp 3, fp 1, fn 2 for class 1
    const std::vector<int> p2{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    const std::vector<int> y2{1, 1, 1, 0, 1, 1, 0, 0, 0, 0};
    const double prec1 = 3.0 / 4, rec1 = 3.0 / 5, f1_1 = 2 * prec1 * rec1 / (prec1 + rec1);
    const double prec0 = 4.0 / 6, rec0 = 4.0 / 5, f1_0 = 2 * prec0 * rec0 / (prec0 + rec0);
    CHECK(macro_f1(p2, y2, 2) == doctest::Approx((f1_0 + f1_1) / 2).epsilon(1e-14));
    CHECK(accuracy(p2, y2) == doctest::Approx(0.7));

    // class 2 present in labels, never predicted
    const std::vector<int> p3{0, 1, 0, 1};
    const std::vector<int> y3{0, 1, 2, 1};
    const double f0 = 2 * (1.0 / 2) * 1.0 / (1.0 / 2 + 1.0);
    CHECK(macro_f1(p3, y3, 3) == doctest::Approx((f0 + 1.0 + 0.0) / 3));

    // class 3 absent everywhere
    CHECK(macro_f1(y, y, 4) == doctest::Approx(0.75));
    CHECK(macro_f1(y, y, 4, true) == 1.0);

    const std::vector<int> empty;
    CHECK_THROWS_AS(macro_f1(empty, empty, 2), InvalidInput);
    CHECK_THROWS_AS(accuracy(empty, empty), InvalidInput);
    CHECK_THROWS_AS(accuracy(p2, y), InvalidInput);
}

TEST_CASE("macro-F1 matches the confusion-matrix oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + int(rng.index(4));
        const std::size_t n = 1 + rng.index(30);
        std::vector<int> p(n), y(n);
        for (auto& v : p) v = int(rng.index(k));
        for (auto& v : y) v = int(rng.index(k));
        CHECK(macro_f1(p, y, k) == oracle::macro_f1(p, y, k));
    }
}

TEST_CASE("bootstrap examples") {
    const std::vector<double> constant(40, 0.8);
    const auto c = bootstrap_ci(constant, mean_of, 1000, 0.95, 1);
    CHECK(c.point == 0.8);
    CHECK(c.low == 0.8);
    CHECK(c.high == 0.8);

    Rng rng(4);
    std::vector<double> u(100);
    for (auto& v : u) v = rng.uniform();
    const auto a = bootstrap_ci(u, mean_of, 1000, 0.95, 9);
    const auto b = bootstrap_ci(u, mean_of, 1000, 0.95, 9);
    CHECK(a.low == b.low);
    CHECK(a.high == b.high);
    CHECK(a.replicates == 1000);
    CHECK(a.low <= a.point);
    CHECK(a.point <= a.high);

    double m = mean_of(u), ss = 0;
    for (double v : u) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / (u.size() - 1));
    const double normal_width = 2 * 1.96 * sd / std::sqrt(100.0);
    CHECK(std::abs((a.high - a.low) - normal_width) / normal_width < 0.30);

    const std::vector<double> none;
    CHECK_THROWS_AS(bootstrap_ci(none, mean_of), InvalidInput);
}

TEST_CASE("type-7 quantiles") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    CHECK(quantile_sorted(v, 0.5) == 2.5);
    CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("wilcoxon examples") {
    const auto up = from_diffs({0.01, 0.02, 0.03, 0.04, 0.05});
    CHECK(wilcoxon_one_sided(up) == 0.03125);
    CHECK(format_p(wilcoxon_one_sided(up)) == "0.031");
    const auto down = from_diffs({-0.01, -0.02, -0.03, -0.04, -0.05});
    // W+ = 0 and every sign pattern has W+ >= 0
    CHECK(wilcoxon_one_sided(down) == 1.0);
    CHECK(wilcoxon_one_sided(down) == oracle::wilcoxon_enumerate(down.a, down.b));
    // one negative among five: P(W+ >= 14) = 2/32
    CHECK(wilcoxon_one_sided(from_diffs({-0.01, 0.02, 0.03, 0.04, 0.05})) == 2.0 / 32.0);
    CHECK_THROWS_AS(wilcoxon_one_sided(from_diffs({0, 0, 0})), UndefinedStatistic);
    // zeros are dropped
    CHECK(wilcoxon_one_sided(from_diffs({0.0, 1, 2, 3, 4, 5})) == 0.03125);
}

TEST_CASE("wilcoxon exact path equals enumeration") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        auto p = random_pairs(rng, n, 3);
        if (p.a == p.b) continue;
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) any = any || p.a[i] != p.b[i];
        if (!any) continue;
        CHECK(wilcoxon_one_sided(p, WilcoxonMethod::Exact) == doctest::Approx(oracle::wilcoxon_enumerate(p.a, p.b)).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon normal approximation") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 21 + rng.index(40);
        auto p = random_pairs(rng, n, 4);
        std::vector<double> d;
        for (std::size_t i = 0; i < n; ++i)
            if (p.a[i] != p.b[i]) d.push_back(p.a[i] - p.b[i]);
        if (d.empty()) continue;
        const auto r = oracle::abs_midranks(d);
        const double m = double(d.size());
        double w = 0;
        for (std::size_t i = 0; i < d.size(); ++i)
            if (d[i] > 0) w += r[i];
        std::vector<double> mags;
        for (double x : d) mags.push_back(std::fabs(x));
        std::sort(mags.begin(), mags.end());
        double tie = 0;
        for (std::size_t i = 0; i < mags.size();) {
            std::size_t j = i;
            while (j < mags.size() && mags[j] == mags[i]) ++j;
            const double t = double(j - i);
            tie += t * t * t - t;
            i = j;
        }
        const double mean = m * (m + 1) / 4;
        const double var = m * (m + 1) * (2 * m + 1) / 24 - tie / 48;
        const double want = normal_upper((w - mean - 0.5) / std::sqrt(var));
        const double got = wilcoxon_one_sided(p, d.size() > 20 ? WilcoxonMethod::Auto : WilcoxonMethod::Normal);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
    // near n = 20 the two paths agree closely
    std::vector<double> diffs;
    for (int i = 1; i <= 20; ++i) diffs.push_back(i % 3 == 0 ? -i : i);
    const auto q = from_diffs(diffs);
    CHECK(std::abs(wilcoxon_one_sided(q, WilcoxonMethod::Exact) - wilcoxon_one_sided(q, WilcoxonMethod::Normal)) < 0.01);
}

TEST_CASE("permutation examples") {
    CHECK(paired_permutation_one_sided(from_diffs({1, 1, 1})) == 0.125);
    CHECK(paired_permutation_one_sided(from_diffs({0, 0, 0, 0})) == 1.0);
    CHECK(paired_permutation_one_sided(from_diffs({0, 0, 0, 0}), 10, 1, true) == 1.0);
}

TEST_CASE("permutation exhaustive and Monte-Carlo paths") {
    Rng rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng.index(10);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.uniform(0.5, 0.9);
        for (auto& v : b) v = rng.uniform(0.5, 0.9);
        const auto p = paired(a, b);
        const double exact = oracle::permutation_enumerate(a, b);
        CHECK(paired_permutation_one_sided(p, 10000, 3) == doctest::Approx(exact).epsilon(1e-12));
        const double mc = paired_permutation_one_sided(p, 10000, 3, true);
        CHECK(std::abs(mc - exact) <= 0.02);
        CHECK(mc >= 1.0 / 10001);
        CHECK(mc <= 1.0);
        CHECK(mc == paired_permutation_one_sided(p, 10000, 3, true));
    }
    const std::vector<double> big(30, 1.0), zero(30, 0.0);
    const double p = paired_permutation_one_sided(paired(big, zero), 999, 5);
    CHECK(p == doctest::Approx(1.0 / 1000));
}

TEST_CASE("paired score validation") {
    auto p = paired({1, 2}, {1, 2, 3});
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    auto q = paired({1, std::nan("")}, {1, 2});
    CHECK_THROWS_AS(q.validate(), InvalidInput);
    CHECK_THROWS_AS(wilcoxon_one_sided(q), InvalidInput);
}

TEST_CASE("k-fold splits") {
    const auto f = kfold_splits(10, 5, 42);
    REQUIRE(f.size() == 5);
    for (const auto& fold : f) CHECK(fold.size() == 2);
    const std::vector<std::vector<std::size_t>> golden{{2, 6}, {5, 9}, {0, 4}, {7, 8}, {1, 3}};
    CHECK(f == golden);
    for (std::size_t n : {5u, 7u, 23u, 100u}) {
        for (std::size_t k : {2u, 3u, 5u}) {
            if (n < k) continue;
            const auto folds = kfold_splits(n, k, n * k);
            std::set<std::size_t> all;
            std::size_t lo = n, hi = 0, total = 0;
            for (const auto& fold : folds) {
                all.insert(fold.begin(), fold.end());
                lo = std::min(lo, fold.size());
                hi = std::max(hi, fold.size());
                total += fold.size();
            }
            CHECK(all.size() == n);
            CHECK(total == n);
            CHECK(hi - lo <= 1);
            CHECK(folds == kfold_splits(n, k, n * k));
        }
    }
    CHECK_THROWS_AS(kfold_splits(3, 5, 0), InvalidInput);
}

TEST_CASE("p formatting") {
    CHECK(format_p(0.03125) == "0.031");
    CHECK(format_p(0.0005) == "<0.001");
    CHECK(format_p(1.0) == "1.000");
    CHECK(format_p(0.001) == "0.001");
}
