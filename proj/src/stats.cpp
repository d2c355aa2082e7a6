#include "pastagen/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "pastagen/error.hpp"
#include "pastagen/rng.hpp"

namespace pastagen {

double dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw InvalidInput("dice: masks differ in size");
    std::uint64_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool x = a[i] != 0, y = b[i] != 0;
        na += x;
        nb += y;
        both += x && y;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * double(both) / double(na + nb);
}

double dice(const Mask& a, const Mask& b) {
    if (a.dims() != b.dims()) throw InvalidInput("dice: masks differ in shape");
    return dice(a.voxels(), b.voxels());
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InvalidInput("auc: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });
    // Sum of doubled mid-ranks of the positives keeps the arithmetic integral.
    std::uint64_t pos = 0, neg = 0, rank2_sum = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const std::uint64_t rank2 = i + 1 + j;  // 2 * mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            const int l = labels[order[k]];
            if (l != 0 && l != 1) throw InvalidInput("auc: labels must be 0 or 1");
            if (l == 1) ++pos, rank2_sum += rank2;
            else ++neg;
        }
        i = j;
    }
    if (pos == 0 || neg == 0) throw UndefinedStatistic("auc: labels need at least one positive and one negative");
    const double u2 = double(rank2_sum) - double(pos * (pos + 1));  // 2U
    return u2 / (2.0 * double(pos) * double(neg));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw InvalidInput("accuracy: inputs differ in length");
    if (predictions.empty()) throw InvalidInput("accuracy: empty input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
    return double(hit) / double(labels.size());
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels, int n_classes, bool skip_absent) {
    if (predictions.size() != labels.size()) throw InvalidInput("macro_f1: inputs differ in length");
    if (predictions.empty()) throw InvalidInput("macro_f1: empty input");
    if (n_classes < 1) throw InvalidInput("macro_f1: need at least one class");
    std::vector<std::uint64_t> tp(n_classes), fp(n_classes), fn(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = predictions[i], l = labels[i];
        if (p < 0 || p >= n_classes || l < 0 || l >= n_classes) throw InvalidInput("macro_f1: class outside [0, n_classes)");
        if (p == l) ++tp[p];
        else ++fp[p], ++fn[l];
    }
    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < n_classes; ++c) {
        const std::uint64_t denom = 2 * tp[c] + fp[c] + fn[c];
        if (denom == 0) {
            if (skip_absent) continue;
            ++counted;
            continue;
        }
        sum += 2.0 * double(tp[c]) / double(denom);
        ++counted;
    }
    if (counted == 0) throw UndefinedStatistic("macro_f1: every class is absent");
    return sum / counted;
}

double mean_of(std::span<const double> v) {
    if (v.empty()) throw InvalidInput("mean of an empty sample");
    // Running mean: exact for constant samples.
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) m += (v[i] - m) / double(i + 1);
    return m;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
    const double h = (double(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

MetricSummary bootstrap_ci(std::span<const double> values, const Statistic& statistic, std::size_t B, double level,
                           std::uint64_t seed) {
    if (values.empty()) throw InvalidInput("bootstrap: empty sample");
    if (B == 0) throw InvalidInput("bootstrap: need at least one replicate");
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("bootstrap: level must lie in (0, 1)");
    MetricSummary m;
    m.point = statistic(values);
    m.replicates = B;
    m.level = level;
    std::vector<double> reps(B), sample(values.size());
    for (std::size_t r = 0; r < B; ++r) {
        Rng rng(derive_seed(seed, {r}));
        for (auto& v : sample) v = values[rng.index(values.size())];
        reps[r] = statistic(sample);
    }
    std::sort(reps.begin(), reps.end());
    const double alpha = 1.0 - level;
    m.low = quantile_sorted(reps, alpha / 2.0);
    m.high = quantile_sorted(reps, 1.0 - alpha / 2.0);
    // A constant sample must give a degenerate interval even under rounding.
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) m.low = m.high = m.point;
    return m;
}

void PairedScores::validate() const {
    if (a.size() != b.size()) throw InvalidInput("paired scores differ in length");
    if (!case_ids.empty() && case_ids.size() != a.size()) throw InvalidInput("paired scores: case ids do not match scores");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw InvalidInput("paired scores must be finite");
}

namespace {

struct SignedRanks {
    std::vector<std::uint64_t> rank2;  // doubled mid-ranks of |d|
    std::vector<bool> positive;
    std::vector<std::size_t> tie_sizes;
};

SignedRanks signed_ranks(const PairedScores& p) {
    p.validate();
    std::vector<double> d;
    for (std::size_t i = 0; i < p.a.size(); ++i) {
        const double x = p.a[i] - p.b[i];
        if (x != 0.0) d.push_back(x);
    }
    if (d.empty()) throw UndefinedStatistic("wilcoxon: every paired difference is zero");
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::fabs(d[i]) < std::fabs(d[j]); });
    SignedRanks s;
    s.rank2.resize(d.size());
    s.positive.resize(d.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && std::fabs(d[order[j]]) == std::fabs(d[order[i]])) ++j;
        for (std::size_t k = i; k < j; ++k) s.rank2[order[k]] = i + 1 + j;
        s.tie_sizes.push_back(j - i);
        i = j;
    }
    for (std::size_t i = 0; i < d.size(); ++i) s.positive[i] = d[i] > 0;
    return s;
}

double wilcoxon_exact(const SignedRanks& s) {
    std::uint64_t observed = 0, total = 0;
    for (std::size_t i = 0; i < s.rank2.size(); ++i) {
        total += s.rank2[i];
        if (s.positive[i]) observed += s.rank2[i];
    }
    // counts[w]: sign patterns whose doubled positive-rank sum is w.
    std::vector<double> counts(total + 1, 0.0);
    counts[0] = 1.0;
    for (std::uint64_t r : s.rank2)
        for (std::uint64_t w = total; w >= r; --w) {
            counts[w] += counts[w - r];
            if (w == r) break;
        }
    double tail = 0.0;
    for (std::uint64_t w = observed; w <= total; ++w) tail += counts[w];
    return tail / std::ldexp(1.0, static_cast<int>(s.rank2.size()));
}

double wilcoxon_normal(const SignedRanks& s) {
    const double n = double(s.rank2.size());
    double w = 0.0;
    for (std::size_t i = 0; i < s.rank2.size(); ++i)
        if (s.positive[i]) w += double(s.rank2[i]) / 2.0;
    const double mean = n * (n + 1) / 4.0;
    double var = n * (n + 1) * (2 * n + 1) / 24.0;
    for (std::size_t t : s.tie_sizes) var -= (std::pow(double(t), 3) - double(t)) / 48.0;
    if (var <= 0.0) return w > mean ? 0.0 : 1.0;
    const double z = (w - mean - 0.5) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

double wilcoxon_one_sided(const PairedScores& paired, WilcoxonMethod method) {
    const SignedRanks s = signed_ranks(paired);
    const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && s.rank2.size() <= 20);
    if (exact && s.rank2.size() > 62) throw InvalidInput("wilcoxon: exact null limited to 62 nonzero differences");
    return exact ? wilcoxon_exact(s) : wilcoxon_normal(s);
}

double paired_permutation_one_sided(const PairedScores& paired, std::size_t N, std::uint64_t seed, bool force_monte_carlo) {
    paired.validate();
    const std::size_t n = paired.a.size();
    if (n == 0) throw InvalidInput("permutation test: no pairs");
    if (N == 0) throw InvalidInput("permutation test: need at least one permutation");
    std::vector<double> d(n);
    double observed = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = paired.a[i] - paired.b[i];
        observed += d[i];
        scale += std::fabs(d[i]);
    }
    // Sums, not means: same ordering, and ties compare with a relative tolerance.
    const double tol = 1e-12 * std::max(scale, 1.0);
    const bool exhaustive = !force_monte_carlo && n < 63 && (std::uint64_t{1} << n) <= N;
    if (exhaustive) {
        const std::uint64_t patterns = std::uint64_t{1} << n;
        std::uint64_t count = 0;
        for (std::uint64_t m = 0; m < patterns; ++m) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += (m >> i & 1) ? -d[i] : d[i];
            if (sum >= observed - tol) ++count;
        }
        return double(count) / double(patterns);
    }
    std::uint64_t count = 0;
    for (std::size_t r = 0; r < N; ++r) {
        Rng rng(derive_seed(seed, {r}));
        double sum = 0.0;
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % 64 == 0) bits = rng.next();
            sum += (bits & 1) ? -d[i] : d[i];
            bits >>= 1;
        }
        if (sum >= observed - tol) ++count;
    }
    return (1.0 + double(count)) / (double(N) + 1.0);
}

std::vector<std::vector<std::size_t>> kfold_splits(std::size_t n_cases, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw InvalidInput("kfold: k must be at least 2");
    if (n_cases < k) throw InvalidInput("kfold: fewer cases than folds");
    std::vector<std::size_t> idx(n_cases);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n_cases - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n_cases; ++i) folds[i % k].push_back(idx[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::string format_p(double p) {
    if (p < 0.001) return "<0.001";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", p);
    return buf;
}

}  // namespace pastagen
