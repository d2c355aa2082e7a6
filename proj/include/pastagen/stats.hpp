#pragma once

// Evaluation metrics and the resampling tests used to compare models.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pastagen/volume.hpp"

namespace pastagen {

/// 2|A∩B| / (|A|+|B|) over nonzero voxels; 1 when both are empty.
double dice(const Mask& a, const Mask& b);
double dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Mann-Whitney AUC with ties counted one half. Labels are 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Unweighted mean of per-class F1 over classes 0..n_classes-1. A class absent
/// from both predictions and labels counts as 0 unless `skip_absent` is set.
double macro_f1(std::span<const int> predictions, std::span<const int> labels, int n_classes, bool skip_absent = false);

struct MetricSummary {
    double point = 0.0;
    double low = 0.0;
    double high = 0.0;
    std::size_t replicates = 0;
    double level = 0.95;
};

using Statistic = std::function<double(std::span<const double>)>;

double mean_of(std::span<const double> v);

/// Linear-interpolation quantile (type 7) of a sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

/// Percentile bootstrap. Replicate r resamples with its own substream of `seed`.
MetricSummary bootstrap_ci(std::span<const double> values, const Statistic& statistic, std::size_t B = 1000,
                           double level = 0.95, std::uint64_t seed = 0);

struct PairedScores {
    std::vector<std::string> case_ids;
    std::vector<double> a;
    std::vector<double> b;

    void validate() const;
};

enum class WilcoxonMethod { Auto, Exact, Normal };

/// One-sided signed-rank test of A > B. Zero differences are dropped; tied
/// |d| share mid-ranks. Auto uses the exact null for n <= 20.
double wilcoxon_one_sided(const PairedScores& paired, WilcoxonMethod method = WilcoxonMethod::Auto);

/// One-sided sign-flip test on the mean paired difference (A - B). Exhaustive
/// when 2^n <= N (p = count / 2^n, identity included), otherwise Monte-Carlo
/// with p = (1 + count) / (N + 1).
double paired_permutation_one_sided(const PairedScores& paired, std::size_t N = 10000, std::uint64_t seed = 0,
                                    bool force_monte_carlo = false);

/// Test folds that partition 0..n_cases-1; fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_splits(std::size_t n_cases, std::size_t k = 5, std::uint64_t seed = 0);

/// p formatted to three decimals, or "<0.001".
std::string format_p(double p);

}  // namespace pastagen
