#pragma once

// Diffusion-style refinement: forward noising to a shallow timestep, then a
// few reverse steps driven by a pluggable noise predictor, window by window.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pastagen/tiling.hpp"
#include "pastagen/volume.hpp"

namespace pastagen {

class NoiseSchedule {
public:
    int T() const noexcept { return static_cast<int>(beta_.size()); }
    /// 1-based timestep.
    double beta(int t) const { return beta_.at(static_cast<std::size_t>(t - 1)); }
    double alpha(int t) const { return 1.0 - beta(t); }
    /// Cumulative product; alpha_bar(0) == 1.
    double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_.at(static_cast<std::size_t>(t - 1)); }

    friend NoiseSchedule build_schedule(int T, double beta_min, double beta_max);

private:
    std::vector<double> beta_;
    std::vector<double> alpha_bar_;
};

/// Linear betas from beta_min to beta_max over T steps.
NoiseSchedule build_schedule(int T = 1000, double beta_min = 1e-4, double beta_max = 0.02);

enum class ReverseMode { Stochastic, Deterministic };

std::string reverse_mode_name(ReverseMode m);
ReverseMode reverse_mode_from_name(const std::string& s);

std::vector<double> forward_noise(std::span<const double> x0, int t, std::span<const double> eps, const NoiseSchedule& s);

/// One reverse step t -> t-1. Stochastic mode draws z from `noise_seed`
/// (hashed per element) and injects nothing at t == 1.
std::vector<double> reverse_step(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                                 const NoiseSchedule& s, ReverseMode mode, std::uint64_t noise_seed = 0);

struct PatchRequest {
    std::span<const double> x_t;        // normalised intensities, x-fastest
    std::span<const double> condition;  // organ labels over the same patch
    int t = 0;
    Dims shape{};
    std::size_t window_index = 0;
    Box box;
};

/// Returns predicted noise with the same element count as `x_t`.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual std::vector<double> predict(const PatchRequest& request) = 0;
    virtual std::string name() const = 0;
    /// True if calls must be serialised.
    virtual bool exclusive() const { return false; }
};

/// Standard-normal noise of window `window_index` for a refinement seeded by `seed`.
std::vector<double> window_noise(std::uint64_t seed, std::size_t window_index, std::size_t count);

/// Returns the noise refine_volume injected into each window.
class OraclePredictor final : public NoisePredictor {
public:
    explicit OraclePredictor(std::uint64_t seed) : seed_(seed) {}
    std::vector<double> predict(const PatchRequest& r) override;
    std::string name() const override { return "oracle"; }

private:
    std::uint64_t seed_;
};

class ZeroPredictor final : public NoisePredictor {
public:
    std::vector<double> predict(const PatchRequest& r) override { return std::vector<double>(r.x_t.size(), 0.0); }
    std::string name() const override { return "zero"; }
};

/// Treats a Gaussian-smoothed x_t as the clean-signal estimate.
class SmoothingPredictor final : public NoisePredictor {
public:
    explicit SmoothingPredictor(double sigma_voxels = 1.0);
    std::vector<double> predict(const PatchRequest& r) override;
    std::string name() const override;

private:
    double sigma_;
};

/// External process. Invoked as
///   <command> <x_t.f32> <condition.f32> <t> <nx> <ny> <nz> <out.f32>
/// Files are little-endian float32, x-fastest; the process writes nx*ny*nz floats to out.
class ExternalPredictor final : public NoisePredictor {
public:
    explicit ExternalPredictor(std::string command);
    std::vector<double> predict(const PatchRequest& r) override;
    std::string name() const override { return "exec:" + command_; }

private:
    std::string command_;
};

/// "oracle", "zero", "smooth[:sigma]" or "exec:<command>". Throws InvalidInput
/// for anything else. `noise_seed` must match the refinement seed for the oracle.
std::unique_ptr<NoisePredictor> make_predictor(const std::string& spec, std::uint64_t noise_seed);
/// Parses without constructing; throws on unknown names.
void validate_predictor_spec(const std::string& spec);

struct RefineConfig {
    int t_refine = 5;
    std::size_t window = 128;
    double overlap = 0.5;
    ReverseMode mode = ReverseMode::Stochastic;
    std::uint64_t seed = 0;
    int T = 1000;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    std::size_t workers = 1;

    void validate() const;
};

/// HU clipped to [-1000, 1000] and scaled to [-1, 1].
double normalize_hu(double hu) noexcept;
double denormalize_hu(double v) noexcept;

/// Refines every window and blends the results with partition-of-unity
/// weights. Only the change from the clipped input is blended back, so HU
/// outside the clip range pass through untouched by an identity refinement.
Volume3D refine_volume(const Volume3D& image, const LabelMap& organ_labels, NoisePredictor& predictor,
                       const RefineConfig& config);

}  // namespace pastagen
