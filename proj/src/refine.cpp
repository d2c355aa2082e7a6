#include "pastagen/refine.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "pastagen/error.hpp"
#include "pastagen/noise.hpp"
#include "pastagen/rng.hpp"

namespace pastagen {

NoiseSchedule build_schedule(int T, double beta_min, double beta_max) {
    if (T < 1) throw InvalidInput("schedule: T must be at least 1");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
        throw InvalidInput("schedule: need 0 < beta_min <= beta_max < 1");
    NoiseSchedule s;
    s.beta_.resize(static_cast<std::size_t>(T));
    s.alpha_bar_.resize(static_cast<std::size_t>(T));
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double b = T == 1 ? beta_min : beta_min + (beta_max - beta_min) * double(t - 1) / double(T - 1);
        s.beta_[static_cast<std::size_t>(t - 1)] = b;
        prod *= 1.0 - b;
        s.alpha_bar_[static_cast<std::size_t>(t - 1)] = prod;
    }
    return s;
}

std::string reverse_mode_name(ReverseMode m) { return m == ReverseMode::Stochastic ? "stochastic" : "deterministic"; }

ReverseMode reverse_mode_from_name(const std::string& s) {
    if (s == "stochastic") return ReverseMode::Stochastic;
    if (s == "deterministic") return ReverseMode::Deterministic;
    throw InvalidInput("unknown reverse mode '" + s + "'");
}

namespace {

void check_t(int t, const NoiseSchedule& s) {
    if (t < 1 || t > s.T()) throw InvalidInput("timestep " + std::to_string(t) + " outside [1, " + std::to_string(s.T()) + "]");
}

}  // namespace

std::vector<double> forward_noise(std::span<const double> x0, int t, std::span<const double> eps, const NoiseSchedule& s) {
    check_t(t, s);
    if (x0.size() != eps.size()) throw InvalidInput("forward_noise: noise and signal differ in size");
    const double a = std::sqrt(s.alpha_bar(t));
    const double b = std::sqrt(1.0 - s.alpha_bar(t));
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

std::vector<double> reverse_step(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                                 const NoiseSchedule& s, ReverseMode mode, std::uint64_t noise_seed) {
    check_t(t, s);
    if (x_t.size() != eps_hat.size()) throw InvalidInput("reverse_step: prediction and input differ in size");
    const double ab = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(t - 1);
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    std::vector<double> out(x_t.size());
    if (mode == ReverseMode::Deterministic) {
        const double pa = std::sqrt(ab_prev), pb = std::sqrt(1.0 - ab_prev);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double x0 = (x_t[i] - sb * eps_hat[i]) / sa;
            out[i] = pa * x0 + pb * eps_hat[i];
        }
        return out;
    }
    const double beta = s.beta(t);
    const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
    const double ct = std::sqrt(s.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
    const double sigma = t > 1 ? std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab)) : 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x0 = (x_t[i] - sb * eps_hat[i]) / sa;
        out[i] = c0 * x0 + ct * x_t[i];
        if (sigma > 0.0) out[i] += sigma * hashed_normal(noise_seed, i);
    }
    return out;
}

std::vector<double> window_noise(std::uint64_t seed, std::size_t window_index, std::size_t count) {
    const std::uint64_t ws = derive_seed(seed, {0x65707331ULL, window_index});
    std::vector<double> eps(count);
    for (std::size_t i = 0; i < count; ++i) eps[i] = hashed_normal(ws, i);
    return eps;
}

std::vector<double> OraclePredictor::predict(const PatchRequest& r) {
    return window_noise(seed_, r.window_index, r.x_t.size());
}

SmoothingPredictor::SmoothingPredictor(double sigma_voxels) : sigma_(sigma_voxels) {
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw InvalidInput("smoothing predictor: sigma must be positive");
}

std::string SmoothingPredictor::name() const {
    std::ostringstream os;
    os << "smooth:" << sigma_;
    return os.str();
}

std::vector<double> SmoothingPredictor::predict(const PatchRequest& r) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma_));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double ks = 0.0;
    for (std::ptrdiff_t o = -radius; o <= radius; ++o) {
        k[static_cast<std::size_t>(o + radius)] = std::exp(-0.5 * double(o * o) / (sigma_ * sigma_));
        ks += k[static_cast<std::size_t>(o + radius)];
    }
    for (auto& v : k) v /= ks;

    const Dims n = r.shape;
    std::vector<double> a(r.x_t.begin(), r.x_t.end()), b(a.size());
    auto at = [&](std::size_t x, std::size_t y, std::size_t z) { return x + n[0] * (y + n[1] * z); };
    for (int axis = 0; axis < 3; ++axis) {
        const auto len = static_cast<std::ptrdiff_t>(n[axis]);
        for (std::size_t z = 0; z < n[2]; ++z)
            for (std::size_t y = 0; y < n[1]; ++y)
                for (std::size_t x = 0; x < n[0]; ++x) {
                    Dims p{x, y, z};
                    const auto c = static_cast<std::ptrdiff_t>(p[axis]);
                    double acc = 0.0;
                    for (std::ptrdiff_t o = -radius; o <= radius; ++o) {
                        p[axis] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c + o, 0, len - 1));
                        acc += k[static_cast<std::size_t>(o + radius)] * a[at(p[0], p[1], p[2])];
                    }
                    b[at(x, y, z)] = acc;
                }
        std::swap(a, b);
    }
    // a now holds the smoothed patch, taken as sqrt(alpha_bar) * x0.
    const NoiseSchedule s = build_schedule();
    const double sb = std::sqrt(1.0 - s.alpha_bar(std::clamp(r.t, 1, s.T())));
    std::vector<double> eps(a.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (r.x_t[i] - a[i]) / sb;
    return eps;
}

ExternalPredictor::ExternalPredictor(std::string command) : command_(std::move(command)) {
    if (command_.empty()) throw InvalidInput("external predictor: empty command");
}

namespace {

void write_f32(const std::filesystem::path& p, std::span<const double> v) {
    std::vector<char> buf(v.size() * 4);
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v[i]));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        std::memcpy(buf.data() + 4 * i, &bits, 4);
    }
    std::ofstream f(p, std::ios::binary);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("cannot write " + p.string());
}

std::vector<double> read_f32(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("external predictor produced no output at " + p.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() % 4 != 0) throw IoError("external predictor output is not a float32 array");
    std::vector<double> out(buf.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, buf.data() + 4 * i, 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') q += "'\\''";
        else q += c;
    }
    return q + "'";
}

std::atomic<std::uint64_t> g_call_counter{0};

}  // namespace

std::vector<double> ExternalPredictor::predict(const PatchRequest& r) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("pastagen-" + std::to_string(::getpid()) + "-" + std::to_string(g_call_counter.fetch_add(1)));
    fs::create_directories(dir);
    struct Cleanup {
        fs::path d;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(d, ec);
        }
    } cleanup{dir};
    const fs::path xp = dir / "x_t.f32", cp = dir / "condition.f32", op = dir / "out.f32";
    write_f32(xp, r.x_t);
    write_f32(cp, r.condition);
    std::ostringstream cmd;
    cmd << command_ << ' ' << shell_quote(xp.string()) << ' ' << shell_quote(cp.string()) << ' ' << r.t << ' ' << r.shape[0]
        << ' ' << r.shape[1] << ' ' << r.shape[2] << ' ' << shell_quote(op.string());
    const int rc = std::system(cmd.str().c_str());
    if (rc != 0) throw IoError("external predictor exited with status " + std::to_string(rc));
    return read_f32(op);
}

void validate_predictor_spec(const std::string& spec) { (void)make_predictor(spec, 0); }

std::unique_ptr<NoisePredictor> make_predictor(const std::string& spec, std::uint64_t noise_seed) {
    if (spec == "oracle") return std::make_unique<OraclePredictor>(noise_seed);
    if (spec == "zero") return std::make_unique<ZeroPredictor>();
    if (spec == "smooth") return std::make_unique<SmoothingPredictor>();
    if (spec.rfind("smooth:", 0) == 0) {
        try {
            std::size_t used = 0;
            const double sigma = std::stod(spec.substr(7), &used);
            if (used != spec.size() - 7) throw std::invalid_argument("trailing characters");
            return std::make_unique<SmoothingPredictor>(sigma);
        } catch (const std::logic_error&) {
            throw InvalidInput("bad smoothing sigma in predictor '" + spec + "'");
        }
    }
    if (spec.rfind("exec:", 0) == 0) return std::make_unique<ExternalPredictor>(spec.substr(5));
    throw InvalidInput("unknown predictor '" + spec + "' (expected oracle, zero, smooth[:sigma] or exec:<command>)");
}

void RefineConfig::validate() const {
    if (T < 1) throw InvalidInput("refine: T must be at least 1");
    if (t_refine < 0 || t_refine > T) throw InvalidInput("refine: t_refine must lie in [0, T]");
    if (window == 0) throw InvalidInput("refine: window must be positive");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidInput("refine: overlap must lie in [0, 1)");
    if (workers == 0) throw InvalidInput("refine: workers must be positive");
    (void)build_schedule(T, beta_min, beta_max);
}

double normalize_hu(double hu) noexcept { return std::clamp(hu, -1000.0, 1000.0) / 1000.0; }
double denormalize_hu(double v) noexcept { return v * 1000.0; }

namespace {

std::string box_text(const Box& b) {
    std::ostringstream os;
    os << "[" << b.lo[0] << "," << b.lo[1] << "," << b.lo[2] << "]+[" << b.size[0] << "," << b.size[1] << "," << b.size[2] << "]";
    return os.str();
}

// Change in normalised-then-denormalised HU over one window.
std::vector<double> refine_window(const Volume3D& image, const LabelMap& labels, const Box& box, std::size_t index,
                                  NoisePredictor& predictor, std::mutex* exclusive, const NoiseSchedule& s,
                                  const RefineConfig& cfg) {
    const std::size_t n = box.size[0] * box.size[1] * box.size[2];
    std::vector<double> x0(n), cond(n);
    std::size_t k = 0;
    for (std::size_t z = 0; z < box.size[2]; ++z)
        for (std::size_t y = 0; y < box.size[1]; ++y)
            for (std::size_t x = 0; x < box.size[0]; ++x, ++k) {
                x0[k] = normalize_hu(image(box.lo[0] + x, box.lo[1] + y, box.lo[2] + z));
                cond[k] = labels(box.lo[0] + x, box.lo[1] + y, box.lo[2] + z);
            }
    const std::vector<double> eps = window_noise(cfg.seed, index, n);
    std::vector<double> x = forward_noise(x0, cfg.t_refine, eps, s);
    for (int t = cfg.t_refine; t >= 1; --t) {
        PatchRequest req{x, cond, t, box.size, index, box};
        std::vector<double> eps_hat;
        if (exclusive) {
            std::lock_guard lock(*exclusive);
            eps_hat = predictor.predict(req);
        } else {
            eps_hat = predictor.predict(req);
        }
        if (eps_hat.size() != n)
            throw StageError("refine", predictor.name() + " returned " + std::to_string(eps_hat.size()) + " values for window " +
                                           std::to_string(index) + " " + box_text(box) + ", expected " + std::to_string(n));
        for (double v : eps_hat)
            if (!std::isfinite(v))
                throw StageError("refine", predictor.name() + " returned a non-finite value for window " + std::to_string(index) +
                                               " " + box_text(box));
        x = reverse_step(x, t, eps_hat, s, cfg.mode, derive_seed(cfg.seed, {0x7a7a7a7aULL, index, static_cast<std::uint64_t>(t)}));
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = denormalize_hu(x[i]) - denormalize_hu(x0[i]);
    return x;
}

}  // namespace

Volume3D refine_volume(const Volume3D& image, const LabelMap& organ_labels, NoisePredictor& predictor,
                       const RefineConfig& config) {
    config.validate();
    if (image.dims() != organ_labels.dims()) throw InvalidInput("refine: image and labels differ in shape");
    if (config.t_refine == 0) return image;
    require_finite(image);

    const NoiseSchedule s = build_schedule(config.T, config.beta_min, config.beta_max);
    const WindowTiling tiling(image.dims(), config.window, config.overlap);
    const Geometry& g = image.geometry();
    std::vector<double> delta(image.size(), 0.0);
    std::mutex exclusive;
    std::mutex* lock = predictor.exclusive() ? &exclusive : nullptr;

    // Windows run in batches; each batch is folded into `delta` in window order.
    const std::size_t batch = std::max<std::size_t>(1, config.workers);
    for (std::size_t first = 0; first < tiling.size(); first += batch) {
        const std::size_t last = std::min(tiling.size(), first + batch);
        std::vector<std::vector<double>> results(last - first);
        std::vector<std::exception_ptr> errors(last - first);
        auto work = [&](std::size_t w) {
            try {
                results[w - first] = refine_window(image, organ_labels, tiling.boxes()[w], w, predictor, lock, s, config);
            } catch (...) {
                errors[w - first] = std::current_exception();
            }
        };
        if (last - first == 1) {
            work(first);
        } else {
            std::vector<std::thread> threads;
            for (std::size_t w = first; w < last; ++w) threads.emplace_back(work, w);
            for (auto& t : threads) t.join();
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (std::size_t w = first; w < last; ++w) {
            const Box& box = tiling.boxes()[w];
            const std::vector<double> weights = tiling.weight_field(w);
            const std::vector<double>& r = results[w - first];
            std::size_t k = 0;
            for (std::size_t z = 0; z < box.size[2]; ++z)
                for (std::size_t y = 0; y < box.size[1]; ++y)
                    for (std::size_t x = 0; x < box.size[0]; ++x, ++k)
                        delta[g.linear(box.lo[0] + x, box.lo[1] + y, box.lo[2] + z)] += weights[k] * r[k];
        }
    }

    Volume3D out = image;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(double(image[i]) + delta[i]);
    return out;
}

}  // namespace pastagen
