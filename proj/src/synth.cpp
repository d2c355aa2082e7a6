#include "pastagen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pastagen/error.hpp"
#include "pastagen/morphology.hpp"
#include "pastagen/noise.hpp"
#include "pastagen/rng.hpp"

namespace pastagen {

namespace {

// Semi-axes (mm) along each stored axis.
Vec3 semi_axes(const LesionSpec& spec, const Geometry& g) {
    const std::array<double, 3> by_anatomy{spec.size.x, spec.size.y, spec.size.z};
    Vec3 s{};
    for (int i = 0; i < 3; ++i) s[i] = by_anatomy[g.orientation.anatomical_axis(i)] / 2.0;
    return s;
}

struct IndexRange {
    Dims lo, hi;  // inclusive
};

IndexRange range_around(const Geometry& g, const Vec3& center, const Vec3& radius_mm) {
    IndexRange r;
    for (int a = 0; a < 3; ++a) {
        const double ext = std::ceil(radius_mm[a] / g.spacing[a]) + 1.0;
        r.lo[a] = static_cast<std::size_t>(std::max(0.0, std::floor(center[a] - ext)));
        r.hi[a] = static_cast<std::size_t>(std::clamp(std::ceil(center[a] + ext), 0.0, double(g.dims[a] - 1)));
    }
    return r;
}

template <class F>
void for_range(const IndexRange& r, F&& f) {
    for (std::size_t z = r.lo[2]; z <= r.hi[2]; ++z)
        for (std::size_t y = r.lo[1]; y <= r.hi[1]; ++y)
            for (std::size_t x = r.lo[0]; x <= r.hi[0]; ++x) f(x, y, z);
}

Vec3 to_vec(const Dims& d) { return {double(d[0]), double(d[1]), double(d[2])}; }

// Normalised ellipsoid radius of voxel p about c.
double ellipsoid_rho2(const Geometry& g, const Vec3& c, const Vec3& semi, std::size_t x, std::size_t y, std::size_t z) {
    const Vec3 p{double(x), double(y), double(z)};
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double u = (p[a] - c[a]) * g.spacing[a] / semi[a];
        acc += u * u;
    }
    return acc;
}

Mask ellipsoid_mask(const Geometry& g, const Vec3& c, const Vec3& semi) {
    Mask m(g, 0);
    for_range(range_around(g, c, semi), [&](std::size_t x, std::size_t y, std::size_t z) {
        if (ellipsoid_rho2(g, c, semi, x, y, z) <= 1.0 + 1e-9) m(x, y, z) = 1;
    });
    return m;
}

Mask irregular_mask(const Geometry& g, const Vec3& c, const Vec3& semi, double amplitude, std::uint64_t seed) {
    if (amplitude <= 0.0) return ellipsoid_mask(g, c, semi);
    Mask m(g, 0);
    const Vec3 reach{semi[0] * (1 + amplitude), semi[1] * (1 + amplitude), semi[2] * (1 + amplitude)};
    // Low-frequency radial modulation: noise sampled on a sphere of radius 1.5 lattice cells.
    const double freq = 1.5;
    for_range(range_around(g, c, reach), [&](std::size_t x, std::size_t y, std::size_t z) {
        const Vec3 p{double(x), double(y), double(z)};
        Vec3 u{};
        double rho2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            u[a] = (p[a] - c[a]) * g.spacing[a] / semi[a];
            rho2 += u[a] * u[a];
        }
        const double rho = std::sqrt(rho2);
        double limit = 1.0;
        if (rho > 1e-12) limit += amplitude * value_noise(seed, freq * u[0] / rho + 7.5, freq * u[1] / rho + 7.5, freq * u[2] / rho + 7.5);
        if (rho <= limit + 1e-9) m(x, y, z) = 1;
    });
    return m;
}

Mask punctate_mask(const Geometry& g, const Vec3& c, const Vec3& semi, int max_foci, std::uint64_t seed) {
    Rng rng(seed);
    const double smallest = std::min({semi[0], semi[1], semi[2]});
    const double focus_r = std::max(smallest / 2.0, std::max({g.spacing[0], g.spacing[1], g.spacing[2]}));
    const std::size_t n = 1 + rng.index(static_cast<std::uint64_t>(max_foci));
    std::vector<Vec3> centers{c};
    while (centers.size() < n) {
        Vec3 u{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] > 1.0) continue;
        Vec3 p{};
        for (int a = 0; a < 3; ++a) p[a] = c[a] + u[a] * std::max(semi[a] - focus_r, 0.0) / g.spacing[a];
        centers.push_back(p);
    }
    Mask m(g, 0);
    const Vec3 ball{focus_r, focus_r, focus_r};
    for (const Vec3& fc : centers)
        for_range(range_around(g, fc, ball), [&](std::size_t x, std::size_t y, std::size_t z) {
            if (ellipsoid_rho2(g, fc, ball, x, y, z) <= 1.0 + 1e-9) m(x, y, z) = 1;
        });
    return m;
}

Mask wall_mask(const LesionSpec& spec, const Dims& center, const Volume3D& image, const Mask& organ, const Vec3& semi,
               double lumen_max_hu) {
    const Geometry& g = organ.geometry();
    Mask lumen = organ.like<std::uint8_t>(0);
    std::size_t lumen_count = 0;
    for (std::size_t i = 0; i < organ.size(); ++i)
        if (organ[i] && image[i] < lumen_max_hu) {
            lumen[i] = 1;
            ++lumen_count;
        }
    const double thickness = std::max(spec.size.min() / 2.0, std::max({g.spacing[0], g.spacing[1], g.spacing[2]}));

    Mask shell = organ.like<std::uint8_t>(0);
    std::size_t shell_count = 0;
    if (lumen_count > 0) {
        // Wall tissue thickened into the lumen.
        Mask wall = organ.like<std::uint8_t>(0);
        for (std::size_t i = 0; i < organ.size(); ++i) wall[i] = organ[i] && !lumen[i];
        const auto d2 = squared_distance_to(wall);
        for (std::size_t i = 0; i < organ.size(); ++i)
            if (organ[i] && within_radius_sq(d2[i], thickness)) shell[i] = 1, ++shell_count;
    } else {
        // No lumen: band inside the organ surface.
        Mask outside = organ.like<std::uint8_t>(0);
        for (std::size_t i = 0; i < organ.size(); ++i) outside[i] = organ[i] ? 0 : 1;
        const auto d2 = squared_distance_to(outside);
        for (std::size_t i = 0; i < organ.size(); ++i)
            if (organ[i] && within_radius_sq(d2[i], thickness)) shell[i] = 1, ++shell_count;
    }
    if (shell_count == 0) throw StageError("shape", "no computable wall for " + std::string(location_name(spec.organ())));

    // Snap to the nearest shell voxel.
    const Vec3 c0 = to_vec(center);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < shell.size(); ++i) {
        if (!shell[i]) continue;
        const Dims p = g.unravel(i);
        double d = 0.0;
        for (int a = 0; a < 3; ++a) d += std::pow((double(p[a]) - c0[a]) * g.spacing[a], 2);
        if (d < best) best = d, best_i = i;
    }
    const Vec3 c = to_vec(g.unravel(best_i));
    Mask out = organ.like<std::uint8_t>(0);
    for_range(range_around(g, c, semi), [&](std::size_t x, std::size_t y, std::size_t z) {
        if (shell(x, y, z) && ellipsoid_rho2(g, c, semi, x, y, z) <= 1.0 + 1e-9) out(x, y, z) = 1;
    });
    return out;
}

std::optional<Vec3> centroid(const Mask& m) {
    Vec3 acc{0, 0, 0};
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i]) continue;
        const Dims p = m.geometry().unravel(i);
        for (int a = 0; a < 3; ++a) acc[a] += double(p[a]);
        ++n;
    }
    if (n == 0) return std::nullopt;
    for (auto& v : acc) v /= double(n);
    return acc;
}

std::vector<double> gaussian_kernel(double sigma_vox, std::size_t radius) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double d = double(i) - double(radius);
        k[i] = std::exp(-0.5 * d * d / (sigma_vox * sigma_vox));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

}  // namespace

RingStats ring_stats(const Volume3D& image, const Mask& lesion, const Mask& organ, double thickness_mm) {
    const auto d2 = squared_distance_to(lesion);
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        if (!organ[i] || lesion[i] || !within_radius_sq(d2[i], thickness_mm)) continue;
        const double v = image[i];
        sum += v;
        sum2 += v * v;
        ++n;
    }
    if (n == 0) throw StageError("density", "no organ tissue in the ring around the lesion");
    RingStats r;
    r.count = n;
    r.mean = sum / double(n);
    r.stddev = std::sqrt(std::max(0.0, sum2 / double(n) - r.mean * r.mean));
    return r;
}

Dims place_lesion(const Mask& organ, const LesionSpec& spec, std::uint64_t seed) {
    const double radius = std::max(spec.size.min() / 2.0, 1.0);
    const Mask eroded = erode(organ, radius);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < eroded.size(); ++i)
        if (eroded[i]) candidates.push_back(i);
    if (candidates.empty())
        throw StageError("place", std::string(location_name(spec.organ())) + " has no room for a lesion of " + format_size(spec.size));
    Rng rng(seed);
    return organ.geometry().unravel(candidates[rng.index(candidates.size())]);
}

Mask make_shape_mask(const LesionSpec& spec, const Dims& center, const Volume3D& image, const Mask& organ,
                     const SamplingParams& params, std::uint64_t seed) {
    const Geometry& g = organ.geometry();
    if (!(image.geometry() == g)) throw InvalidInput("image and organ mask differ in geometry");
    const Vec3 semi = semi_axes(spec, g);
    const Vec3 c = to_vec(center);
    switch (spec.shape) {
        case Shape::RoundLike: return ellipsoid_mask(g, c, semi);
        case Shape::Irregular: return irregular_mask(g, c, semi, params.irregular_amplitude, seed);
        case Shape::WallThickening: return wall_mask(spec, center, image, organ, semi, params.lumen_max_hu);
        case Shape::PunctateNodular: return punctate_mask(g, c, semi, params.punctate_max_foci, seed);
    }
    throw InvalidInput("unknown shape option");
}

double sample_density_offset(Density density, const SamplingParams& params, std::uint64_t seed) {
    const Interval& b = params.density_offset_hu[static_cast<std::size_t>(density)];
    Rng rng(seed);
    return rng.uniform(b.lo, b.hi);
}

Volume3D apply_density(const Volume3D& image, const Mask& region, double value) {
    Volume3D out = image;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (region[i]) out[i] = static_cast<float>(value);
    return out;
}

TextureParams sample_texture(Heterogeneity heterogeneity, const SamplingParams& params, std::uint64_t seed) {
    Rng rng(seed);
    TextureParams t;
    t.lattice_mm = params.noise_lattice_mm;
    t.fine_sigma_hu = params.homogeneous_sigma_hu * rng.uniform(0.5, 1.0);
    if (heterogeneity == Heterogeneity::Heterogeneous)
        t.amplitude_hu = rng.uniform(params.heterogeneity_amplitude_hu.lo, params.heterogeneity_amplitude_hu.hi);
    return t;
}

Volume3D apply_heterogeneity(const Volume3D& image, const Mask& lesion, const TextureParams& texture, std::uint64_t seed,
                             const Mask* region) {
    const Mask& paint = region ? *region : lesion;
    if (texture.amplitude_hu <= 0.0 && texture.fine_sigma_hu <= 0.0) return image;
    const Geometry& g = image.geometry();
    const std::uint64_t lattice_seed = derive_seed(seed, "lattice");
    const std::uint64_t fine_seed = derive_seed(seed, "fine");

    auto field_at = [&](std::size_t i) {
        const Dims p = g.unravel(i);
        return value_noise(lattice_seed, double(p[0]) * g.spacing[0] / texture.lattice_mm,
                           double(p[1]) * g.spacing[1] / texture.lattice_mm, double(p[2]) * g.spacing[2] / texture.lattice_mm);
    };

    // Normalise the low-frequency field to zero mean, unit std over the lesion.
    double shift = 0.0, scale = 0.0;
    if (texture.amplitude_hu > 0.0) {
        double sum = 0.0, sum2 = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < lesion.size(); ++i) {
            if (!lesion[i]) continue;
            const double v = field_at(i);
            sum += v;
            sum2 += v * v;
            ++n;
        }
        if (n > 0) {
            shift = sum / double(n);
            const double sd = std::sqrt(std::max(0.0, sum2 / double(n) - shift * shift));
            scale = sd > 1e-12 ? texture.amplitude_hu / sd : 0.0;
        }
    }

    Volume3D out = image;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!paint[i]) continue;
        double add = 0.0;
        if (scale > 0.0) add += (field_at(i) - shift) * scale;
        if (texture.fine_sigma_hu > 0.0) add += texture.fine_sigma_hu * hashed_normal(fine_seed, i);
        out[i] = static_cast<float>(double(out[i]) + add);
    }
    return out;
}

double sample_blur_sigma(Surface surface, const SamplingParams& params, std::uint64_t seed) {
    const Interval& b = surface == Surface::WellDefined ? params.blur_well_mm : params.blur_ill_mm;
    Rng rng(seed);
    return rng.uniform(b.lo, b.hi);
}

Volume3D apply_surface(const Volume3D& background, const Volume3D& lesion_field, const Mask& lesion, double sigma_mm) {
    const Geometry& g = background.geometry();
    if (!(lesion_field.geometry() == g) || !(lesion.geometry() == g)) throw InvalidInput("surface blend inputs differ in geometry");
    Volume3D out = background;
    if (sigma_mm <= 0.0) {
        for (std::size_t i = 0; i < out.size(); ++i)
            if (lesion[i]) out[i] = lesion_field[i];
        return out;
    }

    const double reach = 3.0 * sigma_mm;
    const auto d_out = squared_distance_to(lesion);
    Mask background_mask = lesion.like<std::uint8_t>(0);
    for (std::size_t i = 0; i < lesion.size(); ++i) background_mask[i] = lesion[i] ? 0 : 1;
    const auto d_in = squared_distance_to(background_mask);

    // Separable blur of the mask, restricted to the lesion bounding box grown by the kernel reach.
    Dims lo{g.dims}, hi{0, 0, 0};
    bool any = false;
    for (std::size_t i = 0; i < lesion.size(); ++i) {
        if (!lesion[i]) continue;
        any = true;
        const Dims p = g.unravel(i);
        for (int a = 0; a < 3; ++a) lo[a] = std::min(lo[a], p[a]), hi[a] = std::max(hi[a], p[a]);
    }
    if (!any) return out;
    std::array<std::size_t, 3> radius{};
    std::array<std::vector<double>, 3> kernel;
    for (int a = 0; a < 3; ++a) {
        radius[a] = static_cast<std::size_t>(std::floor(reach / g.spacing[a] + 1e-9));
        kernel[a] = gaussian_kernel(sigma_mm / g.spacing[a], radius[a]);
        lo[a] = lo[a] >= radius[a] ? lo[a] - radius[a] : 0;
        hi[a] = std::min(hi[a] + radius[a], g.dims[a] - 1);
    }
    const Dims n{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
    std::vector<double> buf(n[0] * n[1] * n[2]), tmp(buf.size());
    auto at = [&](std::size_t x, std::size_t y, std::size_t z) { return x + n[0] * (y + n[1] * z); };
    for (std::size_t z = 0; z < n[2]; ++z)
        for (std::size_t y = 0; y < n[1]; ++y)
            for (std::size_t x = 0; x < n[0]; ++x) buf[at(x, y, z)] = lesion(lo[0] + x, lo[1] + y, lo[2] + z) ? 1.0 : 0.0;

    for (int axis = 0; axis < 3; ++axis) {
        const auto& k = kernel[axis];
        const auto r = static_cast<std::ptrdiff_t>(radius[axis]);
        for (std::size_t z = 0; z < n[2]; ++z)
            for (std::size_t y = 0; y < n[1]; ++y)
                for (std::size_t x = 0; x < n[0]; ++x) {
                    Dims p{x, y, z};
                    const auto c = static_cast<std::ptrdiff_t>(p[axis]);
                    double acc = 0.0;
                    for (std::ptrdiff_t o = -r; o <= r; ++o) {
                        const std::ptrdiff_t q = c + o;
                        if (q < 0 || q >= static_cast<std::ptrdiff_t>(n[axis])) continue;
                        p[axis] = static_cast<std::size_t>(q);
                        acc += k[static_cast<std::size_t>(o + r)] * buf[at(p[0], p[1], p[2])];
                    }
                    tmp[at(x, y, z)] = acc;
                }
        std::swap(buf, tmp);
    }

    for (std::size_t z = 0; z < n[2]; ++z)
        for (std::size_t y = 0; y < n[1]; ++y)
            for (std::size_t x = 0; x < n[0]; ++x) {
                const std::size_t i = g.linear(lo[0] + x, lo[1] + y, lo[2] + z);
                double alpha = buf[at(x, y, z)];
                if (lesion[i]) {
                    if (!within_radius_sq(d_in[i], reach)) alpha = 1.0;
                } else if (!within_radius_sq(d_out[i], reach)) {
                    alpha = 0.0;
                }
                if (alpha <= 0.0) continue;
                if (alpha >= 1.0) {
                    out[i] = lesion_field[i];
                    continue;
                }
                const double bg = background[i];
                out[i] = static_cast<float>(bg + alpha * (double(lesion_field[i]) - bg));
            }
    return out;
}

InvasionGeometry sample_invasion(const SamplingParams& params, std::uint64_t seed) {
    Rng rng(seed);
    return {rng.uniform(params.invasion_depth_mm.lo, params.invasion_depth_mm.hi), params.invasion_cone_deg};
}

Mask apply_invasion(const Mask& lesion, const Mask& organ, Invasion invasion, const InvasionGeometry& geometry,
                    std::uint64_t seed) {
    const Geometry& g = organ.geometry();
    if (!(lesion.geometry() == g)) throw InvalidInput("lesion and organ masks differ in geometry");
    Mask base = lesion;
    for (std::size_t i = 0; i < base.size(); ++i) base[i] = (lesion[i] && organ[i]) ? 1 : 0;
    if (invasion == Invasion::NoCloseRelationship || geometry.depth_mm <= 0.0) return base;

    const auto c = centroid(base);
    if (!c) return base;

    // Nearest non-organ voxel to the centroid.
    double best = std::numeric_limits<double>::infinity();
    Vec3 exit{};
    for (std::size_t i = 0; i < organ.size(); ++i) {
        if (organ[i]) continue;
        const Dims p = g.unravel(i);
        double d = 0.0;
        for (int a = 0; a < 3; ++a) d += std::pow((double(p[a]) - (*c)[a]) * g.spacing[a], 2);
        if (d < best) best = d, exit = to_vec(p);
    }
    if (!std::isfinite(best)) return base;

    Vec3 axis{};
    double norm = 0.0;
    for (int a = 0; a < 3; ++a) {
        axis[a] = (exit[a] - (*c)[a]) * g.spacing[a];
        norm += axis[a] * axis[a];
    }
    norm = std::sqrt(norm);
    for (auto& v : axis) v /= norm;

    // Tilt the cone axis by up to half the cone angle.
    Rng rng(seed);
    const double half = geometry.cone_deg * std::numbers::pi / 180.0;
    Vec3 w{rng.normal(), rng.normal(), rng.normal()};
    const double wd = w[0] * axis[0] + w[1] * axis[1] + w[2] * axis[2];
    double wn = 0.0;
    for (int a = 0; a < 3; ++a) w[a] -= wd * axis[a], wn += w[a] * w[a];
    wn = std::sqrt(wn);
    const double tilt = rng.uniform(0.0, half / 2.0);
    if (wn > 1e-12)
        for (int a = 0; a < 3; ++a) axis[a] = std::cos(tilt) * axis[a] + std::sin(tilt) * w[a] / wn;

    const double max_spacing = std::max({g.spacing[0], g.spacing[1], g.spacing[2]});
    const double reach = norm + geometry.depth_mm + max_spacing;
    const double cos_half = std::cos(half);
    const auto d_organ = squared_distance_to(organ);

    Mask out = base;
    for_range(range_around(g, *c, {reach, reach, reach}), [&](std::size_t x, std::size_t y, std::size_t z) {
        const std::size_t i = g.linear(x, y, z);
        if (out[i]) return;
        if (!organ[i] && !within_radius_sq(d_organ[i], geometry.depth_mm)) return;
        const Vec3 p{double(x), double(y), double(z)};
        Vec3 v{};
        double len = 0.0;
        for (int a = 0; a < 3; ++a) {
            v[a] = (p[a] - (*c)[a]) * g.spacing[a];
            len += v[a] * v[a];
        }
        len = std::sqrt(len);
        if (len > reach) return;
        if (len > 1e-9 && (v[0] * axis[0] + v[1] * axis[1] + v[2] * axis[2]) / len < cos_half) return;
        out[i] = 1;
    });
    return out;
}

LabelMap compose_labels(const LabelMap& organ_labels, const Mask& lesion, LesionType type) {
    const auto id = static_cast<int>(type);
    if (id < 11 || id > 25) throw InvalidInput("unknown lesion type");
    if (!(organ_labels.geometry() == lesion.geometry())) throw InvalidInput("labels and lesion mask differ in geometry");
    LabelMap out = organ_labels;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (lesion[i]) out[i] = static_cast<std::uint8_t>(id);
    return out;
}

Mask lesion_mask(const LabelMap& labels) {
    Mask m = labels.like<std::uint8_t>(0);
    for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] > kOrganCount ? 1 : 0;
    return m;
}

SynthSample synthesize(const Template& tmpl, const LesionSpec& spec, const SamplingParams& params) {
    if (!(tmpl.image.geometry() == tmpl.labels.geometry())) throw StageError("place", "template image and labels differ in geometry");
    const Mask organ = select_label(tmpl.labels, class_id(spec.organ()));
    if (!(mask_volume_mm3(organ) > 4000.0))
        throw StageError("place", std::string(location_name(spec.organ())) + " volume is not above 4000 mm^3");

    Provenance prov;
    prov.template_id = tmpl.id;
    prov.spec = spec;
    prov.center = place_lesion(organ, spec, derive_seed(spec.seed, "place"));

    const Mask shape = make_shape_mask(spec, prov.center, tmpl.image, organ, params, derive_seed(spec.seed, "shape"));
    if (count_nonzero(shape) == 0) throw StageError("shape", "empty lesion mask");

    prov.invasion = spec.invasion == Invasion::CloseRelationship ? sample_invasion(params, derive_seed(spec.seed, "invasion-depth"))
                                                                 : InvasionGeometry{0.0, params.invasion_cone_deg};
    const Mask lesion = apply_invasion(shape, organ, spec.invasion, prov.invasion, derive_seed(spec.seed, "invasion"));
    if (count_nonzero(lesion) == 0) throw StageError("invasion", "lesion vanished after clipping to the organ");

    prov.ring = ring_stats(tmpl.image, lesion, organ, params.ring_mm);
    prov.density_offset_hu = sample_density_offset(spec.density, params, derive_seed(spec.seed, "density"));
    prov.blur_sigma_mm = sample_blur_sigma(spec.surface, params, derive_seed(spec.seed, "surface"));
    prov.texture = sample_texture(spec.heterogeneity, params, derive_seed(spec.seed, "texture"));

    const Mask support = prov.blur_sigma_mm > 0.0 ? dilate(lesion, 3.0 * prov.blur_sigma_mm) : lesion;
    Volume3D field = apply_density(tmpl.image, support, prov.ring.mean + prov.density_offset_hu);
    field = apply_heterogeneity(field, lesion, prov.texture, derive_seed(spec.seed, "heterogeneity"), &support);

    SynthSample s;
    s.image = apply_surface(tmpl.image, field, lesion, prov.blur_sigma_mm);
    s.labels = compose_labels(tmpl.labels, lesion, spec.type);
    s.report = render_report(spec);
    s.provenance = std::move(prov);
    return s;
}

nlohmann::ordered_json spec_to_json(const LesionSpec& spec) {
    nlohmann::ordered_json j;
    j["lesion_type"] = lesion_key(spec.type);
    j["enhancement"] = modality_name(spec.enhancement);
    j["size_mm_zxy"] = {spec.size.z, spec.size.x, spec.size.y};
    j["shape"] = option_name(spec.shape);
    j["density"] = option_name(spec.density);
    j["heterogeneity"] = option_name(spec.heterogeneity);
    j["surface"] = option_name(spec.surface);
    j["invasion"] = option_name(spec.invasion);
    j["seed"] = spec.seed;
    return j;
}

LesionSpec spec_from_json(const nlohmann::json& j) {
    try {
        LesionSpec s;
        const auto type = lesion_from_name(j.at("lesion_type").get<std::string>());
        const auto phase = modality_from_name(j.at("enhancement").get<std::string>());
        if (!type || !phase) throw InvalidInput("spec: unknown lesion type or phase");
        s.type = *type;
        s.enhancement = *phase;
        const auto size = j.at("size_mm_zxy").get<std::array<double, 3>>();
        s.size = {size[0], size[1], size[2]};
        StructuredReport r;
        r.shape = j.at("shape").get<std::string>();
        r.density = j.at("density").get<std::string>();
        r.heterogeneity = j.at("heterogeneity").get<std::string>();
        r.surface = j.at("surface").get<std::string>();
        r.invasion = j.at("invasion").get<std::string>();
        const ReportLabels l = report_class_labels(r);
        s.shape = static_cast<Shape>(l[0]);
        s.density = static_cast<Density>(l[1]);
        s.heterogeneity = static_cast<Heterogeneity>(l[2]);
        s.surface = static_cast<Surface>(l[3]);
        s.invasion = static_cast<Invasion>(l[4]);
        s.seed = j.at("seed").get<std::uint64_t>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("spec: ") + e.what());
    }
}

nlohmann::ordered_json provenance_to_json(const Provenance& p) {
    nlohmann::ordered_json j;
    j["template_id"] = p.template_id;
    j["spec"] = spec_to_json(p.spec);
    j["center_voxel"] = p.center;
    j["ring"] = {{"mean_hu", p.ring.mean}, {"std_hu", p.ring.stddev}, {"voxels", p.ring.count}};
    j["density_offset_hu"] = p.density_offset_hu;
    j["texture"] = {{"amplitude_hu", p.texture.amplitude_hu},
                    {"fine_sigma_hu", p.texture.fine_sigma_hu},
                    {"lattice_mm", p.texture.lattice_mm}};
    j["blur_sigma_mm"] = p.blur_sigma_mm;
    j["invasion"] = {{"depth_mm", p.invasion.depth_mm}, {"cone_deg", p.invasion.cone_deg}};
    return j;
}

}  // namespace pastagen
