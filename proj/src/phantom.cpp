#include "pastagen/phantom.hpp"

#include <cmath>
#include <functional>

#include "pastagen/error.hpp"
#include "pastagen/noise.hpp"

namespace pastagen {

namespace {

struct Point {
    double x, y, z;
};

using Region = std::function<bool(const Point&)>;

Region ellipsoid(Point c, Point r) {
    return [=](const Point& p) {
        const double u = (p.x - c.x) / r.x, v = (p.y - c.y) / r.y, w = (p.z - c.z) / r.z;
        return u * u + v * v + w * w <= 1.0;
    };
}

// Cylinder along z.
Region column(double cx, double cy, double r, double z0, double z1) {
    return [=](const Point& p) {
        const double dx = p.x - cx, dy = p.y - cy;
        return p.z >= z0 && p.z <= z1 && dx * dx + dy * dy <= r * r;
    };
}

// Cylinder along x.
Region tube_x(double cy, double cz, double r, double x0, double x1) {
    return [=](const Point& p) {
        const double dy = p.y - cy, dz = p.z - cz;
        return p.x >= x0 && p.x <= x1 && dy * dy + dz * dz <= r * r;
    };
}

struct Part {
    Organ organ;
    Region region;
    double plain_hu;
    double enhanced_hu;
};

struct Cavity {
    Region region;
    double hu;
};

struct Vessel {
    AuxStructure id;
    Region region;
    double plain_hu;
    double enhanced_hu;
};

}  // namespace

Phantom make_phantom(const PhantomOptions& opt) {
    const Dims full{80, 64, 128};
    Geometry g;
    g.dims = full;
    g.spacing = {1.0, 1.0, 1.0};
    g.orientation = Orientation::from_code(0);
    g.origin = {0.0, 0.0, 0.0};

    const bool enhanced = opt.modality == Modality::Enhanced;
    const Region body = [](const Point& p) {
        const double u = (p.x - 40.0) / 38.0, v = (p.y - 32.0) / 30.0;
        return u * u + v * v <= 1.0;
    };
    const std::vector<Part> parts{
        {Organ::Liver, ellipsoid({22, 28, 70}, {16, 16, 14}), 58, 100},
        {Organ::Stomach, ellipsoid({58, 22, 72}, {12, 11, 12}), 38, 85},
        {Organ::Gallbladder, ellipsoid({30, 12, 56}, {10, 9, 13}), 10, 10},
        {Organ::Pancreas, ellipsoid({42, 30, 56}, {20, 8, 9}), 45, 95},
        {Organ::Kidney, ellipsoid({16, 46, 46}, {9, 9, 14}), 32, 170},
        {Organ::Kidney, ellipsoid({64, 46, 46}, {9, 9, 14}), 32, 170},
        {Organ::Colorectum, tube_x(20, 28, 8, 10, 70), 38, 80},
        {Organ::Bladder, ellipsoid({40, 24, 12}, {13, 11, 10}), 8, 8},
        {Organ::Esophagus, column(40, 40, 7, 80, 124), 38, 70},
        {Organ::Lung, ellipsoid({20, 30, 104}, {14, 17, 21}), -850, -850},
        {Organ::Lung, ellipsoid({60, 30, 104}, {14, 17, 21}), -850, -850},
        {Organ::Bone, column(40, 54, 8, 0, 127), 450, 450},
    };
    const std::vector<Cavity> cavities{
        {ellipsoid({58, 22, 72}, {8, 7, 8}), -900},
        {tube_x(20, 28, 4.5, 10, 70), -900},
    };
    const std::vector<Vessel> vessels{
        {AuxStructure::Aorta, column(51, 42, 4, 20, 120), 45, 220},
        {AuxStructure::InferiorVenaCava, column(29, 42, 4, 20, 92), 40, 160},
    };

    Phantom ph{Volume3D(g, -1000.0f), LabelMap(g, 0), LabelMap(g, 0)};
    const std::uint64_t noise_seed = derive_seed(opt.seed, {static_cast<std::uint64_t>(opt.modality)});
    for (std::size_t z = 0; z < full[2]; ++z)
        for (std::size_t y = 0; y < full[1]; ++y)
            for (std::size_t x = 0; x < full[0]; ++x) {
                const Point p{double(x), double(y), double(z)};
                if (!body(p)) continue;
                double hu = enhanced ? 25.0 : 20.0;
                std::uint8_t organ = 0, aux = 0;
                for (const Part& part : parts)
                    if (part.region(p)) {
                        organ = class_id(part.organ);
                        hu = enhanced ? part.enhanced_hu : part.plain_hu;
                    }
                if (organ == class_id(Organ::Stomach) || organ == class_id(Organ::Colorectum))
                    for (const Cavity& c : cavities)
                        if (c.region(p)) hu = c.hu;
                for (const Vessel& v : vessels)
                    if (v.region(p)) {
                        organ = 0;
                        aux = static_cast<std::uint8_t>(v.id);
                        hu = enhanced ? v.enhanced_hu : v.plain_hu;
                    }
                if (organ == class_id(Organ::Bone)) {
                    if (z >= 26 && z <= 32) aux = static_cast<std::uint8_t>(AuxStructure::L5);
                    if (z >= 70 && z <= 76) aux = static_cast<std::uint8_t>(AuxStructure::T8);
                    if (z >= 116 && z <= 122) aux = static_cast<std::uint8_t>(AuxStructure::T1);
                }
                if (organ == class_id(Organ::Lung) && z >= 104)
                    aux = static_cast<std::uint8_t>(x >= 40 ? AuxStructure::LeftUpperLobe : AuxStructure::RightUpperLobe);
                const std::size_t i = g.linear(x, y, z);
                ph.image[i] = static_cast<float>(hu + opt.noise_hu * hashed_normal(noise_seed, i));
                ph.organs[i] = organ;
                ph.structures[i] = aux;
            }

    switch (opt.range) {
        case ScanRange::ThoraxAbdomenPelvis: return ph;
        case ScanRange::Thorax: {
            const Dims lo{0, 0, 64}, size{full[0], full[1], 64};
            return {crop(ph.image, lo, size), crop(ph.organs, lo, size), crop(ph.structures, lo, size)};
        }
        case ScanRange::AbdomenPelvis: {
            const Dims lo{0, 0, 0}, size{full[0], full[1], 84};
            return {crop(ph.image, lo, size), crop(ph.organs, lo, size), crop(ph.structures, lo, size)};
        }
        case ScanRange::Other: break;
    }
    throw InvalidInput("phantom: no layout for scan range Other");
}

}  // namespace pastagen
