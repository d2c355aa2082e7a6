#include "pastagen/anatomy.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace pastagen {

namespace {

struct OrganInfo {
    std::string_view location;
    std::string_view key;
};

constexpr std::array<OrganInfo, kOrganCount> kOrganInfo{{
    {"Lung", "lung"},
    {"Liver", "liver"},
    {"Gallbladder", "gallbladder"},
    {"Pancreas", "pancreas"},
    {"Esophagus", "esophagus"},
    {"Stomach", "stomach"},
    {"Colorectal", "colorectum"},
    {"Kidney", "kidney"},
    {"Bladder", "bladder"},
    {"Bone", "bone"},
}};

struct LesionInfo {
    std::string_view name;
    std::string_view key;
    Organ organ;
    bool benign;
    bool plain;
    bool enhanced;
};

constexpr std::array<LesionInfo, kLesionTypeCount> kLesionInfo{{
    {"Lung tumor", "lung_tumor", Organ::Lung, false, true, false},
    {"Liver tumor", "liver_tumor", Organ::Liver, false, false, true},
    {"Gallbladder cancer", "gallbladder_cancer", Organ::Gallbladder, false, false, true},
    {"Pancreas tumor", "pancreas_tumor", Organ::Pancreas, false, false, true},
    {"Esophageal cancer", "esophageal_cancer", Organ::Esophagus, false, false, true},
    {"Gastric cancer", "gastric_cancer", Organ::Stomach, false, false, true},
    {"Colorectal cancer", "colorectal_cancer", Organ::Colorectum, false, false, true},
    {"Kidney tumor", "kidney_tumor", Organ::Kidney, false, false, true},
    {"Bladder cancer", "bladder_cancer", Organ::Bladder, false, false, true},
    {"Bone metastasis", "bone_metastasis", Organ::Bone, false, false, true},
    {"Liver cyst", "liver_cyst", Organ::Liver, true, true, true},
    {"Gallstone", "gallstone", Organ::Gallbladder, true, true, true},
    {"Pancreas cyst", "pancreas_cyst", Organ::Pancreas, true, false, true},
    {"Kidney cyst", "kidney_cyst", Organ::Kidney, true, false, true},
    {"Kidney stone", "kidney_stone", Organ::Kidney, true, true, false},
}};

const OrganInfo& info(Organ o) { return kOrganInfo[static_cast<std::size_t>(o) - 1]; }
const LesionInfo& info(LesionType t) { return kLesionInfo[static_cast<std::size_t>(t) - 11]; }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view location_name(Organ o) noexcept { return info(o).location; }
std::string_view organ_key(Organ o) noexcept { return info(o).key; }

std::optional<Organ> organ_from_location(std::string_view name) noexcept {
    for (Organ o : kAllOrgans)
        if (info(o).location == name) return o;
    return std::nullopt;
}

std::optional<Organ> organ_from_key(std::string_view key) noexcept {
    const std::string k = lower(key);
    for (Organ o : kAllOrgans)
        if (info(o).key == k || lower(info(o).location) == k) return o;
    return std::nullopt;
}

std::string_view lesion_name(LesionType t) noexcept { return info(t).name; }
std::string_view lesion_key(LesionType t) noexcept { return info(t).key; }

std::optional<LesionType> lesion_from_name(std::string_view name) noexcept {
    const std::string n = lower(name);
    for (LesionType t : kAllLesionTypes)
        if (lower(info(t).name) == n || info(t).key == n) return t;
    return std::nullopt;
}

Organ target_organ(LesionType t) noexcept { return info(t).organ; }
bool is_benign(LesionType t) noexcept { return info(t).benign; }

bool accepts_modality(LesionType t, Modality m) noexcept {
    return m == Modality::Plain ? info(t).plain : info(t).enhanced;
}

std::string_view modality_name(Modality m) noexcept { return m == Modality::Plain ? "Plain" : "Enhanced"; }

std::optional<Modality> modality_from_name(std::string_view name) noexcept {
    const std::string n = lower(name);
    if (n == "plain") return Modality::Plain;
    if (n == "enhanced") return Modality::Enhanced;
    return std::nullopt;
}

}  // namespace pastagen
