#pragma once

// Target organs, lesion types and their fixed class ids in synthesized label maps.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace pastagen {

enum class Organ : std::uint8_t {
    Lung = 1,
    Liver,
    Gallbladder,
    Pancreas,
    Esophagus,
    Stomach,
    Colorectum,
    Kidney,
    Bladder,
    Bone,
};
inline constexpr std::size_t kOrganCount = 10;
inline constexpr std::array<Organ, kOrganCount> kAllOrgans{
    Organ::Lung,     Organ::Liver,     Organ::Gallbladder, Organ::Pancreas, Organ::Esophagus,
    Organ::Stomach,  Organ::Colorectum, Organ::Kidney,    Organ::Bladder,  Organ::Bone,
};

enum class LesionType : std::uint8_t {
    LungTumor = 11,
    LiverTumor,
    GallbladderCancer,
    PancreasTumor,
    EsophagealCancer,
    GastricCancer,
    ColorectalCancer,
    KidneyTumor,
    BladderCancer,
    BoneMetastasis,
    LiverCyst,
    Gallstone,
    PancreasCyst,
    KidneyCyst,
    KidneyStone,
};
inline constexpr std::size_t kLesionTypeCount = 15;
inline constexpr std::array<LesionType, kLesionTypeCount> kAllLesionTypes{
    LesionType::LungTumor,     LesionType::LiverTumor,     LesionType::GallbladderCancer, LesionType::PancreasTumor,
    LesionType::EsophagealCancer, LesionType::GastricCancer, LesionType::ColorectalCancer, LesionType::KidneyTumor,
    LesionType::BladderCancer, LesionType::BoneMetastasis, LesionType::LiverCyst,         LesionType::Gallstone,
    LesionType::PancreasCyst,  LesionType::KidneyCyst,     LesionType::KidneyStone,
};

inline constexpr std::uint8_t kMaxClassId = 25;

enum class Modality : std::uint8_t { Plain, Enhanced };

/// Label value of an organ (1..10) or lesion type (11..25).
constexpr std::uint8_t class_id(Organ o) noexcept { return static_cast<std::uint8_t>(o); }
constexpr std::uint8_t class_id(LesionType t) noexcept { return static_cast<std::uint8_t>(t); }

/// Organ names as they appear in the "Location" attribute of a report.
std::string_view location_name(Organ o) noexcept;
std::optional<Organ> organ_from_location(std::string_view name) noexcept;
/// Short snake-case key used in config files and manifests ("liver", "colorectum", ...).
std::string_view organ_key(Organ o) noexcept;
std::optional<Organ> organ_from_key(std::string_view key) noexcept;

std::string_view lesion_name(LesionType t) noexcept;
/// Accepts the display name ("Gastric cancer") or the snake-case key ("gastric_cancer"), case-insensitively.
std::optional<LesionType> lesion_from_name(std::string_view name) noexcept;
std::string_view lesion_key(LesionType t) noexcept;

Organ target_organ(LesionType t) noexcept;
/// Cysts and stones: never invasive.
bool is_benign(LesionType t) noexcept;
/// Template modalities a lesion type may be simulated on.
bool accepts_modality(LesionType t, Modality m) noexcept;

std::string_view modality_name(Modality m) noexcept;
std::optional<Modality> modality_from_name(std::string_view name) noexcept;

}  // namespace pastagen
