#pragma once

// Template-scan selection: scan range, contrast phase, healthy-organ filter
// and the per-lesion modality table.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pastagen/anatomy.hpp"
#include "pastagen/volume.hpp"

namespace pastagen {

enum class ScanRange { Thorax, AbdomenPelvis, ThoraxAbdomenPelvis, Other };

std::string_view scan_range_name(ScanRange r) noexcept;
std::optional<ScanRange> scan_range_from_name(std::string_view name) noexcept;

/// Presence of the structures that decide the scan range.
struct RangeLandmarks {
    bool t1 = false;
    bool t8 = false;
    bool l5 = false;
    bool left_upper_lobe = false;
    bool right_upper_lobe = false;
    bool bladder = false;
};

/// Thorax-abdomen-pelvis wins over thorax, which wins over abdomen-pelvis.
ScanRange classify_scan_range(const RangeLandmarks& present) noexcept;

inline constexpr double kContrastThresholdHu = 80.0;
/// Plain only when both vessel means are below 80 HU.
Modality classify_contrast(double aorta_mean_hu, double ivc_mean_hu) noexcept;

inline constexpr double kMinHealthyOrganMm3 = 4000.0;

/// Lower-case, whitespace runs collapsed to one space, trimmed.
std::string normalize_text(std::string_view text);

/// Volume strictly above 4000 mm^3 and no keyword in the normalised impression.
bool is_healthy_organ(double organ_volume_mm3, std::string_view impression, std::span<const std::string> keywords);

/// Per-organ keyword vocabularies for the report filter.
class KeywordConfig {
public:
    static KeywordConfig defaults();
    /// JSON object mapping organ key to an array of keywords; organs not
    /// listed keep their defaults.
    static KeywordConfig from_json_text(std::string_view text);
    static KeywordConfig load(const std::filesystem::path& path);

    const std::vector<std::string>& keywords(Organ organ) const;
    std::string to_json_text() const;

private:
    std::map<Organ, std::vector<std::string>> keywords_;
};

/// Which organs a scan range is taken to contain.
bool range_covers(ScanRange range, Organ organ) noexcept;

/// Auxiliary structure ids expected in a scan's optional structure label map.
enum class AuxStructure : std::uint8_t {
    Aorta = 1,
    InferiorVenaCava = 2,
    T1 = 3,
    T8 = 4,
    L5 = 5,
    LeftUpperLobe = 6,
    RightUpperLobe = 7,
};

struct ScanRecord {
    std::string id;
    std::string image_path;
    std::string labels_path;
    std::string impression;

    RangeLandmarks landmarks;
    std::optional<double> aorta_mean_hu;
    std::optional<double> ivc_mean_hu;
    std::array<double, kOrganCount> organ_volume_mm3{};

    // Derived by curate_record.
    ScanRange scan_range = ScanRange::Other;
    std::optional<Modality> modality;
    std::array<bool, kOrganCount> healthy{};

    double volume_of(Organ o) const noexcept { return organ_volume_mm3[class_id(o) - 1]; }
    bool healthy_organ(Organ o) const noexcept { return healthy[class_id(o) - 1]; }
};

/// Measurements taken from a canonical scan: organ volumes from `organs`
/// (classes 1..10), landmark presence and vessel HU means from `structures`
/// (AuxStructure ids). The bladder landmark also counts when organ class 9
/// is present.
struct ScanMeasurements {
    RangeLandmarks landmarks;
    std::optional<double> aorta_mean_hu;
    std::optional<double> ivc_mean_hu;
    std::array<double, kOrganCount> organ_volume_mm3{};
};
ScanMeasurements measure_scan(const Volume3D& image, const LabelMap& organs, const LabelMap* structures);

/// Fill scan range, modality (when at least one vessel mean is known) and healthy flags.
void curate_record(ScanRecord& record, const KeywordConfig& keywords);

/// Records usable for a lesion type: modality per the modality table, scan
/// range covering the target organ, and a healthy target organ.
/// Throws CurationError naming the lesion and modality when nothing qualifies.
std::vector<ScanRecord> select_templates(std::span<const ScanRecord> records, LesionType lesion);

/// Same predicate as select_templates, for one record.
bool template_accepts(const ScanRecord& record, LesionType lesion) noexcept;

}  // namespace pastagen
