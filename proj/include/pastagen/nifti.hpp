#pragma once

#include <filesystem>
#include <vector>

#include "pastagen/io.hpp"
#include "pastagen/volume.hpp"

namespace pastagen {

/// Storage types this reader/writer handles (NIfTI-1 datatype codes).
enum class NiftiType : short {
    UInt8 = 2,
    Int16 = 4,
    Int32 = 8,
    Float32 = 16,
    Float64 = 64,
    Int8 = 256,
    UInt16 = 512,
    UInt32 = 768,
};

struct NiftiImage {
    Geometry geometry;
    NiftiType type = NiftiType::Float32;
    /// Scaled voxel values (scl_slope / scl_inter applied), x-fastest.
    std::vector<double> values;
};

/// Parse a single-file NIfTI-1 image (.nii or .nii.gz; either byte order).
/// Orientation comes from the sform when set, else the qform, else the
/// index axes are taken as RAS.
NiftiImage decode_nifti(const Bytes& bytes);
NiftiImage read_nifti(const std::filesystem::path& path);

/// Little-endian NIfTI-1 with matching qform and sform. Values are rounded
/// and saturated for integer types.
Bytes encode_nifti(const Geometry& geometry, const std::vector<double>& values, NiftiType type);
void write_nifti(const std::filesystem::path& path, const Geometry& geometry, const std::vector<double>& values,
                 NiftiType type);

Volume3D read_volume(const std::filesystem::path& path);
/// Rejects non-integer or out-of-range (0..255) values.
LabelMap read_labels(const std::filesystem::path& path);

/// CT images are stored as signed 16-bit HU by default.
void write_volume(const std::filesystem::path& path, const Volume3D& vol, NiftiType type = NiftiType::Int16);
void write_labels(const std::filesystem::path& path, const LabelMap& labels);

}  // namespace pastagen
