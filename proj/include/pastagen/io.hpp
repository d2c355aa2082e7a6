#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pastagen {

using Bytes = std::vector<std::uint8_t>;

/// Whole-file read; gzip streams are inflated transparently.
Bytes read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`, so readers never
/// see a partial file. Output is gzip-compressed when `path` ends in ".gz".
/// The gzip header carries no timestamp, so identical bytes in give identical
/// bytes out.
void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

Bytes gzip_compress(const Bytes& raw);
Bytes gzip_decompress(const Bytes& compressed);

/// Lower-case hex FNV-1a 64 of a byte string.
std::string hash_hex(std::string_view bytes);

}  // namespace pastagen
