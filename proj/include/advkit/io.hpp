#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advkit {

/// Whole-file read. Missing or unreadable files raise DataError naming the path.
std::string read_file(const std::filesystem::path& path);

/// Writes to a temporary sibling, then renames over `path`. Parent
/// directories are created. Failures raise IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Little-endian float64 encoding used by every binary blob.
std::string encode_f64_le(std::span<const double> values);
std::vector<double> decode_f64_le(std::string_view bytes);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace advkit
