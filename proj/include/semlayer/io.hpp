#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace semlayer {

using json = nlohmann::json;

/// Canonical text for a JSON document: sorted keys, two-space indent, trailing newline.
std::string canonical_json(const json& doc);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, so readers never observe a
/// partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Reads `path` and checks its "version" field.
json load_versioned_json(const std::filesystem::path& path, std::string_view version);

/// Round half up to two decimals and print as "NN.NN%". Exact integer arithmetic.
std::string format_percent(std::uint64_t numerator, std::uint64_t denominator);

}  // namespace semlayer
