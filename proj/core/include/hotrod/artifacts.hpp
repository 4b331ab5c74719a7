#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

namespace hotrod {

inline const char* version() { return HOTROD_VERSION; }

// Canonical JSON serialization for artifacts: UTF-8, keys sorted, doubles
// with 17 significant digits, two-space indentation. nlohmann::json already
// sorts object keys; the custom dump pins the float format.
std::string dump_json(const nlohmann::json& j, int indent = 2);

// FNV-1a over the canonical serialization; used for config and content
// hashes in artifact headers and stage skipping.
std::string fnv1a_hex(const std::string& bytes);
std::string json_hash(const nlohmann::json& j);
std::string file_hash(const std::filesystem::path& path);

// Writes to "<path>.partial" and renames into place on success, so aborted
// stages never leave a well-named artifact behind.
void write_artifact(const std::filesystem::path& path, const std::string& contents);

void write_json_artifact(const std::filesystem::path& path, const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace hotrod
