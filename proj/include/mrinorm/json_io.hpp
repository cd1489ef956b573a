#pragma once

#include <string>

#include <json.hpp>

namespace mrinorm {

/// Serialize with floating-point numbers at 17 significant digits, enough to
/// reproduce any double bit-exactly on re-parse.
std::string dump_json_17g(const nlohmann::json& j, int indent = 2);

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

} // namespace mrinorm
