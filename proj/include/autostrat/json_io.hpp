#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace autostrat {

/// Pretty-prints JSON with every float at 17 significant digits; non-finite
/// floats become the strings "inf", "-inf" or "nan". Object keys keep
/// nlohmann's sorted order, so equal documents give equal bytes.
std::string dump_json(const nlohmann::json& j, int indent = 2);

nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// 17 significant digits ("%.17g"); "nan"/"inf"/"-inf" for non-finite.
std::string format_double(double v);

}  // namespace autostrat
