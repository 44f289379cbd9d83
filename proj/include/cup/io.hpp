#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace cup::io {

// Whole-file helpers. Failures raise cup::Error("io", "FileNotFound" | "FileUnreadable" | "FileUnwritable" | "InvalidJson").
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

// Pretty-printed, newline-terminated, sorted keys.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);
std::string dump_pretty(const nlohmann::json& value);

// Fixed two-decimal rendering ("65.03").
std::string fixed2(double value);

// Round half away from zero to two decimals.
double round2(double value);

} // namespace cup::io
