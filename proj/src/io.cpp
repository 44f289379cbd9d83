#include "cup/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cup/error.hpp"

namespace cup::io {

std::string read_text(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error("io", "FileNotFound", path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("io", "FileUnreadable", path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("io", "FileUnwritable", path.string());
    }
    out << text;
}

nlohmann::json read_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("io", "InvalidJson", path.string() + ": " + e.what());
    }
}

std::string dump_pretty(const nlohmann::json& value) {
    return value.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
    write_text(path, dump_pretty(value));
}

double round2(double value) {
    return std::round(value * 100.0) / 100.0;
}

std::string fixed2(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.2f", round2(value));
    return buffer;
}

} // namespace cup::io
