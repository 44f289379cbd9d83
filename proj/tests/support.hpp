#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/gateway.hpp"
#include "cup/hash.hpp"
#include "cup/plan.hpp"
#include "cup/profiling.hpp"

namespace cup::test {

inline std::filesystem::path data_dir() { return CUP_DATA_DIR; }

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("cup_test_" + std::to_string(rd()) + "_" + std::to_string(++counter));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::shared_ptr<ScriptedBackend> scripted_backend(const nlohmann::json& script) {
    return std::make_shared<ScriptedBackend>(Script::from_json(script));
}

inline std::unique_ptr<Gateway> scripted_gateway(const nlohmann::json& script, GatewayOptions options = {}) {
    return std::make_unique<Gateway>(scripted_backend(script), options);
}

// cols x rows grid, 300 m spacing; the first `homes` areas are fixed Residential.
inline Region grid_region(int cols, int rows, int homes, double spacing = 300.0) {
    std::vector<Area> areas;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int i = r * cols + c + 1;
            Area a;
            a.id = "a_" + std::to_string(i);
            a.centroid = {spacing / 2 + spacing * c, spacing / 2 + spacing * r};
            a.size_m2 = 1000.0 * i;
            a.land_use = i <= homes ? LandUse::Residential : LandUse::Vacant;
            a.fixed = i <= homes;
            areas.push_back(a);
        }
    }
    return Region("grid", {0, 0, spacing * cols, spacing * rows}, std::move(areas));
}

// Random region with integer coordinates and sizes; at least one fixed Residential area.
inline Region random_region(std::mt19937_64& gen, int max_areas = 100) {
    const int n = 2 + static_cast<int>(gen() % static_cast<unsigned>(max_areas - 1));
    std::vector<Area> areas;
    for (int i = 1; i <= n; ++i) {
        Area a;
        a.id = "a_" + std::to_string(i);
        a.centroid = {static_cast<double>(gen() % 2001), static_cast<double>(gen() % 2001)};
        a.size_m2 = static_cast<double>(500 + gen() % 100000);
        const bool home = i == 1 || gen() % 3 == 0;
        a.land_use = home ? LandUse::Residential : LandUse::Vacant;
        a.fixed = home;
        areas.push_back(a);
    }
    return Region("random", {0, 0, 2000, 2000}, std::move(areas));
}

// Assigns every non-fixed area a uniformly drawn use (Residential included).
inline UrbanPlan random_plan(const Region& region, std::mt19937_64& gen) {
    UrbanPlan plan;
    for (const auto& a : region.areas()) {
        plan.assignment[a.id] = a.fixed ? a.land_use : kAllLandUses[gen() % kAllLandUses.size()];
    }
    return plan;
}

inline Region fixture_region() { return load_region(data_dir() / "region_12.json"); }

inline ResidentProfile make_profile(const std::string& id, const std::string& home) {
    ResidentProfile p;
    p.id = id;
    p.age = 40;
    p.gender = "female";
    p.home_area = home;
    p.personality = "calm";
    p.occupation = "teacher " + id;
    p.hobbies = {"reading"};
    p.lifestyle = "quiet";
    p.pursuits = "a good life";
    return p;
}

// Digest over sorted relative paths and file contents.
inline std::string tree_hash(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files.push_back(std::filesystem::relative(e.path(), root));
    }
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) {
        std::ifstream in(root / f, std::ios::binary);
        std::ostringstream content;
        content << in.rdbuf();
        acc += f.generic_string() + "\n" + sha256_hex(content.str()) + "\n";
    }
    return sha256_hex(acc);
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace cup::test
