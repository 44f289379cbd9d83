#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/gateway.hpp"
#include "cup/judging.hpp"
#include "cup/living.hpp"
#include "cup/plan.hpp"

namespace cup {

struct CyclePaths {
    // As written in the config file (relative paths resolve against base_dir).
    std::string region;
    std::string demographics;
    std::string knowledge;
    std::string questionnaire; // empty: built-in questionnaire
    std::string script;        // scripted backend only
    std::string population;    // empty: generate with profiling
    std::filesystem::path out;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& path) const;
};

struct CycleConfig {
    int iterations = 3;               // K
    std::size_t population_size = 30; // N_r
    std::uint64_t seed = 7;
    std::string backend = "scripted";
    SimConfig sim;
    int discussion_rounds = 2;
    std::string discussion_subject = "previous"; // "previous" (P_{k-1}) or "draft"
    JudgeConfig judge;
    GatewayOptions gateway;
    LiveConfig live;
    bool baseline_day = false;
    CyclePaths paths;

    // Throws InvalidConfig.
    static CycleConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static CycleConfig load(const std::filesystem::path& path);

    // Canonical form written to config.json; the output path is omitted.
    nlohmann::json to_json() const;

    // SHA-256 of the canonical form without `iterations`.
    std::string hash() const;
};

struct IterationRecord {
    int k = 0;
    UrbanPlan plan;
    PlanDiff plan_diff;
    std::string day_log_ref;
    JudgeReport report;
    std::size_t gateway_call_count = 0;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const IterationRecord& record);
IterationRecord iteration_record_from_json(const nlohmann::json& j);

// Profiling once, then K rounds of draft -> discuss -> finalize -> live ->
// judge. Writes the output directory as it goes; an aborted iteration leaves
// records 1..k-1 intact. Throws OutputNotEmpty if the directory already holds a run.
std::vector<IterationRecord> run_cycle(const CycleConfig& config);

// Continues a run from its last completed iteration. Throws CorruptRecord(k),
// ConfigMismatch.
std::vector<IterationRecord> resume(const std::filesystem::path& out_dir, const CycleConfig& config);

} // namespace cup
