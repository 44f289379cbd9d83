#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/memory.hpp"
#include "cup/plan.hpp"
#include "cup/profiling.hpp"

namespace cup {

class Gateway;

struct SimConfig {
    int ticks = 1440;            // T, one tick per simulated minute
    int decision_horizon = 60;   // ticks between forced re-decisions while dwelling
    int perceive_feed_k = 5;     // posts shown per perception
    double speed = 80.0;         // meters per tick
    std::size_t decide_memories = 5;
    int reflect_threshold = 30;

    static SimConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Throws InvalidSimConfig unless every field is positive.
void validate_sim_config(const SimConfig& config);

struct Comment {
    std::string author;
    int tick = 0;
    std::string text;
};

struct Post {
    std::string id;
    std::string author;
    int tick = 0;
    std::string text;
    std::vector<Comment> comments;
};

struct SocialFeed {
    std::vector<Post> posts;

    const Post* find(const std::string& id) const;
};

struct Environment {
    int tick = 0;
    std::map<std::string, std::string> physical; // resident id -> area id (E_R)
    SocialFeed feed;                              // E_S
};

struct SocialAction {
    enum class Kind { Post, Comment };
    Kind kind = Kind::Post;
    std::string post_id; // comments only
    std::string text;
};

struct ActionPlan {
    std::string intent;
    std::string target;
    int depart = 0;
    int dwell = 1;
    std::optional<SocialAction> social;
    bool degraded = false;
};

struct NeighborView {
    std::string area;
    LandUse land_use;
    double distance = 0.0;
};

struct Observation {
    int tick = 0; // tick of the snapshot observed
    std::string area;
    LandUse land_use = LandUse::Vacant;
    std::vector<NeighborView> neighbors;
    std::vector<std::string> co_located;
    std::vector<Post> posts;

    std::string render() const;
};

struct MobilityRecord {
    int tick = 0;
    std::string resident;
    std::string area;
};

// Per-resident mutable state during a day. The memory pool lives outside so
// it can persist across days.
struct ResidentState {
    enum class Mode { Dwelling, Waiting, Traveling };

    const ResidentProfile* profile = nullptr;
    MemoryPool* memory = nullptr;

    int clock_offset = 0; // memory timestamps are clock_offset + tick

    Point position;
    std::string area;
    Mode mode = Mode::Dwelling;
    ActionPlan plan;
    int dwell_until = 0;
    int last_decision = 0;
    bool social_emitted = true;
    std::set<std::string> seen_posts;
    std::string last_perceived_area;
    std::set<std::string> last_co_located;
};

ResidentState make_resident_state(const ResidentProfile& profile, MemoryPool& memory, const Region& region,
                                  int clock_offset = 0);

// Builds the observation and logs notable items to memory as events.
Observation perceive(ResidentState& resident, const Environment& env, const UrbanPlan& plan, const Region& region,
                     const SimConfig& config);

struct Decision {
    ActionPlan plan;
    std::optional<std::string> warning; // set for degraded decisions
};

// One "live.decide" call; invalid or failed replies fall back to staying in
// place for the decision horizon. Logs the decision as a behavior memory.
Decision decide(ResidentState& resident, const Observation& observation, const UrbanPlan& plan,
                const Region& region, Gateway& gateway, int tick, const SimConfig& config);

struct StepResult {
    std::string location;                // L_i(t)
    std::optional<SocialAction> social;  // N_i(t)
    std::size_t memories_added = 0;
    std::vector<std::string> warnings;
    std::optional<Observation> observation; // present at decision points
    std::optional<ActionPlan> decision;
};

// Advances one resident to `tick`, reading only `env_prev` (tick - 1).
StepResult step_agent(ResidentState& resident, int tick, const Environment& env_prev, const UrbanPlan& plan,
                      const Region& region, Gateway& gateway, const SimConfig& config);

struct EmittedSocial {
    std::size_t resident_index = 0;
    std::string resident;
    SocialAction action;
};

// Next environment: tick + 1, locations replaced, socials appended in
// resident-index order with fresh post ids. Dropped comments are reported in `warnings`.
Environment sync(const Environment& env_prev, const std::map<std::string, std::string>& locations,
                 std::vector<EmittedSocial> socials, const std::vector<std::string>& population_ids,
                 std::vector<std::string>* warnings = nullptr);

struct DayLog {
    std::vector<MobilityRecord> mobility; // N_r x T, tick-major
    SocialFeed feed;
    std::vector<std::string> memory_dumps; // JSONL per resident, population order
    std::vector<std::string> warnings;
    std::size_t gateway_calls = 0;
    // In-memory only: position of each resident at each tick (tick-major).
    std::vector<Point> positions;
};

struct DayObserver {
    std::function<void(int tick, const std::string& resident, const Observation&)> on_observation;
    std::function<void(int tick, const std::string& resident, const ActionPlan&)> on_decision;
};

DayLog run_day(const UrbanPlan& plan, const std::vector<ResidentProfile>& population,
               std::vector<MemoryPool>& memories, const Region& region, Gateway& gateway, const SimConfig& config,
               const DayObserver& observer = {}, int clock_offset = 0);

// mobility.jsonl, feed.json, memories/R_i.jsonl
void write_day_log(const DayLog& log, const std::vector<ResidentProfile>& population,
                   const std::filesystem::path& dir);

nlohmann::json feed_to_json(const SocialFeed& feed);
SocialFeed feed_from_json(const nlohmann::json& j);

} // namespace cup
