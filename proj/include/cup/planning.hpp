#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/memory.hpp"
#include "cup/plan.hpp"
#include "cup/profiling.hpp"
#include "cup/rng.hpp"

namespace cup {

class Gateway;

struct PlannerKnowledge {
    std::string text;

    // Throws EmptyKnowledge.
    static PlannerKnowledge load(const std::filesystem::path& path);
};

struct Suggestion {
    enum class Level { Area, Category };
    Level level = Level::Area;
    std::string target;   // area id, or category name
    std::string proposed; // land-use name or free-text change
    std::string rationale;

    bool operator==(const Suggestion&) const = default;
};

struct SuggestionList {
    std::vector<Suggestion> items;

    bool empty() const { return items.empty(); }
    bool operator==(const SuggestionList&) const = default;
};

nlohmann::json to_json(const SuggestionList& list);
SuggestionList suggestions_from_json(const nlohmann::json& j);

struct Utterance {
    std::string speaker;
    std::string text;
};

struct DiscussionTranscript {
    std::vector<Utterance> rounds;
    std::string summary; // D_k
    std::vector<std::string> skipped; // speakers whose utterance failed
};

nlohmann::json to_json(const DiscussionTranscript& transcript);
DiscussionTranscript transcript_from_json(const nlohmann::json& j);

// Plan plus the planner changes that were dropped (unknown area, fixed area, unknown type).
struct PlanRevision {
    UrbanPlan plan;
    std::vector<std::string> warnings;
};

// "plan.draft": revise prev_plan with knowledge and last iteration's suggestions.
// The result carries iteration prev_plan.iteration + 1.
PlanRevision draft_plan(const PlannerKnowledge& knowledge, const Region& region, const UrbanPlan& prev_plan,
                        const SuggestionList& suggestions, Gateway& gateway);

struct DiscussionOptions {
    int rounds = 2;
    int iteration = 1;          // k; memories enter the prompt when k >= 2
    std::size_t memories = 3;
    int now = 0;                // tick used for memory retrieval
};

// Round-robin "plan.discuss" utterances followed by one "plan.summarize" call.
// `memories` may be empty (no memory section) or parallel to `population`.
// Throws DiscussionAborted when more than half of the utterances fail.
DiscussionTranscript discuss(const std::vector<ResidentProfile>& population, std::vector<MemoryPool>& memories,
                             const Region& region, const UrbanPlan& subject, Gateway& gateway,
                             const DiscussionOptions& options);

// "plan.final": polish the draft with D_k. Result iteration equals the draft's.
PlanRevision finalize_plan(const PlannerKnowledge& knowledge, const Region& region, const UrbanPlan& draft,
                           const SuggestionList& suggestions, const std::string& discussion_summary,
                           Gateway& gateway);

// Every non-fixed area drawn uniformly from the eight service land-uses.
UrbanPlan random_baseline_plan(const Region& region, Rng& rng);

} // namespace cup
