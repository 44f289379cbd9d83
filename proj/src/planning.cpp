#include "cup/planning.hpp"

#include <sstream>

#include "cup/error.hpp"
#include "cup/gateway.hpp"
#include "cup/io.hpp"

namespace cup {

namespace {

constexpr const char* kModule = "planning";

const char* kPlannerSystem =
    "You are an expert urban planner revising a land-use plan for a residential community. "
    "Residential areas are fixed; every other area may be assigned one of: Commercial, Office, School, "
    "Hospital, Clinic, Park, OpenSpace, Recreation, Vacant.";

const char* kResidentSystem =
    "You are a resident taking part in a community discussion about the neighborhood land-use plan. "
    "Speak in character, briefly, from your own interests.";

const Schema& changes_schema() {
    static const Schema schema = Schema::object({
        {"changes", Schema::array(Schema::object({{"area", Schema::string()}, {"land_use", Schema::string()}}))},
    });
    return schema;
}

const char* kChangesFormat =
    "Reply as JSON listing only the areas to change: {\"changes\": [{\"area\": \"<area id>\", \"land_use\": "
    "\"<type>\"}]}. Use an empty list to keep the plan unchanged.";

PlanRevision apply_planner_reply(const Region& region, const UrbanPlan& base, const nlohmann::json& reply,
                                 const char* stage) {
    PlanRevision revision{base, {}};
    std::vector<Assignment> accepted;
    for (const auto& change : reply.at("changes")) {
        const auto area = change.at("area").get<std::string>();
        const auto use_text = change.at("land_use").get<std::string>();
        const auto index = region.index_of(area);
        if (!index) {
            revision.warnings.push_back(std::string(stage) + ": dropped change to unknown area " + area);
            continue;
        }
        const auto use = parse_land_use(use_text);
        if (!use) {
            revision.warnings.push_back(std::string(stage) + ": dropped unknown land-use '" + use_text + "' for " +
                                        area);
            continue;
        }
        const Area& a = region.areas()[*index];
        if (a.fixed) {
            if (*use != a.land_use) {
                revision.warnings.push_back(std::string(stage) + ": dropped change to fixed area " + area);
            }
            continue;
        }
        if (*use == LandUse::Residential) {
            revision.warnings.push_back(std::string(stage) + ": dropped Residential assignment for " + area);
            continue;
        }
        accepted.emplace_back(area, *use);
    }
    revision.plan = apply_assignments(region, base, accepted);
    validate_plan(region, revision.plan);
    return revision;
}

std::string suggestions_block(const SuggestionList& suggestions) {
    if (suggestions.empty()) {
        return "Suggestions from the last evaluation: none\n";
    }
    return "Suggestions from the last evaluation: " + to_json(suggestions).dump() + "\n";
}

std::string transcript_block(const std::vector<Utterance>& rounds) {
    if (rounds.empty()) {
        return "Discussion so far: (you speak first)\n";
    }
    std::string out = "Discussion so far:\n";
    for (const auto& u : rounds) {
        out += "- " + u.speaker + ": " + u.text + "\n";
    }
    return out;
}

std::string trimmed(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

} // namespace

PlannerKnowledge PlannerKnowledge::load(const std::filesystem::path& path) {
    PlannerKnowledge knowledge{io::read_text(path)};
    if (trimmed(knowledge.text).empty()) {
        throw Error(kModule, "EmptyKnowledge", path.string());
    }
    return knowledge;
}

nlohmann::json to_json(const SuggestionList& list) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& s : list.items) {
        items.push_back({{"level", s.level == Suggestion::Level::Area ? "area" : "category"},
                         {"target", s.target},
                         {"proposed", s.proposed},
                         {"rationale", s.rationale}});
    }
    return items;
}

SuggestionList suggestions_from_json(const nlohmann::json& j) {
    SuggestionList list;
    try {
        for (const auto& item : j) {
            Suggestion s;
            s.level = item.value("level", std::string("area")) == "category" ? Suggestion::Level::Category
                                                                              : Suggestion::Level::Area;
            s.target = item.at("target").get<std::string>();
            s.proposed = item.at("proposed").get<std::string>();
            s.rationale = item.value("rationale", std::string{});
            list.items.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "MalformedSuggestions", e.what());
    }
    return list;
}

nlohmann::json to_json(const DiscussionTranscript& t) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& u : t.rounds) {
        rounds.push_back({{"speaker", u.speaker}, {"text", u.text}});
    }
    return {{"rounds", rounds}, {"summary", t.summary}, {"skipped", t.skipped}};
}

DiscussionTranscript transcript_from_json(const nlohmann::json& j) {
    DiscussionTranscript t;
    for (const auto& u : j.at("rounds")) {
        t.rounds.push_back({u.at("speaker").get<std::string>(), u.at("text").get<std::string>()});
    }
    t.summary = j.at("summary").get<std::string>();
    t.skipped = j.value("skipped", std::vector<std::string>{});
    return t;
}

PlanRevision draft_plan(const PlannerKnowledge& knowledge, const Region& region, const UrbanPlan& prev_plan,
                        const SuggestionList& suggestions, Gateway& gateway) {
    validate_plan(region, prev_plan);
    std::ostringstream prompt;
    prompt << "Planning knowledge:\n"
           << knowledge.text << "\n\n"
           << "Region: " << region.name() << "\n"
           << "Previous plan (iteration " << prev_plan.iteration << "):\n"
           << describe_plan(region, prev_plan) << "\n"
           << suggestions_block(suggestions) << "\n"
           << "Draft the next plan by modifying the previous plan. " << kChangesFormat;
    const auto reply =
        gateway.complete_structured(make_request("plan.draft", kPlannerSystem, prompt.str()), changes_schema());
    PlanRevision revision = apply_planner_reply(region, prev_plan, reply, "plan.draft");
    revision.plan.iteration = prev_plan.iteration + 1;
    return revision;
}

DiscussionTranscript discuss(const std::vector<ResidentProfile>& population, std::vector<MemoryPool>& memories,
                             const Region& region, const UrbanPlan& subject, Gateway& gateway,
                             const DiscussionOptions& options) {
    if (options.rounds < 1) {
        throw Error(kModule, "InvalidRounds", std::to_string(options.rounds));
    }
    if (population.empty()) {
        throw Error(kModule, "EmptyPopulation");
    }
    const bool with_memories = options.iteration >= 2 && !memories.empty();
    if (with_memories && memories.size() != population.size()) {
        throw Error(kModule, "MemoryPoolMismatch", std::to_string(memories.size()));
    }
    const std::string plan_text = describe_plan(region, subject);

    DiscussionTranscript transcript;
    std::size_t attempts = 0;
    for (int round = 1; round <= options.rounds; ++round) {
        for (std::size_t i = 0; i < population.size(); ++i) {
            const auto& profile = population[i];
            std::ostringstream prompt;
            prompt << describe_profile(profile) << "\n"
                   << "Plan under discussion (iteration " << subject.iteration << "):\n"
                   << plan_text << "\n";
            if (with_memories) {
                const auto recalled = memories[i].retrieve(
                    "living experience in the neighborhood " + profile.pursuits + " " + profile.lifestyle,
                    options.memories, options.now);
                prompt << "Your living experience so far:\n" << render_memories(recalled) << "\n";
            }
            prompt << transcript_block(transcript.rounds) << "\n"
                   << "Round " << round << ". Share your view on the plan in two or three sentences.";
            ++attempts;
            try {
                const auto reply = gateway.complete(make_request("plan.discuss", kResidentSystem, prompt.str()));
                const std::string text = trimmed(reply.text);
                if (text.empty()) {
                    transcript.skipped.push_back(profile.id);
                    continue;
                }
                transcript.rounds.push_back({profile.id, text});
            } catch (const Error&) {
                transcript.skipped.push_back(profile.id);
            }
        }
    }
    if (transcript.skipped.size() * 2 > attempts) {
        throw Error(kModule, "DiscussionAborted",
                    std::to_string(transcript.skipped.size()) + " of " + std::to_string(attempts) + " failed");
    }

    std::ostringstream prompt;
    prompt << "Plan under discussion (iteration " << subject.iteration << "):\n"
           << plan_text << "\n"
           << transcript_block(transcript.rounds) << "\n"
           << "Summarize the residents' main concerns and requests in a short paragraph for the planner.";
    const auto summary = gateway.complete(make_request(
        "plan.summarize", "You are a neutral moderator summarizing a community planning discussion.", prompt.str()));
    transcript.summary = trimmed(summary.text);
    if (transcript.summary.empty() && !transcript.rounds.empty()) {
        throw Error(kModule, "EmptyField", "discussion summary");
    }
    return transcript;
}

PlanRevision finalize_plan(const PlannerKnowledge& knowledge, const Region& region, const UrbanPlan& draft,
                           const SuggestionList& suggestions, const std::string& discussion_summary,
                           Gateway& gateway) {
    validate_plan(region, draft);
    std::ostringstream prompt;
    prompt << "Planning knowledge:\n"
           << knowledge.text << "\n\n"
           << "Region: " << region.name() << "\n"
           << "Draft plan (iteration " << draft.iteration << "):\n"
           << describe_plan(region, draft) << "\n"
           << suggestions_block(suggestions) << "\n"
           << "Summary of the residents' discussion:\n"
           << discussion_summary << "\n\n"
           << "Polish the draft into the final plan. " << kChangesFormat;
    const auto reply =
        gateway.complete_structured(make_request("plan.final", kPlannerSystem, prompt.str()), changes_schema());
    PlanRevision revision = apply_planner_reply(region, draft, reply, "plan.final");
    revision.plan.iteration = draft.iteration;
    return revision;
}

UrbanPlan random_baseline_plan(const Region& region, Rng& rng) {
    UrbanPlan plan = init_plan(region);
    for (const Area& a : region.areas()) {
        if (!a.fixed) {
            plan.assignment[a.id] = kServiceLandUses[rng.index(kServiceLandUses.size())];
        }
    }
    return plan;
}

} // namespace cup
