#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/living.hpp"
#include "cup/memory.hpp"
#include "cup/plan.hpp"
#include "cup/planning.hpp"
#include "cup/profiling.hpp"

namespace cup {

class Gateway;

struct QuantScores {
    double accessibility = 0.0; // percent
    double ecology = 0.0;       // percent
};

struct InterviewAnswer {
    std::string resident;
    std::string question;
    double score = 0.0;
    std::string rationale;
};

struct QualScore {
    double experience = 0.0;
    std::vector<InterviewAnswer> answers;
    std::vector<std::string> excluded;
    std::vector<std::string> warnings;
};

struct Question {
    std::string id;
    std::string text;
};

using Questionnaire = std::vector<Question>;

Questionnaire default_questionnaire();
Questionnaire load_questionnaire(const std::filesystem::path& path);

enum class OverallMode {
    ThreeWayMean, // mean of accessibility, ecology, experience
    Halves,       // mean of (mean of quantitative pair) and experience
};

struct JudgeConfig {
    double radius = 500.0;
    bool ecology_by_count = false;
    OverallMode overall = OverallMode::ThreeWayMean;
    std::size_t interview_memories = 5;
    std::size_t suggestion_rationales = 10;

    static JudgeConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct JudgeReport {
    int iteration = 0;
    QuantScores quant;
    QualScore qual;
    double overall = 0.0;
    SuggestionList suggestions;
    std::vector<std::string> warnings;
};

// Share of residential areas within `radius` of each essential category,
// averaged over the five categories, in percent (2 decimals). Throws NoResidentialArea.
double accessibility(const UrbanPlan& plan, const Region& region, double radius = 500.0);

// Size share (or count share) of greening areas, in percent (2 decimals).
double ecology(const UrbanPlan& plan, const Region& region, bool by_count = false);

// Environment and population are accepted for signature fidelity; the current
// metrics depend on the plan only.
QuantScores automatic(const UrbanPlan& plan, const Environment& final_env,
                      const std::vector<ResidentProfile>& population, const Region& region,
                      const JudgeConfig& config = {});

// One "judge.interview" call per resident. Scores are clamped to [0, 100].
// Throws InterviewAborted if more than half of the residents are excluded.
QualScore interview(const std::vector<ResidentProfile>& population, std::vector<MemoryPool>& memories,
                    const Questionnaire& questionnaire, Gateway& gateway, int now, const JudgeConfig& config = {});

double overall(const QuantScores& quant, const QualScore& qual, OverallMode mode = OverallMode::ThreeWayMean);
double overall(double accessibility, double ecology, double experience,
               OverallMode mode = OverallMode::ThreeWayMean);

// "judge.suggest". Unresolvable area targets are demoted to category level.
SuggestionList suggest(const QuantScores& quant, const QualScore& qual, const UrbanPlan& plan, const Region& region,
                       Gateway& gateway, std::vector<std::string>* warnings = nullptr,
                       const JudgeConfig& config = {});

nlohmann::json to_json(const JudgeReport& report);
JudgeReport judge_report_from_json(const nlohmann::json& j);

// Method label used in tables: "MA-LLM (Ours-1st)", "Ours-2nd", ...
std::string method_label(int iteration);

// Table row in the "Method | Access. | Ecology | Experi." layout.
std::string render_report_markdown(const JudgeReport& report);

} // namespace cup
