#include "cup/judging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "cup/error.hpp"
#include "cup/gateway.hpp"
#include "cup/io.hpp"

namespace cup {

namespace {

constexpr const char* kModule = "judging";

const char* kInterviewSystem =
    "You are a resident of an urban community being interviewed about your quality of life. "
    "Answer each question with a score from 0 (very poor) to 100 (excellent) and a short rationale.";

const char* kJudgeSystem =
    "You are an urban-planning judge. Based on the evaluation results, propose concrete improvements "
    "to the land-use plan for the next planning cycle.";

std::string ordinal(int n) {
    const int mod100 = n % 100;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        switch (n % 10) {
        case 1: suffix = "st"; break;
        case 2: suffix = "nd"; break;
        case 3: suffix = "rd"; break;
        default: break;
        }
    }
    return std::to_string(n) + suffix;
}

} // namespace

Questionnaire default_questionnaire() {
    return {
        {"q_commute", "How convenient is your daily commute and getting around the neighborhood?"},
        {"q_amenities", "How well do nearby shops, schools, clinics and other services meet your needs?"},
        {"q_greenery", "How satisfied are you with parks, open spaces and greenery near your home?"},
        {"q_social", "How satisfied are you with your social life and community interactions?"},
        {"q_overall", "Overall, how satisfied are you with living in this neighborhood?"},
    };
}

Questionnaire load_questionnaire(const std::filesystem::path& path) {
    const auto j = io::read_json(path);
    Questionnaire q;
    try {
        for (const auto& item : j) {
            q.push_back({item.at("id").get<std::string>(), item.at("text").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "MalformedQuestionnaire", e.what());
    }
    if (q.empty()) {
        throw Error(kModule, "MalformedQuestionnaire", "no questions");
    }
    return q;
}

JudgeConfig JudgeConfig::from_json(const nlohmann::json& j) {
    JudgeConfig c;
    c.radius = j.value("radius", c.radius);
    c.ecology_by_count = j.value("ecology_by_count", c.ecology_by_count);
    c.overall = j.value("overall", std::string("three_way_mean")) == "halves" ? OverallMode::Halves
                                                                              : OverallMode::ThreeWayMean;
    c.interview_memories = j.value("interview_memories", c.interview_memories);
    c.suggestion_rationales = j.value("suggestion_rationales", c.suggestion_rationales);
    if (!(c.radius > 0.0)) {
        throw Error(kModule, "InvalidRadius", std::to_string(c.radius));
    }
    return c;
}

nlohmann::json JudgeConfig::to_json() const {
    return {{"radius", radius},
            {"ecology_by_count", ecology_by_count},
            {"overall", overall == OverallMode::Halves ? "halves" : "three_way_mean"},
            {"interview_memories", interview_memories},
            {"suggestion_rationales", suggestion_rationales}};
}

double accessibility(const UrbanPlan& plan, const Region& region, double radius) {
    if (!(radius > 0.0)) {
        throw Error(kModule, "InvalidRadius", std::to_string(radius));
    }
    std::vector<const Area*> homes;
    for (const Area& a : region.areas()) {
        if (plan.at(a.id) == LandUse::Residential) homes.push_back(&a);
    }
    if (homes.empty()) {
        throw Error(kModule, "NoResidentialArea", region.name());
    }
    std::size_t covered = 0;
    for (ServiceCategory category : kServiceCategories) {
        for (const Area* home : homes) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const Area& a : region.areas()) {
                const auto c = category_of(plan.at(a.id));
                if (c && *c == category) {
                    nearest = std::min(nearest, euclidean(home->centroid, a.centroid));
                }
            }
            if (nearest <= radius) ++covered;
        }
    }
    // Hundredths of a percent straight from the integer ratio, so halves round up exactly.
    const double denominator = static_cast<double>(kServiceCategories.size() * homes.size());
    return std::round(10000.0 * static_cast<double>(covered) / denominator) / 100.0;
}

double ecology(const UrbanPlan& plan, const Region& region, bool by_count) {
    double green = 0.0;
    double total = 0.0;
    for (const Area& a : region.areas()) {
        const double weight = by_count ? 1.0 : a.size_m2;
        total += weight;
        if (is_greening(plan.at(a.id))) green += weight;
    }
    if (total <= 0.0) return 0.0;
    return std::round(10000.0 * green / total) / 100.0;
}

QuantScores automatic(const UrbanPlan& plan, const Environment& final_env,
                      const std::vector<ResidentProfile>& population, const Region& region,
                      const JudgeConfig& config) {
    // final_env and population feed no metric yet.
    (void)final_env;
    (void)population;
    return {accessibility(plan, region, config.radius), ecology(plan, region, config.ecology_by_count)};
}

QualScore interview(const std::vector<ResidentProfile>& population, std::vector<MemoryPool>& memories,
                    const Questionnaire& questionnaire, Gateway& gateway, int now, const JudgeConfig& config) {
    if (questionnaire.empty()) {
        throw Error(kModule, "MalformedQuestionnaire", "no questions");
    }
    if (!memories.empty() && memories.size() != population.size()) {
        throw Error(kModule, "MemoryPoolMismatch", std::to_string(memories.size()));
    }
    static const Schema schema = Schema::object({{"answers", Schema::array(Schema::object({
                                                                 {"id", Schema::string()},
                                                                 {"score", Schema::number()},
                                                                 {"rationale", Schema::string(), false},
                                                             }))}});

    std::ostringstream questions;
    for (const auto& q : questionnaire) {
        questions << "- " << q.id << ": " << q.text << "\n";
    }

    QualScore qual;
    for (std::size_t i = 0; i < population.size(); ++i) {
        const auto& profile = population[i];
        std::ostringstream prompt;
        prompt << describe_profile(profile) << "\n";
        if (!memories.empty()) {
            const auto recalled = memories[i].retrieve("my daily life commute amenities greenery neighbors satisfaction",
                                                       config.interview_memories, now);
            prompt << "Your recent experience:\n" << (recalled.empty() ? "- none\n" : render_memories(recalled))
                   << "\n";
        }
        prompt << "Questionnaire:\n"
               << questions.str() << "\n"
               << "Reply as JSON: {\"answers\": [{\"id\": \"<question id>\", \"score\": <0-100>, \"rationale\": "
                  "\"...\"}]}";
        try {
            const auto reply =
                gateway.complete_structured(make_request("judge.interview", kInterviewSystem, prompt.str()), schema);
            std::map<std::string, const nlohmann::json*> by_id;
            for (const auto& a : reply.at("answers")) {
                by_id.emplace(a.at("id").get<std::string>(), &a);
            }
            std::vector<InterviewAnswer> answers;
            for (const auto& q : questionnaire) {
                auto it = by_id.find(q.id);
                if (it == by_id.end()) {
                    throw Error(kModule, "MissingAnswer", profile.id + "." + q.id);
                }
                const auto& a = *it->second;
                double score = a.at("score").get<double>();
                if (score < 0.0 || score > 100.0) {
                    const double clamped = std::clamp(score, 0.0, 100.0);
                    std::ostringstream w;
                    w << profile.id << "." << q.id << ": score " << score << " clamped to " << clamped;
                    qual.warnings.push_back(w.str());
                    score = clamped;
                }
                answers.push_back({profile.id, q.id, score, a.value("rationale", std::string{})});
            }
            qual.answers.insert(qual.answers.end(), answers.begin(), answers.end());
        } catch (const Error& e) {
            qual.excluded.push_back(profile.id);
            qual.warnings.push_back(profile.id + " excluded from interview: " + e.what());
        }
    }
    if (qual.excluded.size() * 2 > population.size()) {
        throw Error(kModule, "InterviewAborted",
                    std::to_string(qual.excluded.size()) + " of " + std::to_string(population.size()) + " excluded");
    }

    // Sum in (resident, question) order so the mean does not depend on processing order.
    std::map<std::string, std::size_t> resident_rank;
    for (std::size_t i = 0; i < population.size(); ++i) resident_rank[population[i].id] = i;
    std::map<std::string, std::size_t> question_rank;
    for (std::size_t i = 0; i < questionnaire.size(); ++i) question_rank[questionnaire[i].id] = i;
    std::sort(qual.answers.begin(), qual.answers.end(), [&](const InterviewAnswer& a, const InterviewAnswer& b) {
        const auto ra = resident_rank[a.resident];
        const auto rb = resident_rank[b.resident];
        if (ra != rb) return ra < rb;
        return question_rank[a.question] < question_rank[b.question];
    });
    double sum = 0.0;
    for (const auto& a : qual.answers) sum += a.score;
    qual.experience = qual.answers.empty() ? 0.0 : io::round2(sum / static_cast<double>(qual.answers.size()));
    return qual;
}

double overall(double accessibility_pct, double ecology_pct, double experience_pct, OverallMode mode) {
    if (mode == OverallMode::Halves) {
        return io::round2(((accessibility_pct + ecology_pct) / 2.0 + experience_pct) / 2.0);
    }
    return io::round2((accessibility_pct + ecology_pct + experience_pct) / 3.0);
}

double overall(const QuantScores& quant, const QualScore& qual, OverallMode mode) {
    return overall(quant.accessibility, quant.ecology, qual.experience, mode);
}

SuggestionList suggest(const QuantScores& quant, const QualScore& qual, const UrbanPlan& plan, const Region& region,
                       Gateway& gateway, std::vector<std::string>* warnings, const JudgeConfig& config) {
    static const Schema schema = Schema::object({{"suggestions", Schema::array(Schema::object({
                                                                     {"target", Schema::string()},
                                                                     {"proposed", Schema::string()},
                                                                     {"rationale", Schema::string(), false},
                                                                 }))}});

    std::vector<InterviewAnswer> lowest = qual.answers; // already in (resident, question) order
    std::stable_sort(lowest.begin(), lowest.end(),
                     [](const InterviewAnswer& a, const InterviewAnswer& b) { return a.score < b.score; });
    lowest.resize(std::min(lowest.size(), config.suggestion_rationales));

    std::ostringstream prompt;
    prompt << "Evaluation of plan iteration " << plan.iteration << ":\n"
           << "- Accessibility: " << io::fixed2(quant.accessibility) << "%\n"
           << "- Ecology: " << io::fixed2(quant.ecology) << "%\n"
           << "- Experience: " << io::fixed2(qual.experience) << "%\n\n"
           << "Lowest-scoring interview answers:\n";
    if (lowest.empty()) prompt << "- none\n";
    for (const auto& a : lowest) {
        prompt << "- " << a.resident << " on " << a.question << " (" << io::fixed2(a.score) << "): " << a.rationale
               << "\n";
    }
    prompt << "\nCurrent plan:\n"
           << describe_plan(region, plan) << "\n"
           << "Suggest improvements. Reply as JSON: {\"suggestions\": [{\"target\": \"<area id or category>\", "
              "\"proposed\": \"<land-use or change>\", \"rationale\": \"...\"}]}";

    const auto reply = gateway.complete_structured(make_request("judge.suggest", kJudgeSystem, prompt.str()), schema);

    SuggestionList list;
    for (const auto& item : reply.at("suggestions")) {
        Suggestion s;
        s.target = item.at("target").get<std::string>();
        s.proposed = item.at("proposed").get<std::string>();
        s.rationale = item.value("rationale", std::string{});
        if (region.index_of(s.target)) {
            s.level = Suggestion::Level::Area;
        } else if (auto category = parse_category(s.target)) {
            s.level = Suggestion::Level::Category;
            s.target = std::string(to_string(*category));
        } else if (auto use = parse_land_use(s.target)) {
            s.level = Suggestion::Level::Category;
            s.target = std::string(to_string(*use));
        } else {
            const std::string original = s.target;
            s.level = Suggestion::Level::Category;
            if (auto proposed_use = parse_land_use(s.proposed)) {
                auto category = category_of(*proposed_use);
                s.target = category ? std::string(to_string(*category)) : std::string(to_string(*proposed_use));
            } else {
                s.target = "general";
            }
            if (warnings) {
                warnings->push_back("judge.suggest: unresolvable target " + original + " demoted to category " +
                                    s.target);
            }
        }
        list.items.push_back(std::move(s));
    }
    return list;
}

nlohmann::json to_json(const JudgeReport& r) {
    nlohmann::json answers = nlohmann::json::array();
    for (const auto& a : r.qual.answers) {
        answers.push_back(
            {{"resident", a.resident}, {"question", a.question}, {"score", a.score}, {"rationale", a.rationale}});
    }
    return {{"iteration", r.iteration},
            {"quant", {{"accessibility", r.quant.accessibility}, {"ecology", r.quant.ecology}}},
            {"qual",
             {{"experience", r.qual.experience},
              {"answers", answers},
              {"excluded", r.qual.excluded},
              {"warnings", r.qual.warnings}}},
            {"overall", r.overall},
            {"suggestions", to_json(r.suggestions)},
            {"warnings", r.warnings}};
}

JudgeReport judge_report_from_json(const nlohmann::json& j) {
    try {
        JudgeReport r;
        r.iteration = j.at("iteration").get<int>();
        r.quant.accessibility = j.at("quant").at("accessibility").get<double>();
        r.quant.ecology = j.at("quant").at("ecology").get<double>();
        r.qual.experience = j.at("qual").at("experience").get<double>();
        for (const auto& a : j.at("qual").at("answers")) {
            r.qual.answers.push_back({a.at("resident").get<std::string>(), a.at("question").get<std::string>(),
                                      a.at("score").get<double>(), a.at("rationale").get<std::string>()});
        }
        r.qual.excluded = j.at("qual").value("excluded", std::vector<std::string>{});
        r.qual.warnings = j.at("qual").value("warnings", std::vector<std::string>{});
        r.overall = j.at("overall").get<double>();
        r.suggestions = suggestions_from_json(j.at("suggestions"));
        r.warnings = j.value("warnings", std::vector<std::string>{});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "MalformedReport", e.what());
    }
}

std::string method_label(int iteration) {
    if (iteration == 1) return "MA-LLM (Ours-1st)";
    return "Ours-" + ordinal(iteration);
}

std::string render_report_markdown(const JudgeReport& r) {
    std::ostringstream out;
    out << "Planning efficacy (%)\n\n"
        << "| Method | Access. | Ecology | Experi. |\n"
        << "|---|---|---|---|\n"
        << "| " << method_label(r.iteration) << " | " << io::fixed2(r.quant.accessibility) << " | "
        << io::fixed2(r.quant.ecology) << " | " << io::fixed2(r.qual.experience) << " |\n\n"
        << "Overall: " << io::fixed2(r.overall) << "\n";
    if (!r.suggestions.empty()) {
        out << "\nSuggestions:\n";
        for (const auto& s : r.suggestions.items) {
            out << "- " << s.target << " -> " << s.proposed;
            if (!s.rationale.empty()) out << ": " << s.rationale;
            out << "\n";
        }
    }
    return out.str();
}

} // namespace cup
