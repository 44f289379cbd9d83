#include "cup/orchestrator.hpp"

#include <fstream>
#include <sstream>

#include "cup/error.hpp"
#include "cup/hash.hpp"
#include "cup/io.hpp"
#include "cup/planning.hpp"
#include "cup/profiling.hpp"
#include "cup/report.hpp"
#include "cup/rng.hpp"

namespace cup {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModule = "orchestrator";

// Seed streams derived from the run seed.
constexpr std::uint64_t kProfilingStream = 0;
constexpr std::uint64_t kBaselineStream = 1;

std::string record_name(int k) { return "record_" + std::to_string(k) + ".json"; }

void append_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw Error("io", "FileUnwritable", path.string());
    }
    out << text;
}

// Keeps the first `lines` lines of a file (drops output of an interrupted iteration).
void truncate_lines(const fs::path& path, std::size_t lines) {
    if (!fs::exists(path)) {
        io::write_text(path, "");
        return;
    }
    std::istringstream in(io::read_text(path));
    std::string kept;
    std::string line;
    for (std::size_t i = 0; i < lines && std::getline(in, line); ++i) {
        kept += line;
        kept += "\n";
    }
    io::write_text(path, kept);
}

Environment final_environment(const DayLog& log, int ticks) {
    Environment env;
    env.tick = ticks;
    for (auto it = log.mobility.rbegin(); it != log.mobility.rend() && it->tick == ticks; ++it) {
        env.physical[it->resident] = it->area;
    }
    env.feed = log.feed;
    return env;
}

class CycleRunner {
public:
    explicit CycleRunner(const CycleConfig& config) : config_(config), out_(config.paths.out) {}

    std::vector<IterationRecord> start() {
        if (fs::exists(out_ / "state.json")) {
            throw Error(kModule, "OutputNotEmpty", out_.string());
        }
        fs::create_directories(out_);
        region_ = load_region(config_.paths.resolve(config_.paths.region));
        load_inputs();
        make_gateway();

        io::write_json(out_ / "config.json", config_.to_json());
        io::write_json(out_ / "region.json", region_to_json(region_));
        io::write_text(out_ / "audit.jsonl", "");

        if (!config_.paths.population.empty()) {
            population_ = load_population(config_.paths.resolve(config_.paths.population), region_);
        } else {
            const auto spec = DemographicSpec::load(config_.paths.resolve(config_.paths.demographics));
            Rng rng(derive_seed(config_.seed, kProfilingStream));
            population_ = build_population(config_.population_size, spec, region_, *gateway_, rng);
        }
        io::write_json(out_ / "population.json", population_to_json(population_));
        memories_.assign(population_.size(), MemoryPool{});
        plan_ = init_plan(region_);
        flush_audit();
        save_state(0);
        return run_from(1);
    }

    std::vector<IterationRecord> resume() {
        const auto state_path = out_ / "state.json";
        if (!fs::exists(state_path)) {
            throw Error(kModule, "CorruptRecord", "state.json");
        }
        nlohmann::json state;
        try {
            state = io::read_json(state_path);
        } catch (const Error&) {
            throw Error(kModule, "CorruptRecord", "state.json");
        }
        if (state.value("config_hash", std::string{}) != config_.hash()) {
            throw Error(kModule, "ConfigMismatch", out_.string());
        }
        const int completed = state.value("completed", 0);

        try {
            region_ = region_from_json(io::read_json(out_ / "region.json"));
            validate_region(region_);
            population_ = population_from_json(io::read_json(out_ / "population.json"));
        } catch (const Error& e) {
            throw Error(kModule, "CorruptRecord", std::string("run inputs: ") + e.what());
        }
        for (int k = 1; k <= completed; ++k) {
            try {
                auto record = iteration_record_from_json(io::read_json(out_ / record_name(k)));
                if (record.k != k || record.plan.iteration != k) {
                    throw Error(kModule, "CorruptRecord", std::to_string(k));
                }
                validate_plan(region_, record.plan);
                records_.push_back(std::move(record));
            } catch (const Error&) {
                throw Error(kModule, "CorruptRecord", std::to_string(k));
            }
        }
        if (completed >= config_.iterations) {
            return records_;
        }

        load_inputs();
        make_gateway();
        if (auto* scripted = dynamic_cast<ScriptedBackend*>(&gateway_->backend())) {
            scripted->restore_cursor(state.at("script_cursor"));
        }
        truncate_lines(out_ / "audit.jsonl", state.value("audit_lines", std::size_t{0}));
        audit_lines_ = state.value("audit_lines", std::size_t{0});

        const auto sums = state.value("importance_since_reflection", std::vector<int>{});
        if (sums.size() != population_.size()) {
            throw Error(kModule, "CorruptRecord", "memory checkpoint");
        }
        for (std::size_t i = 0; i < population_.size(); ++i) {
            const auto dump = out_ / "state" / "memories" / (population_[i].id + ".jsonl");
            memories_.push_back(MemoryPool::from_jsonl(fs::exists(dump) ? io::read_text(dump) : "", sums[i]));
        }
        if (completed == 0) {
            plan_ = init_plan(region_);
        } else {
            plan_ = records_.back().plan;
            suggestions_ = suggestions_from_json(io::read_json(out_ / ("suggestions_" + std::to_string(completed) + ".json")));
        }
        io::write_json(out_ / "config.json", config_.to_json());
        return run_from(completed + 1);
    }

private:
    void load_inputs() {
        knowledge_ = PlannerKnowledge::load(config_.paths.resolve(config_.paths.knowledge));
        questionnaire_ = config_.paths.questionnaire.empty()
                             ? default_questionnaire()
                             : load_questionnaire(config_.paths.resolve(config_.paths.questionnaire));
    }

    void make_gateway() {
        std::optional<fs::path> script;
        if (!config_.paths.script.empty()) script = config_.paths.resolve(config_.paths.script);
        gateway_ = std::make_unique<Gateway>(make_backend(config_.backend, script, config_.live), config_.gateway);
    }

    std::vector<IterationRecord> run_from(int first) {
        for (int k = first; k <= config_.iterations; ++k) {
            run_iteration(k);
        }
        if (config_.baseline_day && !fs::exists(out_ / "baseline_report.json")) {
            run_baseline_day();
        }
        report(out_);
        return records_;
    }

    void run_iteration(int k) {
        gateway_->set_iteration(k);
        const std::size_t calls_before = gateway_->audit().size();
        const int ticks = config_.sim.ticks;
        IterationRecord record;
        record.k = k;

        // Planning: draft, discuss, finalize.
        PlanRevision draft = draft_plan(knowledge_, region_, plan_, suggestions_, *gateway_);
        const UrbanPlan& subject = config_.discussion_subject == "draft" ? draft.plan : plan_;
        DiscussionOptions discussion_options;
        discussion_options.rounds = config_.discussion_rounds;
        discussion_options.iteration = k;
        discussion_options.now = (k - 1) * ticks;
        DiscussionTranscript transcript =
            discuss(population_, memories_, region_, subject, *gateway_, discussion_options);
        PlanRevision final_plan =
            finalize_plan(knowledge_, region_, draft.plan, suggestions_, transcript.summary, *gateway_);
        record.warnings = draft.warnings;
        record.warnings.insert(record.warnings.end(), final_plan.warnings.begin(), final_plan.warnings.end());
        for (const auto& speaker : transcript.skipped) {
            record.warnings.push_back("plan.discuss: utterance by " + speaker + " skipped");
        }

        // Living.
        DayLog day = run_day(final_plan.plan, population_, memories_, region_, *gateway_, config_.sim, {},
                             (k - 1) * ticks);
        record.warnings.insert(record.warnings.end(), day.warnings.begin(), day.warnings.end());
        const std::string run_dir = "run_" + std::to_string(k);

        // Judging.
        JudgeReport report;
        report.iteration = k;
        report.quant = automatic(final_plan.plan, final_environment(day, ticks), population_, region_, config_.judge);
        report.qual = interview(population_, memories_, questionnaire_, *gateway_, k * ticks, config_.judge);
        report.overall = overall(report.quant, report.qual, config_.judge.overall);
        report.suggestions =
            suggest(report.quant, report.qual, final_plan.plan, region_, *gateway_, &report.warnings, config_.judge);
        record.warnings.insert(record.warnings.end(), report.qual.warnings.begin(), report.qual.warnings.end());
        record.warnings.insert(record.warnings.end(), report.warnings.begin(), report.warnings.end());

        record.plan = final_plan.plan;
        record.plan_diff = diff(plan_, final_plan.plan);
        record.day_log_ref = run_dir;
        record.report = report;
        record.gateway_call_count = gateway_->audit().size() - calls_before;

        const std::string suffix = std::to_string(k);
        io::write_json(out_ / ("plan_" + suffix + ".json"), plan_to_json(final_plan.plan));
        io::write_json(out_ / ("discussion_" + suffix + ".json"), to_json(transcript));
        write_day_log(day, population_, out_ / run_dir);
        io::write_json(out_ / ("report_" + suffix + ".json"), to_json(report));
        io::write_text(out_ / ("report_" + suffix + ".md"), render_report_markdown(report));
        io::write_json(out_ / ("suggestions_" + suffix + ".json"), to_json(report.suggestions));
        io::write_json(out_ / record_name(k), to_json(record));

        plan_ = final_plan.plan;
        suggestions_ = report.suggestions;
        records_.push_back(std::move(record));
        flush_audit();
        save_state(k);
    }

    void run_baseline_day() {
        gateway_->set_iteration(0);
        Rng rng(derive_seed(config_.seed, kBaselineStream));
        const UrbanPlan plan = random_baseline_plan(region_, rng);
        std::vector<MemoryPool> fresh(population_.size());
        DayLog day = run_day(plan, population_, fresh, region_, *gateway_, config_.sim);
        write_day_log(day, population_, out_ / "baseline");
        JudgeReport report;
        report.iteration = 0;
        report.quant = automatic(plan, final_environment(day, config_.sim.ticks), population_, region_, config_.judge);
        report.qual = interview(population_, fresh, questionnaire_, *gateway_, config_.sim.ticks, config_.judge);
        report.overall = overall(report.quant, report.qual, config_.judge.overall);
        io::write_json(out_ / "baseline_plan.json", plan_to_json(plan));
        io::write_json(out_ / "baseline_report.json", to_json(report));
        flush_audit();
    }

    void flush_audit() {
        const std::size_t total = gateway_->audit().size();
        append_text(out_ / "audit.jsonl", gateway_->audit().to_jsonl(flushed_));
        audit_lines_ += total - flushed_;
        flushed_ = total;
    }

    void save_state(int completed) {
        std::vector<int> sums;
        for (std::size_t i = 0; i < population_.size(); ++i) {
            io::write_text(out_ / "state" / "memories" / (population_[i].id + ".jsonl"), memories_[i].dump_jsonl());
            sums.push_back(memories_[i].importance_since_reflection());
        }
        nlohmann::json state{{"config_hash", config_.hash()},
                             {"completed", completed},
                             {"audit_lines", audit_lines_},
                             {"importance_since_reflection", sums}};
        if (auto* scripted = dynamic_cast<ScriptedBackend*>(&gateway_->backend())) {
            state["script_cursor"] = scripted->cursor_state();
        }
        io::write_json(out_ / "state.json", state);
    }

    const CycleConfig& config_;
    fs::path out_;
    Region region_;
    PlannerKnowledge knowledge_;
    Questionnaire questionnaire_;
    std::unique_ptr<Gateway> gateway_;
    std::vector<ResidentProfile> population_;
    std::vector<MemoryPool> memories_;
    UrbanPlan plan_;
    SuggestionList suggestions_;
    std::vector<IterationRecord> records_;
    std::size_t flushed_ = 0;
    std::size_t audit_lines_ = 0;
};

} // namespace

fs::path CyclePaths::resolve(const std::string& path) const {
    fs::path p(path);
    return p.is_absolute() ? p : base_dir / p;
}

CycleConfig CycleConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    CycleConfig c;
    try {
        c.iterations = j.value("iterations", c.iterations);
        c.population_size = j.value("population_size", c.population_size);
        c.seed = j.value("seed", c.seed);
        c.backend = j.value("backend", c.backend);
        if (j.contains("sim")) c.sim = SimConfig::from_json(j.at("sim"));
        c.discussion_rounds = j.value("discussion_rounds", c.discussion_rounds);
        c.discussion_subject = j.value("discussion_subject", c.discussion_subject);
        if (j.contains("judge")) c.judge = JudgeConfig::from_json(j.at("judge"));
        if (j.contains("gateway")) {
            c.gateway.max_in_flight = j.at("gateway").value("max_in_flight", c.gateway.max_in_flight);
            c.gateway.record_prompts = j.at("gateway").value("record_prompts", c.gateway.record_prompts);
        }
        if (j.contains("live")) c.live = LiveConfig::from_json(j.at("live"));
        c.baseline_day = j.value("baseline_day", c.baseline_day);
        const auto& paths = j.at("paths");
        c.paths.region = paths.at("region").get<std::string>();
        c.paths.demographics = paths.value("demographics", std::string{});
        c.paths.knowledge = paths.at("knowledge").get<std::string>();
        c.paths.questionnaire = paths.value("questionnaire", std::string{});
        c.paths.script = paths.value("script", std::string{});
        c.paths.population = paths.value("population", std::string{});
        c.paths.base_dir = base_dir;
        if (paths.contains("out")) c.paths.out = c.paths.resolve(paths.at("out").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "InvalidConfig", e.what());
    }
    if (c.iterations < 1) throw Error(kModule, "InvalidConfig", "iterations must be >= 1");
    if (c.population_size < 1) throw Error(kModule, "InvalidConfig", "population_size must be >= 1");
    if (c.discussion_rounds < 1) throw Error(kModule, "InvalidConfig", "discussion_rounds must be >= 1");
    if (c.discussion_subject != "previous" && c.discussion_subject != "draft") {
        throw Error(kModule, "InvalidConfig", "discussion_subject " + c.discussion_subject);
    }
    if (c.backend != "scripted" && c.backend != "live") throw Error(kModule, "InvalidConfig", "backend " + c.backend);
    if (c.backend == "scripted" && c.paths.script.empty()) {
        throw Error(kModule, "InvalidConfig", "scripted backend needs paths.script");
    }
    if (c.paths.population.empty() && c.paths.demographics.empty()) {
        throw Error(kModule, "InvalidConfig", "paths.demographics or paths.population required");
    }
    return c;
}

CycleConfig CycleConfig::load(const fs::path& path) {
    return from_json(io::read_json(path), fs::absolute(path).parent_path());
}

nlohmann::json CycleConfig::to_json() const {
    nlohmann::json paths_json{{"region", paths.region},
                              {"demographics", paths.demographics},
                              {"knowledge", paths.knowledge},
                              {"questionnaire", paths.questionnaire},
                              {"script", paths.script},
                              {"population", paths.population}};
    return {{"iterations", iterations},
            {"population_size", population_size},
            {"seed", seed},
            {"backend", backend},
            {"sim", sim.to_json()},
            {"discussion_rounds", discussion_rounds},
            {"discussion_subject", discussion_subject},
            {"judge", judge.to_json()},
            {"gateway", {{"max_in_flight", gateway.max_in_flight}, {"record_prompts", gateway.record_prompts}}},
            {"live",
             {{"base_url", live.base_url},
              {"path", live.path},
              {"model", live.model},
              {"max_attempts", live.max_attempts},
              {"initial_backoff_ms", live.initial_backoff.count()},
              {"timeout_s", live.timeout.count()}}},
            {"baseline_day", baseline_day},
            {"paths", paths_json}};
}

std::string CycleConfig::hash() const {
    auto canonical = to_json();
    canonical.erase("iterations");
    return sha256_hex(canonical.dump());
}

nlohmann::json to_json(const IterationRecord& r) {
    return {{"k", r.k},
            {"plan", plan_to_json(r.plan)},
            {"plan_diff", diff_to_json(r.plan_diff)},
            {"day_log_ref", r.day_log_ref},
            {"report", to_json(r.report)},
            {"gateway_call_count", r.gateway_call_count},
            {"warnings", r.warnings}};
}

IterationRecord iteration_record_from_json(const nlohmann::json& j) {
    try {
        IterationRecord r;
        r.k = j.at("k").get<int>();
        r.plan = plan_from_json(j.at("plan"));
        for (const auto& c : j.at("plan_diff")) {
            auto from = parse_land_use(c.at("from").get<std::string>());
            auto to = parse_land_use(c.at("to").get<std::string>());
            if (!from || !to) throw Error(kModule, "CorruptRecord", "plan_diff");
            r.plan_diff.changes.push_back({c.at("area").get<std::string>(), *from, *to});
        }
        r.day_log_ref = j.at("day_log_ref").get<std::string>();
        r.report = judge_report_from_json(j.at("report"));
        r.gateway_call_count = j.at("gateway_call_count").get<std::size_t>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "CorruptRecord", e.what());
    }
}

std::vector<IterationRecord> run_cycle(const CycleConfig& config) {
    if (config.paths.out.empty()) {
        throw Error(kModule, "InvalidConfig", "no output directory");
    }
    CycleRunner runner(config);
    return runner.start();
}

std::vector<IterationRecord> resume(const fs::path& out_dir, const CycleConfig& config) {
    CycleConfig adjusted = config;
    adjusted.paths.out = out_dir;
    CycleRunner runner(adjusted);
    return runner.resume();
}

} // namespace cup
