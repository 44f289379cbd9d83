#include "cup/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cup/error.hpp"
#include "cup/gateway.hpp"
#include "cup/io.hpp"
#include "cup/judging.hpp"
#include "cup/living.hpp"
#include "cup/memory.hpp"
#include "cup/orchestrator.hpp"
#include "cup/plan.hpp"
#include "cup/planning.hpp"
#include "cup/profiling.hpp"
#include "cup/report.hpp"
#include "cup/rng.hpp"

namespace cup {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct BackendFlags {
    std::string backend = "scripted";
    std::string script;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--backend", backend, "LLM backend")->check(CLI::IsMember({"scripted", "live"}));
        cmd->add_option("--script", script, "Scripted backend responses (JSON)");
    }

    std::unique_ptr<Gateway> gateway() const {
        std::optional<fs::path> path;
        if (!script.empty()) path = script;
        return std::make_unique<Gateway>(make_backend(backend, path));
    }
};

// Mutually required flags are checked before anything runs.
void require_script(const BackendFlags& flags) {
    if (flags.backend == "scripted" && flags.script.empty()) {
        throw CLI::ValidationError("--script", "required with --backend scripted");
    }
}

std::vector<MemoryPool> load_memories(const std::vector<ResidentProfile>& population, const std::string& run_dir) {
    std::vector<MemoryPool> pools;
    for (const auto& p : population) {
        const fs::path dump = fs::path(run_dir) / "memories" / (p.id + ".jsonl");
        if (!run_dir.empty() && fs::exists(dump)) {
            pools.push_back(MemoryPool::from_jsonl(io::read_text(dump)));
        } else {
            pools.emplace_back();
        }
    }
    return pools;
}

Environment load_final_environment(const std::string& run_dir) {
    Environment env;
    if (run_dir.empty()) return env;
    const fs::path feed = fs::path(run_dir) / "feed.json";
    if (fs::exists(feed)) env.feed = feed_from_json(io::read_json(feed));
    return env;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cyclical urban planning with LLM agents", "cup"};
    app.require_subcommand(1);

    // profile
    auto* profile_cmd = app.add_subcommand("profile", "Generate a resident population");
    std::string p_region, p_demographics, p_out;
    std::size_t p_count = 30;
    std::uint64_t p_seed = 7;
    BackendFlags p_backend;
    profile_cmd->add_option("--region", p_region, "Region JSON")->required();
    profile_cmd->add_option("--demographics", p_demographics, "Demographic distribution JSON")->required();
    profile_cmd->add_option("--count", p_count, "Number of residents")->check(CLI::PositiveNumber);
    profile_cmd->add_option("--seed", p_seed, "Sampling seed");
    profile_cmd->add_option("--out", p_out, "Output population JSON")->required();
    p_backend.add_to(profile_cmd);

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "Draft (and optionally discuss and finalize) one plan revision");
    std::string pl_region, pl_knowledge, pl_plan, pl_suggestions, pl_pop, pl_out;
    int pl_rounds = 2;
    BackendFlags pl_backend;
    plan_cmd->add_option("--region", pl_region, "Region JSON")->required();
    plan_cmd->add_option("--knowledge", pl_knowledge, "Planner knowledge text")->required();
    plan_cmd->add_option("--plan", pl_plan, "Previous plan (default: initial plan)");
    plan_cmd->add_option("--suggestions", pl_suggestions, "Suggestions from the last evaluation");
    plan_cmd->add_option("--pop", pl_pop, "Population JSON; enables the resident discussion");
    plan_cmd->add_option("--rounds", pl_rounds, "Discussion rounds")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--out", pl_out, "Output plan JSON")->required();
    pl_backend.add_to(plan_cmd);

    // live
    auto* live_cmd = app.add_subcommand("live", "Simulate one day of living");
    std::string l_plan, l_region, l_pop, l_config, l_out;
    std::uint64_t l_seed = 7;
    BackendFlags l_backend;
    live_cmd->add_option("--plan", l_plan, "Plan JSON")->required();
    live_cmd->add_option("--region", l_region, "Region JSON")->required();
    live_cmd->add_option("--pop", l_pop, "Population JSON")->required();
    live_cmd->add_option("--config", l_config, "Simulation config JSON");
    live_cmd->add_option("--seed", l_seed, "Run seed (the day itself draws no randomness)");
    live_cmd->add_option("--out", l_out, "Output run directory")->required();
    l_backend.add_to(live_cmd);

    // judge
    auto* judge_cmd = app.add_subcommand("judge", "Evaluate a plan after a day of living");
    std::string j_plan, j_region, j_pop, j_run, j_questionnaire, j_out;
    BackendFlags j_backend;
    judge_cmd->add_option("--plan", j_plan, "Plan JSON")->required();
    judge_cmd->add_option("--region", j_region, "Region JSON")->required();
    judge_cmd->add_option("--pop", j_pop, "Population JSON")->required();
    judge_cmd->add_option("--run", j_run, "Run directory from `live` (memories for the interviews)");
    judge_cmd->add_option("--questionnaire", j_questionnaire, "Questionnaire JSON");
    judge_cmd->add_option("--out", j_out, "Output report JSON")->required();
    j_backend.add_to(judge_cmd);

    // cycle
    auto* cycle_cmd = app.add_subcommand("cycle", "Run the full planning cycle");
    std::string c_config, c_out, c_backend, c_script;
    std::optional<int> c_iterations;
    std::optional<std::uint64_t> c_seed;
    bool c_baseline = false;
    bool c_resume = false;
    cycle_cmd->add_option("--config", c_config, "Cycle config JSON")->required();
    cycle_cmd->add_option("--out", c_out, "Output directory (overrides the config)");
    cycle_cmd->add_option("--iterations", c_iterations, "Number of iterations K")->check(CLI::PositiveNumber);
    cycle_cmd->add_option("--seed", c_seed, "Run seed");
    cycle_cmd->add_option("--backend", c_backend, "LLM backend")->check(CLI::IsMember({"scripted", "live"}));
    cycle_cmd->add_option("--script", c_script, "Scripted backend responses (JSON)");
    cycle_cmd->add_flag("--baseline-day", c_baseline, "Also simulate and interview a random-plan day");
    cycle_cmd->add_flag("--resume", c_resume, "Continue an interrupted run in --out");

    // report
    auto* report_cmd = app.add_subcommand("report", "Write summary.md and summary.svg for a run");
    std::string r_out;
    report_cmd->add_option("--out", r_out, "Run directory")->required();

    try {
        app.parse(argc, argv);
        if (profile_cmd->parsed()) require_script(p_backend);
        if (plan_cmd->parsed()) require_script(pl_backend);
        if (live_cmd->parsed()) require_script(l_backend);
        if (judge_cmd->parsed()) require_script(j_backend);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (profile_cmd->parsed()) {
            const Region region = load_region(p_region);
            const auto spec = DemographicSpec::load(p_demographics);
            auto gateway = p_backend.gateway();
            Rng rng(derive_seed(p_seed, 0));
            const auto population = build_population(p_count, spec, region, *gateway, rng);
            io::write_json(p_out, population_to_json(population));
            out << "wrote " << population.size() << " residents to " << p_out << "\n";
        } else if (plan_cmd->parsed()) {
            const Region region = load_region(pl_region);
            const auto knowledge = PlannerKnowledge::load(pl_knowledge);
            const UrbanPlan prev = pl_plan.empty() ? init_plan(region) : load_plan(pl_plan);
            validate_plan(region, prev);
            const SuggestionList suggestions =
                pl_suggestions.empty() ? SuggestionList{} : suggestions_from_json(io::read_json(pl_suggestions));
            auto gateway = pl_backend.gateway();
            PlanRevision revision = draft_plan(knowledge, region, prev, suggestions, *gateway);
            if (!pl_pop.empty()) {
                const auto population = load_population(pl_pop, region);
                std::vector<MemoryPool> no_memories;
                DiscussionOptions options;
                options.rounds = pl_rounds;
                options.iteration = revision.plan.iteration;
                const auto transcript = discuss(population, no_memories, region, prev, *gateway, options);
                auto final_plan =
                    finalize_plan(knowledge, region, revision.plan, suggestions, transcript.summary, *gateway);
                revision.plan = final_plan.plan;
                revision.warnings.insert(revision.warnings.end(), final_plan.warnings.begin(),
                                         final_plan.warnings.end());
            }
            for (const auto& w : revision.warnings) err << "warning: " << w << "\n";
            io::write_json(pl_out, plan_to_json(revision.plan));
            out << "wrote plan " << revision.plan.iteration << " to " << pl_out << "\n";
        } else if (live_cmd->parsed()) {
            const Region region = load_region(l_region);
            const UrbanPlan plan = load_plan(l_plan);
            validate_plan(region, plan);
            const auto population = load_population(l_pop, region);
            const SimConfig config = l_config.empty() ? SimConfig{} : SimConfig::from_json(io::read_json(l_config));
            auto gateway = l_backend.gateway();
            std::vector<MemoryPool> memories(population.size());
            const DayLog log = run_day(plan, population, memories, region, *gateway, config);
            write_day_log(log, population, l_out);
            io::write_text(fs::path(l_out) / "audit.jsonl", gateway->audit().to_jsonl());
            for (const auto& w : log.warnings) err << "warning: " << w << "\n";
            out << "wrote " << log.mobility.size() << " mobility records to " << l_out << "\n";
        } else if (judge_cmd->parsed()) {
            const Region region = load_region(j_region);
            const UrbanPlan plan = load_plan(j_plan);
            validate_plan(region, plan);
            const auto population = load_population(j_pop, region);
            const auto questionnaire =
                j_questionnaire.empty() ? default_questionnaire() : load_questionnaire(j_questionnaire);
            auto gateway = j_backend.gateway();
            auto memories = load_memories(population, j_run);
            int now = 0;
            for (const auto& pool : memories) {
                for (const auto& e : pool.entries()) now = std::max(now, e.created + 1);
            }
            JudgeReport report;
            report.iteration = plan.iteration;
            report.quant = automatic(plan, load_final_environment(j_run), population, region);
            report.qual = interview(population, memories, questionnaire, *gateway, now);
            report.overall = overall(report.quant, report.qual);
            report.suggestions = suggest(report.quant, report.qual, plan, region, *gateway, &report.warnings);
            io::write_json(j_out, to_json(report));
            out << render_report_markdown(report);
        } else if (cycle_cmd->parsed()) {
            CycleConfig config = CycleConfig::load(c_config);
            if (!c_out.empty()) config.paths.out = fs::absolute(c_out);
            if (c_iterations) config.iterations = *c_iterations;
            if (c_seed) config.seed = *c_seed;
            if (!c_backend.empty()) config.backend = c_backend;
            if (!c_script.empty()) config.paths.script = fs::absolute(c_script).string();
            if (c_baseline) config.baseline_day = true;
            if (config.paths.out.empty()) {
                err << "usage error: --out is required when the config has no paths.out\n\n" << cycle_cmd->help();
                return kExitUsage;
            }
            const auto records = c_resume ? resume(config.paths.out, config) : run_cycle(config);
            out << "completed " << records.size() << " iterations in " << config.paths.out.string() << "\n";
        } else if (report_cmd->parsed()) {
            out << report(r_out);
        }
    } catch (const Error& e) {
        err << "error: [" << e.module() << "] " << e.variant();
        if (!e.detail().empty()) err << ": " << e.detail();
        err << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}

} // namespace cup
