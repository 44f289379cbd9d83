#include <gtest/gtest.h>

#include <sstream>

#include "cup/cli.hpp"
#include "cup/io.hpp"
#include "support.hpp"

using namespace cup;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "cup");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return (test::data_dir() / name).string(); }

json profile_script() {
    return {{"entries",
             {{{"tag", "profile.personality"}, {"responses", {"kind"}}, {"cycle", true}},
              {{"tag", "profile.occupation"}, {"responses", {"nurse", "chef", "pilot"}}},
              {{"tag", "profile.lifestyle"},
               {"responses", {{{"hobbies", {"chess"}}, {"lifestyle", "busy"}, {"pursuits", "learning"}}}},
               {"cycle", true}}}}};
}

} // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run({}).code, 2);
    const auto missing = run({"cycle"});
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("usage error"), std::string::npos);
    EXPECT_NE(missing.err.find("--config"), std::string::npos);
    EXPECT_EQ(run({"report", "--out", "x", "--bogus"}).code, 2);
    EXPECT_EQ(run({"dance"}).code, 2);
    EXPECT_EQ(run({"profile", "--region", "r", "--demographics", "d", "--out", "o"}).code, 2);
    EXPECT_EQ(run({"profile", "--region", "r", "--demographics", "d", "--out", "o", "--backend", "psychic"}).code, 2);
    EXPECT_EQ(run({"cycle", "--config", data("cycle_e2e.json")}).code, 2);
}

TEST(Cli, HelpExitsWithZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("cycle"), std::string::npos);
}

TEST(Cli, DomainErrorsExitWithOne) {
    test::TempDir dir;
    json region = io::read_json(test::data_dir() / "region_12.json");
    region["areas"][1]["id"] = region["areas"][0]["id"];
    io::write_json(dir / "dup.json", region);
    io::write_json(dir / "s.json", profile_script());
    const auto r = run({"profile", "--region", (dir / "dup.json").string(), "--demographics", data("demographics.json"),
                        "--out", (dir / "pop.json").string(), "--script", (dir / "s.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("DuplicateAreaId"), std::string::npos);
    EXPECT_EQ(run({"report", "--out", dir.path().string()}).code, 1);
}

TEST(Cli, ProfilePlanLiveJudge) {
    test::TempDir dir;
    io::write_json(dir / "s.json", profile_script());
    const auto pop = (dir / "pop.json").string();
    auto r = run({"profile", "--region", data("region_12.json"), "--demographics", data("demographics.json"), "--count",
                  "3", "--out", pop, "--script", (dir / "s.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::read_json(pop).size(), 3u);

    io::write_json(dir / "plan_script.json",
                   {{"entries",
                     {{{"tag", "plan.draft"},
                       {"responses", {{{"changes", {{{"area", "a_6"}, {"land_use", "Park"}}}}}}}}}}});
    const auto plan = (dir / "plan.json").string();
    r = run({"plan", "--region", data("region_12.json"), "--knowledge", data("knowledge.md"), "--out", plan,
             "--script", (dir / "plan_script.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;

    io::write_json(dir / "live_script.json",
                   {{"entries",
                     {{{"tag", "live.decide"},
                       {"responses", {{{"intent", "walk"}, {"target", "a_6"}, {"dwell", 30}}}},
                       {"cycle", true}},
                      {{"tag", "live.reflect"}, {"responses", {{{"thoughts", {"nice"}}}}}, {"cycle", true}}}}});
    io::write_json(dir / "sim.json", {{"T", 60}});
    r = run({"live", "--plan", plan, "--region", data("region_12.json"), "--pop", pop, "--config",
             (dir / "sim.json").string(), "--out", (dir / "run").string(), "--script",
             (dir / "live_script.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(test::read_lines(dir / "run" / "mobility.jsonl").size(), 180u);
    EXPECT_TRUE(std::filesystem::exists(dir / "run" / "audit.jsonl"));

    io::write_json(dir / "judge_script.json",
                   {{"entries",
                     {{{"tag", "judge.interview"},
                       {"responses", {{{"answers", {{{"id", "q_commute"}, {"score", 60}},
                                                    {{"id", "q_amenities"}, {"score", 60}},
                                                    {{"id", "q_greenery"}, {"score", 60}},
                                                    {{"id", "q_social"}, {"score", 60}},
                                                    {{"id", "q_overall"}, {"score", 60}}}}}}},
                       {"cycle", true}},
                      {{"tag", "judge.suggest"}, {"responses", {{{"suggestions", json::array()}}}}}}}});
    r = run({"judge", "--plan", plan, "--region", data("region_12.json"), "--pop", pop, "--run",
             (dir / "run").string(), "--questionnaire", data("questionnaire.json"), "--out",
             (dir / "report.json").string(), "--script", (dir / "judge_script.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("| MA-LLM (Ours-1st) |"), std::string::npos);
    EXPECT_EQ(io::read_json(dir / "report.json").at("qual").at("experience"), 60.0);
}

TEST(Cli, CycleThenReport) {
    test::TempDir dir;
    json cfg = io::read_json(test::data_dir() / "cycle_e2e.json");
    cfg["sim"]["T"] = 120;
    for (auto& item : cfg["paths"].items()) item.value() = data(item.value().get<std::string>());
    io::write_json(dir / "cfg.json", cfg);
    const auto out = (dir / "run").string();
    auto r = run({"cycle", "--config", (dir / "cfg.json").string(), "--out", out, "--iterations", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run({"cycle", "--config", (dir / "cfg.json").string(), "--out", out, "--iterations", "2", "--resume"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("completed 2 iterations"), std::string::npos);
    r = run({"cycle", "--config", (dir / "cfg.json").string(), "--out", out});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("OutputNotEmpty"), std::string::npos);
    r = run({"report", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("| Ours-2nd |"), std::string::npos);
}
