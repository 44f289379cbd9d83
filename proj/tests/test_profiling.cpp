#include <gtest/gtest.h>

#include <map>
#include <set>

#include "cup/error.hpp"
#include "cup/io.hpp"
#include "cup/profiling.hpp"
#include "cup/rng.hpp"
#include "support.hpp"

using namespace cup;
using nlohmann::json;

namespace {

DemographicSpec spec() { return DemographicSpec::load(test::data_dir() / "demographics.json"); }

json lifestyle(const std::string& hobby) {
    return {{"hobbies", {hobby}}, {"lifestyle", "busy"}, {"pursuits", "learning"}};
}

json basic_script(std::vector<std::string> occupations) {
    return {{"entries",
             {{{"tag", "profile.personality"}, {"responses", {"kind"}}, {"cycle", true}},
              {{"tag", "profile.occupation"}, {"responses", occupations}},
              {{"tag", "profile.lifestyle"}, {"responses", {lifestyle("chess")}}, {"cycle", true}}}}};
}

std::string variant_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.variant();
    }
    return "";
}

} // namespace

TEST(Rng, DeterministicAndPortable) {
    Rng a(7), b(7), c(8);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.uniform01();
        EXPECT_EQ(x, b.uniform01());
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
    EXPECT_NE(Rng(7).uniform01(), c.uniform01());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.uniform_int(3, 5);
        EXPECT_GE(v, 3);
        EXPECT_LE(v, 5);
    }
    EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
    EXPECT_EQ(derive_seed(7, 0), derive_seed(7, 0));
}

TEST(Demographics, ValidatesDistributions) {
    EXPECT_NO_THROW(spec());
    DemographicSpec bad = spec();
    bad.age_buckets[0].p += 0.01;
    EXPECT_EQ(variant_of([&] { validate_demographics(bad); }), "InvalidDemographics");
    DemographicSpec overlap = spec();
    overlap.age_buckets[1].min = overlap.age_buckets[0].max;
    EXPECT_EQ(variant_of([&] { validate_demographics(overlap); }), "InvalidDemographics");
    DemographicSpec empty;
    EXPECT_EQ(variant_of([&] { validate_demographics(empty); }), "InvalidDemographics");
    EXPECT_EQ(variant_of([] { DemographicSpec::from_json({{"genders", json::array()}}); }), "InvalidDemographics");
}

TEST(SampleBasics, FollowsTheDistribution) {
    const Region region = test::fixture_region();
    Rng rng(5);
    std::map<int, int> bucket_counts;
    std::map<std::string, int> homes;
    const int n = 20000;
    const auto s = spec();
    for (int i = 0; i < n; ++i) {
        const Basics b = sample_basics(s, region, rng);
        for (std::size_t k = 0; k < s.age_buckets.size(); ++k) {
            if (b.age >= s.age_buckets[k].min && b.age <= s.age_buckets[k].max) ++bucket_counts[static_cast<int>(k)];
        }
        ++homes[b.home_area];
        EXPECT_TRUE(b.gender == "female" || b.gender == "male");
    }
    for (std::size_t k = 0; k < s.age_buckets.size(); ++k) {
        EXPECT_NEAR(bucket_counts[static_cast<int>(k)] / double(n), s.age_buckets[k].p, 0.02);
    }
    EXPECT_EQ(homes.size(), 5u);
    for (const auto& [home, count] : homes) {
        EXPECT_NEAR(count / double(n), 0.2, 0.02);
        EXPECT_EQ(region.area(home).land_use, LandUse::Residential);
    }
}

TEST(SampleBasics, NeedsAResidentialArea) {
    const Region region = test::grid_region(3, 2, 0);
    Rng rng(1);
    EXPECT_EQ(variant_of([&] { sample_basics(spec(), region, rng); }), "NoResidentialArea");
}

TEST(GenerateProfile, ThreeTaggedCallsInOrder) {
    auto gw = test::scripted_gateway(basic_script({"nurse"}));
    const ResidentProfile p = generate_profile("R_1", {30, "female", "a_1"}, {}, *gw);
    EXPECT_EQ(p.personality, "kind");
    EXPECT_EQ(p.occupation, "nurse");
    EXPECT_EQ(p.hobbies, std::vector<std::string>{"chess"});
    const auto entries = gw->audit().entries();
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_EQ(entries[0].tag, "profile.personality");
    EXPECT_EQ(entries[1].tag, "profile.occupation");
    EXPECT_EQ(entries[2].tag, "profile.lifestyle");
}

TEST(GenerateProfile, OccupationPromptCarriesAvoidList) {
    auto gw = test::scripted_gateway(
        {{"entries",
          {{{"tag", "profile.personality"}, {"responses", {"kind"}}, {"cycle", true}},
           {{"tag", "profile.occupation"}, {"match", "[nurse, chef]"}, {"responses", {"pilot"}}},
           {{"tag", "profile.lifestyle"}, {"responses", {lifestyle("chess")}}, {"cycle", true}}}}});
    std::vector<ResidentProfile> prior{test::make_profile("R_1", "a_1"), test::make_profile("R_2", "a_1")};
    prior[0].occupation = "nurse";
    prior[1].occupation = "chef";
    EXPECT_EQ(generate_profile("R_3", {30, "male", "a_1"}, prior, *gw).occupation, "pilot");
}

TEST(GenerateProfile, CollisionIsReaskedThenSuffixed) {
    auto prior = std::vector<ResidentProfile>{test::make_profile("R_1", "a_1")};
    prior[0].occupation = "Nurse";
    {
        auto gw = test::scripted_gateway(basic_script({"nurse", "doctor"}));
        EXPECT_EQ(generate_profile("R_2", {30, "male", "a_1"}, prior, *gw).occupation, "doctor");
    }
    {
        auto gw = test::scripted_gateway(basic_script({"nurse", "nurse", "nurse"}));
        EXPECT_EQ(generate_profile("R_2", {30, "male", "a_1"}, prior, *gw).occupation, "nurse (R_2)");
        EXPECT_EQ(gw->audit().size(), 5u);
    }
}

TEST(GenerateProfile, EmptyFieldsAreErrors) {
    auto gw = test::scripted_gateway({{"entries", {{{"tag", "profile.personality"}, {"responses", {"   "}}}}}});
    try {
        generate_profile("R_4", {30, "male", "a_1"}, {}, *gw);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.variant(), "EmptyField");
        EXPECT_EQ(e.detail(), "R_4.personality");
    }
}

TEST(BuildPopulation, ProducesSequentialIdsDeterministically) {
    const Region region = test::fixture_region();
    auto run = [&] {
        auto gw = test::scripted_gateway(basic_script({"a", "b", "c", "d"}));
        Rng rng(derive_seed(9, 0));
        return build_population(4, spec(), region, *gw, rng);
    };
    const auto pop = run();
    ASSERT_EQ(pop.size(), 4u);
    for (std::size_t i = 0; i < pop.size(); ++i) EXPECT_EQ(pop[i].id, "R_" + std::to_string(i + 1));
    EXPECT_EQ(pop, run());
}

TEST(BuildPopulation, NamesTheFailingResident) {
    const Region region = test::fixture_region();
    auto gw = test::scripted_gateway(basic_script({"a"}));
    Rng rng(1);
    try {
        build_population(2, spec(), region, *gw, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.variant(), "ScriptExhausted");
        EXPECT_EQ(e.detail().rfind("R_2", 0), 0u);
    }
    EXPECT_EQ(variant_of([&] { build_population(0, spec(), region, *gw, rng); }), "InvalidCount");
}

TEST(Population, JsonRoundTripAndValidation) {
    const Region region = test::fixture_region();
    std::vector<ResidentProfile> pop{test::make_profile("R_1", "a_1"), test::make_profile("R_2", "a_3")};
    test::TempDir dir;
    io::write_json(dir / "pop.json", population_to_json(pop));
    EXPECT_EQ(load_population(dir / "pop.json", region), pop);
    pop[1].home_area = "a_9";
    io::write_json(dir / "bad.json", population_to_json(pop));
    EXPECT_EQ(variant_of([&] { load_population(dir / "bad.json", region); }), "NonResidentialHome");
    pop[1] = pop[0];
    io::write_json(dir / "dup.json", population_to_json(pop));
    EXPECT_EQ(variant_of([&] { load_population(dir / "dup.json", region); }), "MalformedPopulation");
}

TEST(Profile, DescriptionCarriesMarker) {
    const auto text = describe_profile(test::make_profile("R_19", "a_2"));
    EXPECT_EQ(text.rfind("Resident [R_19]\n", 0), 0u);
    EXPECT_NE(text.find("home area: a_2"), std::string::npos);
}
