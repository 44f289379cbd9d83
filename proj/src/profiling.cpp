#include "cup/profiling.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cup/error.hpp"
#include "cup/gateway.hpp"
#include "cup/io.hpp"

namespace cup {

namespace {

constexpr const char* kModule = "profiling";
constexpr int kOccupationRetries = 2;

const char* kSystemPrompt =
    "You are building realistic resident personas for an urban community simulation. "
    "Answer concisely and stay consistent with the attributes given.";

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n\"");
    if (begin == std::string::npos) return {};
    const auto end = text.find_last_not_of(" \t\r\n\"");
    return text.substr(begin, end - begin + 1);
}

std::string lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    return text;
}

std::string join(const std::vector<std::string>& items, const char* separator = ", ") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += separator;
        out += items[i];
    }
    return out;
}

std::string basics_block(const std::string& id, const Basics& basics) {
    std::ostringstream out;
    out << resident_marker(id) << "\n"
        << "Age: " << basics.age << "\n"
        << "Gender: " << basics.gender << "\n"
        << "Home area: " << basics.home_area << "\n";
    return out.str();
}

std::string require_text(const std::string& raw, const std::string& id, const char* field) {
    std::string value = trim(raw);
    if (value.empty()) {
        throw Error(kModule, "EmptyField", id + "." + field);
    }
    return value;
}

} // namespace

DemographicSpec DemographicSpec::from_json(const nlohmann::json& j) {
    DemographicSpec spec;
    try {
        for (const auto& b : j.at("age_buckets")) {
            spec.age_buckets.push_back({b.at("min").get<int>(), b.at("max").get<int>(), b.at("p").get<double>()});
        }
        for (const auto& g : j.at("genders")) {
            spec.genders.push_back({g.at("label").get<std::string>(), g.at("p").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "InvalidDemographics", e.what());
    }
    validate_demographics(spec);
    return spec;
}

DemographicSpec DemographicSpec::load(const std::filesystem::path& path) {
    return from_json(io::read_json(path));
}

void validate_demographics(const DemographicSpec& spec) {
    if (spec.age_buckets.empty() || spec.genders.empty()) {
        throw Error(kModule, "InvalidDemographics", "empty distribution");
    }
    double age_total = 0.0;
    for (const auto& b : spec.age_buckets) {
        if (b.min > b.max || b.min < 0 || b.p < 0.0) {
            throw Error(kModule, "InvalidDemographics",
                        "bucket [" + std::to_string(b.min) + "," + std::to_string(b.max) + "]");
        }
        age_total += b.p;
    }
    double gender_total = 0.0;
    for (const auto& g : spec.genders) {
        if (g.p < 0.0 || g.label.empty()) {
            throw Error(kModule, "InvalidDemographics", "gender " + g.label);
        }
        gender_total += g.p;
    }
    if (std::abs(age_total - 1.0) > 1e-9) {
        throw Error(kModule, "InvalidDemographics", "age probabilities sum to " + std::to_string(age_total));
    }
    if (std::abs(gender_total - 1.0) > 1e-9) {
        throw Error(kModule, "InvalidDemographics", "gender probabilities sum to " + std::to_string(gender_total));
    }
    auto buckets = spec.age_buckets;
    std::sort(buckets.begin(), buckets.end(), [](const AgeBucket& a, const AgeBucket& b) { return a.min < b.min; });
    for (std::size_t i = 1; i < buckets.size(); ++i) {
        if (buckets[i].min <= buckets[i - 1].max) {
            throw Error(kModule, "InvalidDemographics", "overlapping age buckets");
        }
    }
}

std::string resident_marker(const std::string& id) {
    return "Resident [" + id + "]";
}

std::string describe_profile(const ResidentProfile& p) {
    std::ostringstream out;
    out << resident_marker(p.id) << "\n"
        << "Age: " << p.age << ", gender: " << p.gender << ", home area: " << p.home_area << "\n"
        << "Personality: " << p.personality << "\n"
        << "Occupation: " << p.occupation << "\n"
        << "Hobbies: " << join(p.hobbies) << "\n"
        << "Lifestyle: " << p.lifestyle << "\n"
        << "Pursuits: " << p.pursuits << "\n";
    return out.str();
}

Basics sample_basics(const DemographicSpec& spec, const Region& region, Rng& rng) {
    const auto homes = region.residential_ids();
    if (homes.empty()) {
        throw Error(kModule, "NoResidentialArea", region.name());
    }
    auto pick = [&rng](const auto& items) -> std::size_t {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            acc += items[i].p;
            if (u < acc) return i;
        }
        // Rounding slack: fall back to the last category with positive mass.
        for (std::size_t i = items.size(); i-- > 0;) {
            if (items[i].p > 0.0) return i;
        }
        return items.size() - 1;
    };
    Basics basics;
    const auto& bucket = spec.age_buckets[pick(spec.age_buckets)];
    basics.age = static_cast<int>(rng.uniform_int(bucket.min, bucket.max));
    basics.gender = spec.genders[pick(spec.genders)].label;
    basics.home_area = homes[rng.index(homes.size())];
    return basics;
}

ResidentProfile generate_profile(const std::string& id, const Basics& basics,
                                 const std::vector<ResidentProfile>& prior, Gateway& gateway) {
    std::vector<std::string> used_occupations;
    std::vector<std::string> used_hobbies;
    std::set<std::string> taken;
    std::set<std::string> seen_hobbies;
    for (const auto& p : prior) {
        used_occupations.push_back(p.occupation);
        taken.insert(lower(p.occupation));
        for (const auto& h : p.hobbies) {
            if (seen_hobbies.insert(lower(h)).second) used_hobbies.push_back(h);
        }
    }

    ResidentProfile profile;
    profile.id = id;
    profile.age = basics.age;
    profile.gender = basics.gender;
    profile.home_area = basics.home_area;

    const std::string header = basics_block(id, basics);

    // Step 1: personality.
    {
        auto request = make_request("profile.personality", kSystemPrompt,
                                    header + "Describe this resident's personality in one or two sentences.");
        profile.personality = require_text(gateway.complete(request).text, id, "personality");
    }

    // Step 2: occupation, avoiding those already taken.
    {
        const std::string avoid = "Avoid these occupations already held by other residents: [" +
                                  join(used_occupations) + "]\n";
        std::string prompt = header + "Personality: " + profile.personality + "\n" + avoid +
                             "State this resident's occupation in a few words (retired residents may give "
                             "their former occupation, e.g. \"retired nurse\").";
        std::string occupation = require_text(
            gateway.complete(make_request("profile.occupation", kSystemPrompt, prompt)).text, id, "occupation");
        for (int retry = 0; retry < kOccupationRetries && taken.count(lower(occupation)); ++retry) {
            const std::string again = prompt + "\n\"" + occupation +
                                      "\" is already taken by another resident; choose a different occupation.";
            occupation = require_text(
                gateway.complete(make_request("profile.occupation", kSystemPrompt, again)).text, id, "occupation");
        }
        if (taken.count(lower(occupation))) {
            occupation += " (" + id + ")";
        }
        profile.occupation = occupation;
    }

    // Step 3: hobbies, lifestyle, pursuits.
    {
        std::string prompt = header + "Personality: " + profile.personality + "\nOccupation: " +
                             profile.occupation + "\nAvoid repeating these hobbies of other residents: [" +
                             join(used_hobbies) + "]\n" +
                             "Give this resident's hobbies, daily lifestyle and life pursuits. Reply as JSON: "
                             "{\"hobbies\": [\"...\"], \"lifestyle\": \"...\", \"pursuits\": \"...\"}";
        const auto reply = gateway.complete_structured(
            make_request("profile.lifestyle", kSystemPrompt, prompt),
            Schema::object({{"hobbies", Schema::array(Schema::string())},
                            {"lifestyle", Schema::string()},
                            {"pursuits", Schema::string()}}));
        for (const auto& h : reply.at("hobbies")) {
            auto hobby = trim(h.get<std::string>());
            if (!hobby.empty()) profile.hobbies.push_back(std::move(hobby));
        }
        if (profile.hobbies.empty()) {
            throw Error(kModule, "EmptyField", id + ".hobbies");
        }
        profile.lifestyle = require_text(reply.at("lifestyle").get<std::string>(), id, "lifestyle");
        profile.pursuits = require_text(reply.at("pursuits").get<std::string>(), id, "pursuits");
    }
    return profile;
}

std::vector<ResidentProfile> build_population(std::size_t n, const DemographicSpec& spec, const Region& region,
                                              Gateway& gateway, Rng& rng) {
    if (n == 0) {
        throw Error(kModule, "InvalidCount", "0");
    }
    validate_demographics(spec);
    std::vector<ResidentProfile> population;
    population.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const std::string id = "R_" + std::to_string(i);
        try {
            const Basics basics = sample_basics(spec, region, rng);
            population.push_back(generate_profile(id, basics, population, gateway));
        } catch (const Error& e) {
            throw Error(e.module(), e.variant(), id + ": " + (e.detail().empty() ? e.what() : e.detail()));
        }
    }
    return population;
}

nlohmann::json to_json(const ResidentProfile& p) {
    return {{"id", p.id},           {"age", p.age},
            {"gender", p.gender},   {"personality", p.personality},
            {"occupation", p.occupation}, {"hobbies", p.hobbies},
            {"lifestyle", p.lifestyle},   {"pursuits", p.pursuits},
            {"home_area", p.home_area}};
}

ResidentProfile profile_from_json(const nlohmann::json& j) {
    ResidentProfile p;
    p.id = j.at("id").get<std::string>();
    p.age = j.at("age").get<int>();
    p.gender = j.at("gender").get<std::string>();
    p.personality = j.at("personality").get<std::string>();
    p.occupation = j.at("occupation").get<std::string>();
    p.hobbies = j.at("hobbies").get<std::vector<std::string>>();
    p.lifestyle = j.at("lifestyle").get<std::string>();
    p.pursuits = j.at("pursuits").get<std::string>();
    p.home_area = j.at("home_area").get<std::string>();
    return p;
}

nlohmann::json population_to_json(const std::vector<ResidentProfile>& population) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : population) out.push_back(to_json(p));
    return out;
}

std::vector<ResidentProfile> population_from_json(const nlohmann::json& j) {
    std::vector<ResidentProfile> out;
    try {
        for (const auto& item : j) out.push_back(profile_from_json(item));
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "MalformedPopulation", e.what());
    }
    return out;
}

std::vector<ResidentProfile> load_population(const std::filesystem::path& path, const Region& region) {
    auto population = population_from_json(io::read_json(path));
    if (population.empty()) {
        throw Error(kModule, "MalformedPopulation", "empty population");
    }
    std::set<std::string> ids;
    for (const auto& p : population) {
        if (!ids.insert(p.id).second) {
            throw Error(kModule, "MalformedPopulation", "duplicate id " + p.id);
        }
        const auto index = region.index_of(p.home_area);
        if (!index || region.areas()[*index].land_use != LandUse::Residential) {
            throw Error(kModule, "NonResidentialHome", p.id);
        }
    }
    return population;
}

} // namespace cup
