#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/plan.hpp"
#include "cup/rng.hpp"

namespace cup {

class Gateway;

struct AgeBucket {
    int min = 0;
    int max = 0;
    double p = 0.0;
};

struct GenderCategory {
    std::string label;
    double p = 0.0;
};

struct DemographicSpec {
    std::vector<AgeBucket> age_buckets;
    std::vector<GenderCategory> genders;

    static DemographicSpec from_json(const nlohmann::json& j);
    static DemographicSpec load(const std::filesystem::path& path);
};

// Probabilities sum to 1 within 1e-9, buckets well-formed and non-overlapping.
// Throws InvalidDemographics.
void validate_demographics(const DemographicSpec& spec);

struct Basics {
    int age = 0;
    std::string gender;
    std::string home_area;
};

struct ResidentProfile {
    std::string id; // "R_i"
    int age = 0;
    std::string gender;
    std::string personality;
    std::string occupation;
    std::vector<std::string> hobbies;
    std::string lifestyle;
    std::string pursuits;
    std::string home_area;

    bool operator==(const ResidentProfile&) const = default;
};

// Header line used in every resident-bound prompt, e.g. "Resident [R_19]".
std::string resident_marker(const std::string& id);

// Multi-line persona description for prompts.
std::string describe_profile(const ResidentProfile& profile);

// Throws NoResidentialArea.
Basics sample_basics(const DemographicSpec& spec, const Region& region, Rng& rng);

// Chain: personality -> occupation -> hobbies/lifestyle/pursuits. Occupations
// and hobbies of `prior` form the avoid-list. Throws EmptyField; gateway errors propagate.
ResidentProfile generate_profile(const std::string& id, const Basics& basics,
                                 const std::vector<ResidentProfile>& prior, Gateway& gateway);

// Sequential generation of R_1..R_n. Errors are rethrown naming the failing resident.
std::vector<ResidentProfile> build_population(std::size_t n, const DemographicSpec& spec, const Region& region,
                                              Gateway& gateway, Rng& rng);

nlohmann::json to_json(const ResidentProfile& profile);
ResidentProfile profile_from_json(const nlohmann::json& j);
nlohmann::json population_to_json(const std::vector<ResidentProfile>& population);
std::vector<ResidentProfile> population_from_json(const nlohmann::json& j);
std::vector<ResidentProfile> load_population(const std::filesystem::path& path, const Region& region);

} // namespace cup
