#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cup {

enum class LandUse {
    Residential,
    Commercial,
    Office,
    School,
    Hospital,
    Clinic,
    Park,
    OpenSpace,
    Recreation,
    Vacant,
};

inline constexpr std::array<LandUse, 10> kAllLandUses = {
    LandUse::Residential, LandUse::Commercial, LandUse::Office, LandUse::School,    LandUse::Hospital,
    LandUse::Clinic,      LandUse::Park,       LandUse::OpenSpace, LandUse::Recreation, LandUse::Vacant,
};

// Uses a planner may assign (everything except Residential and Vacant).
inline constexpr std::array<LandUse, 8> kServiceLandUses = {
    LandUse::Commercial, LandUse::Office,    LandUse::School,     LandUse::Hospital,
    LandUse::Clinic,     LandUse::Park,      LandUse::OpenSpace,  LandUse::Recreation,
};

std::string_view to_string(LandUse use);

// Accepts the canonical names plus loose spellings ("open space", "open_space", "PARK").
std::optional<LandUse> parse_land_use(std::string_view text);

// Greening set: Park, OpenSpace.
bool is_greening(LandUse use);

// Essential-service categories used for accessibility.
enum class ServiceCategory { Commercial, School, Health, Green, Recreation };

inline constexpr std::array<ServiceCategory, 5> kServiceCategories = {
    ServiceCategory::Commercial, ServiceCategory::School, ServiceCategory::Health,
    ServiceCategory::Green,      ServiceCategory::Recreation,
};

std::string_view to_string(ServiceCategory category);
std::optional<ServiceCategory> category_of(LandUse use);
std::optional<ServiceCategory> parse_category(std::string_view text);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double euclidean(Point a, Point b);

struct Extent {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    bool contains(Point p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
};

struct Area {
    std::string id;
    Point centroid;
    double size_m2 = 0.0;
    LandUse land_use = LandUse::Vacant; // initial land-use
    bool fixed = false;
};

class Region {
public:
    Region() = default;
    Region(std::string name, Extent extent, std::vector<Area> areas);

    const std::string& name() const { return name_; }
    const Extent& extent() const { return extent_; }
    const std::vector<Area>& areas() const { return areas_; }
    std::size_t size() const { return areas_.size(); }

    // Index lookup; nullopt for unknown ids.
    std::optional<std::size_t> index_of(std::string_view id) const;
    const Area& area(std::string_view id) const; // throws UnknownArea

    std::vector<std::string> residential_ids() const;

    // Area whose centroid is nearest to p; ties resolve to the earlier area.
    const Area& nearest(Point p) const;

private:
    std::string name_;
    Extent extent_;
    std::vector<Area> areas_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Throws cup::Error: DuplicateAreaId, NonPositiveSize, CentroidOutOfExtent,
// ResidentialNotFixed, EmptyRegion.
void validate_region(const Region& region);

struct UrbanPlan {
    int iteration = 0;
    std::map<std::string, LandUse> assignment;

    LandUse at(const std::string& id) const;
    bool operator==(const UrbanPlan&) const = default;
};

struct AreaChange {
    std::string area;
    LandUse from;
    LandUse to;
    bool operator==(const AreaChange&) const = default;
};

struct PlanDiff {
    std::vector<AreaChange> changes;
    bool empty() const { return changes.empty(); }
};

using Assignment = std::pair<std::string, LandUse>;

UrbanPlan init_plan(const Region& region);

// Totality and residential permanence. Throws IncompletePlan, UnknownArea,
// FixedAreaReassignment.
void validate_plan(const Region& region, const UrbanPlan& plan);

// Returns a copy with the changes applied; iteration is left as-is.
// Throws UnknownArea, FixedAreaReassignment.
UrbanPlan apply_assignments(const Region& region, const UrbanPlan& plan, const std::vector<Assignment>& changes);

// Throws RegionMismatch when the plans cover different area sets.
PlanDiff diff(const UrbanPlan& before, const UrbanPlan& after);

double distance(const Region& region, std::string_view a, std::string_view b);

// One line per area: "a_7: Park (2500 m2)".
std::string describe_plan(const Region& region, const UrbanPlan& plan);

// JSON persistence.
void to_json(nlohmann::json& j, const Area& area);
nlohmann::json region_to_json(const Region& region);
Region region_from_json(const nlohmann::json& j);
Region load_region(const std::filesystem::path& path);

nlohmann::json plan_to_json(const UrbanPlan& plan);
UrbanPlan plan_from_json(const nlohmann::json& j);
UrbanPlan load_plan(const std::filesystem::path& path);

nlohmann::json diff_to_json(const PlanDiff& diff);

} // namespace cup
