#include "cup/plan.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "cup/error.hpp"
#include "cup/io.hpp"

namespace cup {

namespace {

constexpr const char* kModule = "plan-model";

std::string normalize_token(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

std::string format_number(double value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

} // namespace

std::string_view to_string(LandUse use) {
    switch (use) {
    case LandUse::Residential: return "Residential";
    case LandUse::Commercial: return "Commercial";
    case LandUse::Office: return "Office";
    case LandUse::School: return "School";
    case LandUse::Hospital: return "Hospital";
    case LandUse::Clinic: return "Clinic";
    case LandUse::Park: return "Park";
    case LandUse::OpenSpace: return "OpenSpace";
    case LandUse::Recreation: return "Recreation";
    case LandUse::Vacant: return "Vacant";
    }
    return "Vacant";
}

std::optional<LandUse> parse_land_use(std::string_view text) {
    const std::string key = normalize_token(text);
    for (LandUse use : kAllLandUses) {
        if (normalize_token(to_string(use)) == key) {
            return use;
        }
    }
    return std::nullopt;
}

bool is_greening(LandUse use) {
    return use == LandUse::Park || use == LandUse::OpenSpace;
}

std::string_view to_string(ServiceCategory category) {
    switch (category) {
    case ServiceCategory::Commercial: return "Commercial";
    case ServiceCategory::School: return "School";
    case ServiceCategory::Health: return "Health";
    case ServiceCategory::Green: return "Green";
    case ServiceCategory::Recreation: return "Recreation";
    }
    return "Commercial";
}

std::optional<ServiceCategory> category_of(LandUse use) {
    switch (use) {
    case LandUse::Commercial: return ServiceCategory::Commercial;
    case LandUse::School: return ServiceCategory::School;
    case LandUse::Hospital:
    case LandUse::Clinic: return ServiceCategory::Health;
    case LandUse::Park:
    case LandUse::OpenSpace: return ServiceCategory::Green;
    case LandUse::Recreation: return ServiceCategory::Recreation;
    default: return std::nullopt;
    }
}

std::optional<ServiceCategory> parse_category(std::string_view text) {
    const std::string key = normalize_token(text);
    for (ServiceCategory category : kServiceCategories) {
        if (normalize_token(to_string(category)) == key) {
            return category;
        }
    }
    if (key == "greenery" || key == "greening" || key == "greenspace") {
        return ServiceCategory::Green;
    }
    if (key == "healthcare") {
        return ServiceCategory::Health;
    }
    return std::nullopt;
}

double euclidean(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

Region::Region(std::string name, Extent extent, std::vector<Area> areas)
    : name_(std::move(name)), extent_(extent), areas_(std::move(areas)) {
    for (std::size_t i = 0; i < areas_.size(); ++i) {
        index_.emplace(areas_[i].id, i); // first occurrence wins; duplicates caught by validate_region
    }
}

std::optional<std::size_t> Region::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Area& Region::area(std::string_view id) const {
    auto index = index_of(id);
    if (!index) {
        throw Error(kModule, "UnknownArea", std::string(id));
    }
    return areas_[*index];
}

std::vector<std::string> Region::residential_ids() const {
    std::vector<std::string> ids;
    for (const Area& a : areas_) {
        if (a.land_use == LandUse::Residential) {
            ids.push_back(a.id);
        }
    }
    return ids;
}

const Area& Region::nearest(Point p) const {
    std::size_t best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < areas_.size(); ++i) {
        const double d = euclidean(p, areas_[i].centroid);
        if (d < best_distance) {
            best_distance = d;
            best = i;
        }
    }
    return areas_.at(best);
}

void validate_region(const Region& region) {
    if (region.areas().empty()) {
        throw Error(kModule, "EmptyRegion", region.name());
    }
    std::set<std::string> seen;
    for (const Area& a : region.areas()) {
        if (!seen.insert(a.id).second) {
            throw Error(kModule, "DuplicateAreaId", a.id);
        }
        if (!(a.size_m2 > 0.0)) {
            throw Error(kModule, "NonPositiveSize", a.id);
        }
        if (!region.extent().contains(a.centroid)) {
            throw Error(kModule, "CentroidOutOfExtent", a.id);
        }
        if (a.land_use == LandUse::Residential && !a.fixed) {
            throw Error(kModule, "ResidentialNotFixed", a.id);
        }
    }
}

LandUse UrbanPlan::at(const std::string& id) const {
    auto it = assignment.find(id);
    if (it == assignment.end()) {
        throw Error(kModule, "UnknownArea", id);
    }
    return it->second;
}

UrbanPlan init_plan(const Region& region) {
    validate_region(region);
    UrbanPlan plan;
    plan.iteration = 0;
    for (const Area& a : region.areas()) {
        plan.assignment[a.id] = a.fixed ? a.land_use : LandUse::Vacant;
    }
    return plan;
}

void validate_plan(const Region& region, const UrbanPlan& plan) {
    for (const auto& [id, use] : plan.assignment) {
        if (!region.index_of(id)) {
            throw Error(kModule, "UnknownArea", id);
        }
    }
    for (const Area& a : region.areas()) {
        auto it = plan.assignment.find(a.id);
        if (it == plan.assignment.end()) {
            throw Error(kModule, "IncompletePlan", a.id);
        }
        if (a.fixed && it->second != a.land_use) {
            throw Error(kModule, "FixedAreaReassignment", a.id);
        }
    }
}

UrbanPlan apply_assignments(const Region& region, const UrbanPlan& plan, const std::vector<Assignment>& changes) {
    UrbanPlan next = plan;
    for (const auto& [id, use] : changes) {
        const Area& a = region.area(id);
        if (a.fixed && use != a.land_use) {
            throw Error(kModule, "FixedAreaReassignment", id);
        }
        next.assignment[id] = use;
    }
    return next;
}

PlanDiff diff(const UrbanPlan& before, const UrbanPlan& after) {
    if (before.assignment.size() != after.assignment.size()) {
        throw Error(kModule, "RegionMismatch");
    }
    PlanDiff out;
    auto a = before.assignment.begin();
    auto b = after.assignment.begin();
    for (; a != before.assignment.end(); ++a, ++b) {
        if (a->first != b->first) {
            throw Error(kModule, "RegionMismatch", a->first);
        }
        if (a->second != b->second) {
            out.changes.push_back({a->first, a->second, b->second});
        }
    }
    return out;
}

double distance(const Region& region, std::string_view a, std::string_view b) {
    return euclidean(region.area(a).centroid, region.area(b).centroid);
}

std::string describe_plan(const Region& region, const UrbanPlan& plan) {
    std::ostringstream out;
    for (const Area& a : region.areas()) {
        out << a.id << ": " << to_string(plan.at(a.id)) << " (" << format_number(a.size_m2) << " m2"
            << (a.fixed ? ", fixed" : "") << ")\n";
    }
    return out.str();
}

void to_json(nlohmann::json& j, const Area& area) {
    j = nlohmann::json{{"id", area.id},
                       {"x", area.centroid.x},
                       {"y", area.centroid.y},
                       {"size_m2", area.size_m2},
                       {"land_use", std::string(to_string(area.land_use))},
                       {"fixed", area.fixed}};
}

nlohmann::json region_to_json(const Region& region) {
    nlohmann::json areas = nlohmann::json::array();
    for (const Area& a : region.areas()) {
        areas.push_back(a);
    }
    return {{"name", region.name()},
            {"extent",
             {{"min_x", region.extent().min_x},
              {"min_y", region.extent().min_y},
              {"max_x", region.extent().max_x},
              {"max_y", region.extent().max_y}}},
            {"areas", areas}};
}

Region region_from_json(const nlohmann::json& j) {
    try {
        Extent extent{j.at("extent").at("min_x").get<double>(), j.at("extent").at("min_y").get<double>(),
                      j.at("extent").at("max_x").get<double>(), j.at("extent").at("max_y").get<double>()};
        std::vector<Area> areas;
        for (const auto& item : j.at("areas")) {
            Area a;
            a.id = item.at("id").get<std::string>();
            a.centroid = {item.at("x").get<double>(), item.at("y").get<double>()};
            a.size_m2 = item.at("size_m2").get<double>();
            const auto use_text = item.at("land_use").get<std::string>();
            auto use = parse_land_use(use_text);
            if (!use) {
                throw Error(kModule, "UnknownLandUse", use_text);
            }
            a.land_use = *use;
            a.fixed = item.value("fixed", a.land_use == LandUse::Residential);
            areas.push_back(std::move(a));
        }
        return Region(j.at("name").get<std::string>(), extent, std::move(areas));
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "MalformedRegion", e.what());
    }
}

Region load_region(const std::filesystem::path& path) {
    Region region = region_from_json(io::read_json(path));
    validate_region(region);
    return region;
}

nlohmann::json plan_to_json(const UrbanPlan& plan) {
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto& [id, use] : plan.assignment) {
        assignment[id] = std::string(to_string(use));
    }
    return {{"iteration", plan.iteration}, {"assignment", assignment}};
}

UrbanPlan plan_from_json(const nlohmann::json& j) {
    try {
        UrbanPlan plan;
        plan.iteration = j.at("iteration").get<int>();
        for (const auto& [id, value] : j.at("assignment").items()) {
            const auto text = value.get<std::string>();
            auto use = parse_land_use(text);
            if (!use) {
                throw Error(kModule, "UnknownLandUse", text);
            }
            plan.assignment[id] = *use;
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "MalformedPlan", e.what());
    }
}

UrbanPlan load_plan(const std::filesystem::path& path) {
    return plan_from_json(io::read_json(path));
}

nlohmann::json diff_to_json(const PlanDiff& d) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : d.changes) {
        out.push_back({{"area", c.area}, {"from", std::string(to_string(c.from))}, {"to", std::string(to_string(c.to))}});
    }
    return out;
}

} // namespace cup
