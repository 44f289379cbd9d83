#include "cup/living.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cup/error.hpp"
#include "cup/gateway.hpp"
#include "cup/io.hpp"

namespace cup {

namespace {

constexpr const char* kModule = "living-sim";

const char* kDecideSystem =
    "You are a resident living in an urban community. Stay in character, act according to your profile, "
    "and decide your next mobility and social behavior.";

std::string clock(int tick) {
    const int minutes = ((tick % 1440) + 1440) % 1440;
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%02d:%02d", minutes / 60, minutes % 60);
    return buffer;
}

std::string meters(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.0f m", value);
    return buffer;
}

std::string trimmed(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::string lowered(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    return text;
}

void add_memory(ResidentState& resident, MemoryKind kind, std::string text, int now, int importance) {
    resident.memory->add({kind, std::move(text), now, now, importance});
}

const Schema& decision_schema() {
    static const Schema schema = Schema::object({
        {"intent", Schema::string(), false},
        {"target", Schema::string()},
        {"dwell", Schema::integer()},
        {"delay", Schema::integer(), false},
        {"social", Schema::any(), false},
    });
    return schema;
}

std::optional<SocialAction> parse_social(const nlohmann::json& reply, std::vector<std::string>& problems) {
    if (!reply.contains("social") || reply.at("social").is_null()) {
        return std::nullopt;
    }
    const auto& social = reply.at("social");
    if (!social.is_object()) {
        problems.push_back("social action is not an object");
        return std::nullopt;
    }
    const std::string type = lowered(social.value("type", std::string{}));
    if (type.empty() || type == "none") {
        return std::nullopt;
    }
    const std::string text = social.contains("text") && social.at("text").is_string()
                                 ? trimmed(social.at("text").get<std::string>())
                                 : std::string{};
    if (text.empty()) {
        problems.push_back("social action without text");
        return std::nullopt;
    }
    if (type == "post") {
        return SocialAction{SocialAction::Kind::Post, {}, text};
    }
    if (type == "comment") {
        if (!social.contains("post_id") || !social.at("post_id").is_string()) {
            problems.push_back("comment without post_id");
            return std::nullopt;
        }
        return SocialAction{SocialAction::Kind::Comment, social.at("post_id").get<std::string>(), text};
    }
    problems.push_back("unknown social action type '" + type + "'");
    return std::nullopt;
}

std::string describe_action(const ActionPlan& plan, const UrbanPlan& urban) {
    std::ostringstream out;
    if (plan.degraded) {
        out << "Stayed at " << plan.target << " for " << plan.dwell << " min (degraded decision)";
        return out.str();
    }
    const auto use = urban.assignment.count(plan.target) ? to_string(urban.at(plan.target)) : "unknown";
    out << "Decided to " << (plan.intent.empty() ? "move" : plan.intent) << ": go to " << plan.target << " (" << use
        << ") for " << plan.dwell << " min";
    if (plan.social) {
        if (plan.social->kind == SocialAction::Kind::Post) {
            out << "; posted \"" << plan.social->text << "\"";
        } else {
            out << "; commented on [" << plan.social->post_id << "] \"" << plan.social->text << "\"";
        }
    }
    return out.str();
}

void sync_in_place(Environment& env, const std::map<std::string, std::string>& locations,
                   std::vector<EmittedSocial> socials, const std::vector<std::string>& population_ids,
                   std::vector<std::string>* warnings) {
    for (const auto& id : population_ids) {
        if (!locations.count(id)) {
            throw Error(kModule, "MissingResidentLocation", id);
        }
    }
    env.tick += 1;
    env.physical = locations;
    std::stable_sort(socials.begin(), socials.end(), [](const EmittedSocial& a, const EmittedSocial& b) {
        return a.resident_index < b.resident_index;
    });
    for (auto& social : socials) {
        if (social.action.kind == SocialAction::Kind::Post) {
            Post post;
            post.id = "p_" + std::to_string(env.feed.posts.size() + 1);
            post.author = social.resident;
            post.tick = env.tick;
            post.text = std::move(social.action.text);
            env.feed.posts.push_back(std::move(post));
            continue;
        }
        auto it = std::find_if(env.feed.posts.begin(), env.feed.posts.end(),
                               [&](const Post& p) { return p.id == social.action.post_id; });
        if (it == env.feed.posts.end()) {
            if (warnings) {
                warnings->push_back("t=" + std::to_string(env.tick) + " " + social.resident +
                                    ": comment on unknown post " + social.action.post_id + " dropped");
            }
            continue;
        }
        it->comments.push_back({social.resident, env.tick, std::move(social.action.text)});
    }
}

} // namespace

// ---------------------------------------------------------------------------

SimConfig SimConfig::from_json(const nlohmann::json& j) {
    SimConfig c;
    c.ticks = j.value("T", j.value("ticks", c.ticks));
    c.decision_horizon = j.value("decision_horizon", c.decision_horizon);
    c.perceive_feed_k = j.value("perceive_feed_k", c.perceive_feed_k);
    c.speed = j.value("speed", c.speed);
    c.decide_memories = j.value("decide_memories", c.decide_memories);
    c.reflect_threshold = j.value("reflect_threshold", c.reflect_threshold);
    validate_sim_config(c);
    return c;
}

nlohmann::json SimConfig::to_json() const {
    return {{"T", ticks},
            {"decision_horizon", decision_horizon},
            {"perceive_feed_k", perceive_feed_k},
            {"speed", speed},
            {"decide_memories", decide_memories},
            {"reflect_threshold", reflect_threshold}};
}

void validate_sim_config(const SimConfig& c) {
    if (c.ticks <= 0 || c.decision_horizon <= 0 || c.perceive_feed_k <= 0 || !(c.speed > 0.0) ||
        c.decide_memories == 0 || c.reflect_threshold <= 0) {
        throw Error(kModule, "InvalidSimConfig");
    }
}

const Post* SocialFeed::find(const std::string& id) const {
    for (const auto& p : posts) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

std::string Observation::render() const {
    std::ostringstream out;
    out << "Snapshot tick: " << tick << " (" << clock(tick) << ")\n";
    out << "You are at " << area << " (" << to_string(land_use) << ").\n";
    out << "Nearby areas:";
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        out << (i == 0 ? " " : ", ") << neighbors[i].area << " (" << to_string(neighbors[i].land_use) << ", "
            << meters(neighbors[i].distance) << ")";
    }
    out << "\n";
    out << "People here: ";
    if (co_located.empty()) {
        out << "nobody else";
    }
    for (std::size_t i = 0; i < co_located.size(); ++i) {
        out << (i == 0 ? "" : ", ") << co_located[i];
    }
    out << "\n";
    if (posts.empty()) {
        out << "No new posts on the neighborhood feed.\n";
    } else {
        out << "New posts on the neighborhood feed:\n";
        for (const auto& p : posts) {
            out << "- [" << p.id << "] " << p.author << " at t=" << p.tick << ": " << p.text << "\n";
            for (const auto& c : p.comments) {
                out << "    - " << c.author << " at t=" << c.tick << ": " << c.text << "\n";
            }
        }
    }
    return out.str();
}

ResidentState make_resident_state(const ResidentProfile& profile, MemoryPool& memory, const Region& region,
                                  int clock_offset) {
    ResidentState state;
    state.clock_offset = clock_offset;
    state.profile = &profile;
    state.memory = &memory;
    const Area& home = region.area(profile.home_area);
    state.position = home.centroid;
    state.area = home.id;
    state.plan.target = home.id;
    return state;
}

Observation perceive(ResidentState& resident, const Environment& env, const UrbanPlan& plan, const Region& region,
                     const SimConfig& config) {
    const std::string& self = resident.profile->id;
    auto here = env.physical.find(self);
    if (here == env.physical.end()) {
        throw Error(kModule, "MissingResidentLocation", self);
    }
    const int now = resident.clock_offset + env.tick + 1;

    Observation obs;
    obs.tick = env.tick;
    obs.area = here->second;
    obs.land_use = plan.at(obs.area);

    const Point origin = region.area(obs.area).centroid;
    std::vector<NeighborView> others;
    for (const Area& a : region.areas()) {
        if (a.id == obs.area) continue;
        others.push_back({a.id, plan.at(a.id), euclidean(origin, a.centroid)});
    }
    std::stable_sort(others.begin(), others.end(),
                     [](const NeighborView& a, const NeighborView& b) { return a.distance < b.distance; });
    others.resize(std::min<std::size_t>(3, others.size()));
    obs.neighbors = std::move(others);

    for (const auto& [id, area] : env.physical) {
        if (id != self && area == obs.area) obs.co_located.push_back(id);
    }

    std::vector<std::size_t> unseen;
    for (std::size_t i = 0; i < env.feed.posts.size(); ++i) {
        const auto& p = env.feed.posts[i];
        if (p.author != self && !resident.seen_posts.count(p.id)) unseen.push_back(i);
    }
    std::stable_sort(unseen.begin(), unseen.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = env.feed.posts[a];
        const auto& pb = env.feed.posts[b];
        if (pa.tick != pb.tick) return pa.tick > pb.tick;
        return a > b;
    });
    unseen.resize(std::min<std::size_t>(static_cast<std::size_t>(config.perceive_feed_k), unseen.size()));
    for (std::size_t index : unseen) {
        obs.posts.push_back(env.feed.posts[index]);
        resident.seen_posts.insert(env.feed.posts[index].id);
    }

    // Notable items become event memories.
    if (obs.area != resident.last_perceived_area) {
        add_memory(resident, MemoryKind::Event,
                   "I was at " + obs.area + " (" + std::string(to_string(obs.land_use)) + ") at " + clock(now),
                   now, kEventImportance);
        resident.last_perceived_area = obs.area;
        resident.last_co_located.clear();
    }
    std::set<std::string> present(obs.co_located.begin(), obs.co_located.end());
    for (const auto& other : obs.co_located) {
        if (!resident.last_co_located.count(other)) {
            add_memory(resident, MemoryKind::Event, "I met " + other + " at " + obs.area, now, kEventImportance);
        }
    }
    resident.last_co_located = std::move(present);
    for (const auto& p : obs.posts) {
        std::string text = p.author + " posted [" + p.id + "] on the neighborhood feed: " + p.text;
        if (!p.comments.empty()) text += " (" + std::to_string(p.comments.size()) + " comments)";
        add_memory(resident, MemoryKind::Event, std::move(text), now, kEventImportance);
    }
    return obs;
}

Decision decide(ResidentState& resident, const Observation& observation, const UrbanPlan& plan,
                const Region& region, Gateway& gateway, int tick, const SimConfig& config) {
    const ResidentProfile& profile = *resident.profile;
    const std::string query = observation.render() + " " + profile.pursuits + " " + profile.lifestyle;
    const int now = resident.clock_offset + tick;
    const auto memories = resident.memory->retrieve(query, config.decide_memories, now);

    std::ostringstream prompt;
    prompt << describe_profile(profile) << "\n"
           << "Current tick: " << tick << " (" << clock(tick) << ")\n\n"
           << "Relevant memories:\n"
           << (memories.empty() ? "- none yet\n" : render_memories(memories)) << "\n"
           << "What you observe:\n"
           << observation.render() << "\n"
           << "Areas in the region:\n";
    const Point origin = region.area(observation.area).centroid;
    for (const Area& a : region.areas()) {
        prompt << "- " << a.id << ": " << to_string(plan.at(a.id)) << ", " << meters(euclidean(origin, a.centroid))
               << " away" << (a.id == profile.home_area ? " (home)" : "") << "\n";
    }
    prompt << "\nDecide your next action. Reply as JSON: {\"intent\": \"...\", \"target\": \"<area id, 'home' or "
              "'stay'>\", \"dwell\": <minutes to stay after arriving>, \"delay\": <minutes before leaving, optional>, "
              "\"social\": null or {\"type\": \"post\", \"text\": \"...\"} or {\"type\": \"comment\", \"post_id\": "
              "\"...\", \"text\": \"...\"}}";

    ChatRequest request = make_request("live.decide", kDecideSystem, prompt.str());
    request.tick = tick;

    Decision decision;
    std::string failure;
    try {
        const auto reply = gateway.complete_structured(request, decision_schema());
        ActionPlan action;
        action.intent = reply.contains("intent") && reply.at("intent").is_string()
                            ? trimmed(reply.at("intent").get<std::string>())
                            : std::string{};
        const std::string raw_target = trimmed(reply.at("target").get<std::string>());
        const std::string target = lowered(raw_target);
        if (target == "home") {
            action.target = profile.home_area;
        } else if (target.empty() || target == "stay" || target == "here") {
            action.target = resident.area;
        } else {
            action.target = raw_target;
        }
        action.dwell = reply.at("dwell").get<int>();
        const int delay = reply.contains("delay") && reply.at("delay").is_number() ? reply.at("delay").get<int>() : 0;
        action.depart = tick + delay;
        std::vector<std::string> problems;
        action.social = parse_social(reply, problems);

        if (!region.index_of(action.target)) {
            failure = "InvalidAction: unknown target " + raw_target;
        } else if (action.dwell < 1) {
            failure = "InvalidAction: dwell " + std::to_string(action.dwell);
        } else if (delay < 0) {
            failure = "InvalidAction: negative delay";
        } else {
            decision.plan = std::move(action);
            if (!problems.empty()) {
                decision.warning = "social action dropped: " + problems.front();
            }
        }
    } catch (const Error& e) {
        failure = std::string("GatewayFailure: ") + e.what();
    }

    if (!failure.empty()) {
        decision.plan = ActionPlan{"stay in place", resident.area, tick, config.decision_horizon, std::nullopt, true};
        decision.warning = "degraded decision (" + failure + ")";
    }
    add_memory(resident, MemoryKind::Behavior, describe_action(decision.plan, plan), now, kBehaviorImportance);
    return decision;
}

StepResult step_agent(ResidentState& resident, int tick, const Environment& env_prev, const UrbanPlan& plan,
                      const Region& region, Gateway& gateway, const SimConfig& config) {
    if (env_prev.tick != tick - 1) {
        throw Error(kModule, "SnapshotOutOfOrder", std::to_string(env_prev.tick) + " vs " + std::to_string(tick));
    }
    StepResult result;
    const std::size_t memory_before = resident.memory->size();

    const bool dwelling = resident.mode == ResidentState::Mode::Dwelling;
    const bool decision_point =
        dwelling && (tick >= resident.dwell_until || tick - resident.last_decision >= config.decision_horizon);

    if (decision_point) {
        Observation obs = perceive(resident, env_prev, plan, region, config);
        Decision decision = decide(resident, obs, plan, region, gateway, tick, config);
        if (decision.warning) {
            result.warnings.push_back(*decision.warning);
        }
        resident.last_decision = tick;
        resident.plan = decision.plan;
        resident.social_emitted = !resident.plan.social.has_value();
        if (resident.plan.depart > tick) {
            resident.mode = ResidentState::Mode::Waiting;
        } else if (resident.plan.target == resident.area) {
            resident.mode = ResidentState::Mode::Dwelling;
            resident.dwell_until = tick + resident.plan.dwell;
        } else {
            resident.mode = ResidentState::Mode::Traveling;
        }
        result.observation = std::move(obs);
        result.decision = resident.plan;
    }

    if (resident.mode == ResidentState::Mode::Waiting && tick >= resident.plan.depart) {
        resident.mode = ResidentState::Mode::Traveling;
    }

    if (!resident.social_emitted && tick >= resident.plan.depart) {
        result.social = resident.plan.social;
        resident.social_emitted = true;
    }

    if (resident.mode == ResidentState::Mode::Traveling) {
        const Area& target = region.area(resident.plan.target);
        const double remaining = euclidean(resident.position, target.centroid);
        if (remaining <= config.speed) {
            resident.position = target.centroid;
            resident.area = target.id;
            resident.mode = ResidentState::Mode::Dwelling;
            resident.dwell_until = tick + resident.plan.dwell;
        } else {
            const double f = config.speed / remaining;
            resident.position.x += (target.centroid.x - resident.position.x) * f;
            resident.position.y += (target.centroid.y - resident.position.y) * f;
            resident.area = region.nearest(resident.position).id;
        }
    }

    if (decision_point && resident.memory->should_reflect(config.reflect_threshold)) {
        try {
            resident.memory->reflect(gateway, resident.clock_offset + tick, describe_profile(*resident.profile));
        } catch (const Error& e) {
            result.warnings.push_back(std::string("reflection failed: ") + e.what());
        }
    }

    result.location = resident.area;
    result.memories_added = resident.memory->size() - memory_before;
    return result;
}

Environment sync(const Environment& env_prev, const std::map<std::string, std::string>& locations,
                 std::vector<EmittedSocial> socials, const std::vector<std::string>& population_ids,
                 std::vector<std::string>* warnings) {
    Environment next = env_prev;
    sync_in_place(next, locations, std::move(socials), population_ids, warnings);
    return next;
}

DayLog run_day(const UrbanPlan& plan, const std::vector<ResidentProfile>& population,
               std::vector<MemoryPool>& memories, const Region& region, Gateway& gateway, const SimConfig& config,
               const DayObserver& observer, int clock_offset) {
    validate_sim_config(config);
    if (population.empty()) {
        throw Error(kModule, "EmptyPopulation");
    }
    if (memories.size() != population.size()) {
        throw Error(kModule, "MemoryPoolMismatch", std::to_string(memories.size()));
    }
    validate_plan(region, plan);

    const std::size_t calls_before = gateway.audit().size();
    std::vector<ResidentState> residents;
    std::vector<std::string> ids;
    residents.reserve(population.size());
    Environment env;
    for (std::size_t i = 0; i < population.size(); ++i) {
        residents.push_back(make_resident_state(population[i], memories[i], region, clock_offset));
        ids.push_back(population[i].id);
        env.physical[population[i].id] = population[i].home_area;
    }

    DayLog log;
    log.mobility.reserve(population.size() * static_cast<std::size_t>(config.ticks));
    log.positions.reserve(log.mobility.capacity());

    for (int t = 1; t <= config.ticks; ++t) {
        std::map<std::string, std::string> locations;
        std::vector<EmittedSocial> socials;
        for (std::size_t i = 0; i < residents.size(); ++i) {
            StepResult step = step_agent(residents[i], t, env, plan, region, gateway, config);
            if (step.observation && observer.on_observation) {
                observer.on_observation(t, ids[i], *step.observation);
            }
            if (step.decision && observer.on_decision) {
                observer.on_decision(t, ids[i], *step.decision);
            }
            for (auto& w : step.warnings) {
                log.warnings.push_back("t=" + std::to_string(t) + " " + ids[i] + ": " + w);
            }
            if (step.social) {
                socials.push_back({i, ids[i], std::move(*step.social)});
            }
            log.mobility.push_back({t, ids[i], step.location});
            log.positions.push_back(residents[i].position);
            locations.emplace(ids[i], std::move(step.location));
        }
        sync_in_place(env, locations, std::move(socials), ids, &log.warnings);
    }

    log.feed = std::move(env.feed);
    for (const auto& pool : memories) {
        log.memory_dumps.push_back(pool.dump_jsonl());
    }
    log.gateway_calls = gateway.audit().size() - calls_before;
    return log;
}

nlohmann::json feed_to_json(const SocialFeed& feed) {
    nlohmann::json posts = nlohmann::json::array();
    for (const auto& p : feed.posts) {
        nlohmann::json comments = nlohmann::json::array();
        for (const auto& c : p.comments) {
            comments.push_back({{"author", c.author}, {"tick", c.tick}, {"text", c.text}});
        }
        posts.push_back(
            {{"id", p.id}, {"author", p.author}, {"tick", p.tick}, {"text", p.text}, {"comments", comments}});
    }
    return {{"posts", posts}};
}

SocialFeed feed_from_json(const nlohmann::json& j) {
    SocialFeed feed;
    for (const auto& p : j.at("posts")) {
        Post post{p.at("id").get<std::string>(), p.at("author").get<std::string>(), p.at("tick").get<int>(),
                  p.at("text").get<std::string>(), {}};
        for (const auto& c : p.at("comments")) {
            post.comments.push_back(
                {c.at("author").get<std::string>(), c.at("tick").get<int>(), c.at("text").get<std::string>()});
        }
        feed.posts.push_back(std::move(post));
    }
    return feed;
}

void write_day_log(const DayLog& log, const std::vector<ResidentProfile>& population,
                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "memories");
    std::string mobility;
    mobility.reserve(log.mobility.size() * 48);
    for (const auto& r : log.mobility) {
        mobility += nlohmann::json{{"tick", r.tick}, {"resident", r.resident}, {"area", r.area}}.dump();
        mobility += "\n";
    }
    io::write_text(dir / "mobility.jsonl", mobility);
    io::write_json(dir / "feed.json", feed_to_json(log.feed));
    for (std::size_t i = 0; i < population.size() && i < log.memory_dumps.size(); ++i) {
        io::write_text(dir / "memories" / (population[i].id + ".jsonl"), log.memory_dumps[i]);
    }
}

} // namespace cup
