#include "cup/memory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cup/error.hpp"
#include "cup/gateway.hpp"

namespace cup {

namespace {

constexpr const char* kModule = "memory";

// Sort key quantum; scores closer than this tie.
constexpr double kScoreQuantum = 1e-9;

MemoryKind parse_kind(const std::string& text) {
    if (text == "event") return MemoryKind::Event;
    if (text == "behavior") return MemoryKind::Behavior;
    if (text == "thought") return MemoryKind::Thought;
    throw Error(kModule, "UnknownKind", text);
}

} // namespace

std::string_view to_string(MemoryKind kind) {
    switch (kind) {
    case MemoryKind::Event: return "event";
    case MemoryKind::Behavior: return "behavior";
    case MemoryKind::Thought: return "thought";
    }
    return "event";
}

double score(const MemoryEntry& entry, int now, double relevance, const RetrievalWeights& weights) {
    const int gap = now - entry.last_access;
    return weights.recency * std::pow(weights.decay, gap) + weights.importance * entry.importance / 10.0 +
           weights.relevance * relevance;
}

TermVector::TermVector(std::string_view text) {
    std::map<std::string, int> counts;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            ++counts[token];
            token.clear();
        }
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    terms_.assign(counts.begin(), counts.end());
    double sum = 0.0;
    for (const auto& [term, count] : terms_) {
        sum += static_cast<double>(count) * count;
    }
    norm_ = std::sqrt(sum);
}

double TermVector::cosine(const TermVector& other) const {
    if (norm_ == 0.0 || other.norm_ == 0.0) {
        return 0.0;
    }
    double dot = 0.0;
    auto a = terms_.begin();
    auto b = other.terms_.begin();
    while (a != terms_.end() && b != other.terms_.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            dot += static_cast<double>(a->second) * b->second;
            ++a;
            ++b;
        }
    }
    return std::clamp(dot / (norm_ * other.norm_), 0.0, 1.0);
}

void MemoryPool::add(MemoryEntry entry) {
    if (entry.importance < 1 || entry.importance > 10) {
        throw Error(kModule, "ImportanceOutOfRange", std::to_string(entry.importance));
    }
    if (entry.last_access < entry.created) {
        throw Error(kModule, "InvalidEntry", "last_access precedes created");
    }
    importance_since_reflection_ += entry.importance;
    vectors_.emplace_back(entry.text);
    entries_.push_back(std::move(entry));
}

std::vector<MemoryEntry> MemoryPool::retrieve(std::string_view query, std::size_t k, int now,
                                              const RetrievalWeights& weights) {
    if (k == 0) {
        throw Error(kModule, "InvalidK", "0");
    }
    const TermVector query_vector(query);
    struct Ranked {
        long long key;
        int created;
        std::size_t index;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const double s = score(entries_[i], now, vectors_[i].cosine(query_vector), weights);
        ranked.push_back({std::llround(s / kScoreQuantum), entries_[i].created, i});
    }
    const std::size_t take = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                      [](const Ranked& a, const Ranked& b) {
                          if (a.key != b.key) return a.key > b.key;
                          if (a.created != b.created) return a.created > b.created;
                          return a.index < b.index;
                      });
    std::vector<MemoryEntry> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        auto& entry = entries_[ranked[i].index];
        entry.last_access = std::max(entry.last_access, now);
        out.push_back(entry);
    }
    return out;
}

std::vector<std::string> MemoryPool::reflect(Gateway& gateway, int now, const std::string& speaker) {
    const auto recent = retrieve("what matters most to me about my life in this neighborhood", 10, now);
    std::ostringstream prompt;
    prompt << speaker << "\n"
           << "Current tick: " << now << "\n"
           << "Your most salient memories:\n"
           << render_memories(recent)
           << "What high-level insights (at most 3) can you infer from these memories? "
              "Reply as JSON: {\"thoughts\": [\"...\"]}";
    ChatRequest request = make_request("live.reflect",
                                       "You are a resident of an urban community reflecting on your recent experience.",
                                       prompt.str());
    request.tick = now;
    const auto reply =
        gateway.complete_structured(request, Schema::object({{"thoughts", Schema::array(Schema::string())}}));

    std::vector<std::string> added;
    for (const auto& item : reply.at("thoughts")) {
        if (added.size() == 3) break;
        std::string text = item.get<std::string>();
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        add({MemoryKind::Thought, text, now, now, kThoughtImportance});
        added.push_back(std::move(text));
    }
    importance_since_reflection_ = 0;
    return added;
}

nlohmann::json to_json(const MemoryEntry& e) {
    return {{"kind", std::string(to_string(e.kind))},
            {"text", e.text},
            {"created", e.created},
            {"last_access", e.last_access},
            {"importance", e.importance}};
}

MemoryEntry memory_entry_from_json(const nlohmann::json& j) {
    MemoryEntry e;
    e.kind = parse_kind(j.at("kind").get<std::string>());
    e.text = j.at("text").get<std::string>();
    e.created = j.at("created").get<int>();
    e.last_access = j.at("last_access").get<int>();
    e.importance = j.at("importance").get<int>();
    return e;
}

nlohmann::json MemoryPool::to_jsonl_entries() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : entries_) {
        out.push_back(to_json(e));
    }
    return out;
}

std::string MemoryPool::dump_jsonl() const {
    std::string out;
    for (const auto& e : entries_) {
        out += to_json(e).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        out += "\n";
    }
    return out;
}

MemoryPool MemoryPool::from_jsonl(std::string_view text, int importance_since_reflection) {
    MemoryPool pool;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            pool.add(memory_entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(kModule, "MalformedDump", e.what());
        }
    }
    pool.importance_since_reflection_ = importance_since_reflection;
    return pool;
}

std::string render_memories(const std::vector<MemoryEntry>& entries) {
    std::ostringstream out;
    for (const auto& e : entries) {
        out << "- [t=" << e.created << " " << to_string(e.kind) << "] " << e.text << "\n";
    }
    return out.str();
}

} // namespace cup
