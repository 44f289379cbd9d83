#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cup {

class Gateway;

enum class MemoryKind { Event, Behavior, Thought };

std::string_view to_string(MemoryKind kind);

// Default importance of auto-logged entries.
inline constexpr int kEventImportance = 3;
inline constexpr int kBehaviorImportance = 4;
inline constexpr int kThoughtImportance = 8;

struct MemoryEntry {
    MemoryKind kind = MemoryKind::Event;
    std::string text;
    int created = 0;
    int last_access = 0;
    int importance = 1; // [1, 10]
};

struct RetrievalWeights {
    double recency = 1.0;
    double importance = 1.0;
    double relevance = 1.0;
    double decay = 0.995; // per tick
};

// w_rec * decay^(now - last_access) + w_imp * importance / 10 + w_rel * relevance
double score(const MemoryEntry& entry, int now, double relevance, const RetrievalWeights& weights = {});

// Sparse term-frequency vector over lowercased alphanumeric word tokens.
class TermVector {
public:
    TermVector() = default;
    explicit TermVector(std::string_view text);

    double cosine(const TermVector& other) const;

private:
    std::vector<std::pair<std::string, int>> terms_; // sorted by term
    double norm_ = 0.0;
};

class MemoryPool {
public:
    // Throws ImportanceOutOfRange, InvalidEntry (last_access < created).
    void add(MemoryEntry entry);

    const std::vector<MemoryEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    int importance_since_reflection() const { return importance_since_reflection_; }

    // Top-k by score; ties by creation tick (newer first), then insertion order.
    // Returned entries have last_access set to `now`.
    std::vector<MemoryEntry> retrieve(std::string_view query, std::size_t k, int now,
                                      const RetrievalWeights& weights = {});

    bool should_reflect(int threshold = 30) const { return importance_since_reflection_ >= threshold; }

    // Issues one "live.reflect" call over the top-10 entries, stores up to 3
    // thoughts, and resets the running importance sum. Returns the thoughts added.
    // `speaker` is prepended to the prompt (e.g. the resident header).
    std::vector<std::string> reflect(Gateway& gateway, int now, const std::string& speaker);

    nlohmann::json to_jsonl_entries() const;
    std::string dump_jsonl() const;
    static MemoryPool from_jsonl(std::string_view text, int importance_since_reflection = 0);

private:
    std::vector<MemoryEntry> entries_;
    std::vector<TermVector> vectors_;
    int importance_since_reflection_ = 0;
};

nlohmann::json to_json(const MemoryEntry& entry);
MemoryEntry memory_entry_from_json(const nlohmann::json& j);

// Renders entries as "- [t=12 event] text" lines for prompts.
std::string render_memories(const std::vector<MemoryEntry>& entries);

} // namespace cup
