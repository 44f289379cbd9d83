#include <gtest/gtest.h>

#include <random>

#include "cup/error.hpp"
#include "cup/memory.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cup;

namespace {

MemoryEntry entry(std::string text, int created, int importance, MemoryKind kind = MemoryKind::Event) {
    return {kind, std::move(text), created, created, importance};
}

const char* kWords[] = {"park", "school", "bus", "coffee", "garden", "clinic", "friend", "shop", "quiet", "noise"};

std::string random_text(std::mt19937_64& gen) {
    std::string text;
    const int n = 1 + static_cast<int>(gen() % 5);
    for (int i = 0; i < n; ++i) {
        if (i) text += ' ';
        text += kWords[gen() % 10];
    }
    return text;
}

} // namespace

TEST(MemoryScore, HandComputedValues) {
    const MemoryEntry e = entry("x", 0, 10);
    // gap 0: 1 + 1 + relevance
    EXPECT_DOUBLE_EQ(score(e, 0, 0.5), 2.5);
    // gap of one day: 0.995^1440 = 7.332e-4
    const double decay_day = score(e, 1440, 0.0) - 1.0;
    EXPECT_NEAR(decay_day, 7.34e-4, 0.01e-4);
    EXPECT_NEAR(decay_day, std::pow(0.995, 1440), 1e-15);
    EXPECT_NEAR(score(entry("x", 0, 3), 100, 0.0), std::pow(0.995, 100) + 0.3, 1e-15);
    RetrievalWeights w{2.0, 0.5, 0.0, 0.995};
    EXPECT_NEAR(score(entry("x", 0, 4), 1, 0.9, w), 2 * 0.995 + 0.2, 1e-15);
}

TEST(TermVector, CosineMatchesOracle) {
    EXPECT_DOUBLE_EQ(TermVector("park park bus").cosine(TermVector("park park bus")), 1.0);
    EXPECT_DOUBLE_EQ(TermVector("park").cosine(TermVector("bus")), 0.0);
    EXPECT_DOUBLE_EQ(TermVector("").cosine(TermVector("bus")), 0.0);
    EXPECT_NEAR(TermVector("Park, park! bus").cosine(TermVector("park")), 2.0 / std::sqrt(5.0), 1e-15);
    std::mt19937_64 gen(3);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_text(gen), b = random_text(gen);
        EXPECT_NEAR(TermVector(a).cosine(TermVector(b)), oracle::cosine(a, b), 1e-12);
    }
}

TEST(MemoryPool, RejectsInvalidEntries) {
    MemoryPool pool;
    EXPECT_THROW(pool.add(entry("x", 0, 0)), Error);
    EXPECT_THROW(pool.add(entry("x", 0, 11)), Error);
    MemoryEntry backwards = entry("x", 5, 3);
    backwards.last_access = 4;
    EXPECT_THROW(pool.add(backwards), Error);
    EXPECT_EQ(pool.size(), 0u);
    EXPECT_THROW(pool.retrieve("q", 0, 0), Error);
}

TEST(MemoryPool, SmallPoolReturnsEverything) {
    MemoryPool pool;
    pool.add(entry("a", 0, 3));
    pool.add(entry("b", 1, 3));
    EXPECT_EQ(pool.retrieve("q", 5, 2).size(), 2u);
    EXPECT_TRUE(MemoryPool{}.retrieve("q", 5, 2).empty());
}

TEST(MemoryPool, TiesPreferNewerThenInsertionOrder) {
    MemoryPool pool;
    // Same score: last_access equal, same importance, no relevance.
    MemoryEntry older{MemoryKind::Event, "alpha", 1, 5, 3};
    MemoryEntry newer{MemoryKind::Event, "beta", 4, 5, 3};
    MemoryEntry twin{MemoryKind::Event, "gamma", 4, 5, 3};
    pool.add(older);
    pool.add(newer);
    pool.add(twin);
    const auto out = pool.retrieve("zzz", 3, 5);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].text, "beta");
    EXPECT_EQ(out[1].text, "gamma");
    EXPECT_EQ(out[2].text, "alpha");
}

TEST(MemoryPool, RetrievalRefreshesLastAccess) {
    MemoryPool pool;
    pool.add(entry("park visit", 0, 9));
    pool.add(entry("bus ride", 0, 1));
    const auto out = pool.retrieve("park", 1, 50);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].last_access, 50);
    EXPECT_EQ(pool.entries()[0].last_access, 50);
    EXPECT_EQ(pool.entries()[1].last_access, 0);
}

TEST(MemoryPool, TopKMatchesExhaustiveSort) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 40; ++trial) {
        MemoryPool pool;
        std::vector<MemoryEntry> mirror;
        const int n = static_cast<int>(gen() % 120);
        for (int i = 0; i < n; ++i) {
            const int created = static_cast<int>(gen() % 500);
            MemoryEntry e{MemoryKind::Event, random_text(gen), created, created + static_cast<int>(gen() % 50),
                          1 + static_cast<int>(gen() % 10)};
            pool.add(e);
            mirror.push_back(e);
        }
        const std::string query = random_text(gen);
        const std::size_t k = 1 + gen() % 10;
        const int now = 600;
        const auto expected = oracle::top_k(mirror, query, k, now);
        const auto got = pool.retrieve(query, k, now);
        ASSERT_EQ(got.size(), expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].text, mirror[expected[i]].text);
            EXPECT_EQ(got[i].created, mirror[expected[i]].created);
        }
    }
}

TEST(MemoryPool, ReflectionAddsThoughtsAndResets) {
    MemoryPool pool;
    for (int i = 0; i < 10; ++i) pool.add(entry("walked to the park", i, 3));
    EXPECT_EQ(pool.importance_since_reflection(), 30);
    EXPECT_TRUE(pool.should_reflect());
    auto gw = test::scripted_gateway(
        {{"entries", {{{"tag", "live.reflect"}, {"responses", {{{"thoughts", {"a", "b", " ", "c", "d"}}}}}}}}});
    const auto added = pool.reflect(*gw, 20, "Resident [R_1]");
    EXPECT_EQ(added, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(pool.importance_since_reflection(), 0);
    EXPECT_EQ(pool.size(), 13u);
    EXPECT_EQ(pool.entries().back().kind, MemoryKind::Thought);
    EXPECT_EQ(pool.entries().back().importance, kThoughtImportance);
    EXPECT_EQ(pool.entries().back().created, 20);
}

TEST(MemoryPool, BelowThresholdDoesNotReflect) {
    MemoryPool pool;
    pool.add(entry("x", 0, 9));
    pool.add(entry("y", 0, 9));
    pool.add(entry("z", 0, 9));
    EXPECT_FALSE(pool.should_reflect());
    pool.add(entry("w", 0, 3));
    EXPECT_TRUE(pool.should_reflect());
}

TEST(MemoryPool, JsonlRoundTrip) {
    MemoryPool pool;
    pool.add(entry("one", 1, 3));
    pool.add(entry("two \"quoted\"", 2, 8, MemoryKind::Thought));
    const auto back = MemoryPool::from_jsonl(pool.dump_jsonl(), 11);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.entries()[1].text, "two \"quoted\"");
    EXPECT_EQ(back.entries()[1].kind, MemoryKind::Thought);
    EXPECT_EQ(back.importance_since_reflection(), 11);
    EXPECT_EQ(back.dump_jsonl(), pool.dump_jsonl());
    EXPECT_THROW(MemoryPool::from_jsonl("{not json}\n"), Error);
    EXPECT_EQ(render_memories({entry("hi", 4, 3)}), "- [t=4 event] hi\n");
}
