#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "cup/error.hpp"
#include "cup/gateway.hpp"
#include "cup/hash.hpp"
#include "support.hpp"

using namespace cup;
using nlohmann::json;

TEST(Hash, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ScriptedBackend, MatchesByTagAndSubstringsInFileOrder) {
    auto gw = test::scripted_gateway({{"entries",
                                       {{{"tag", "t"}, {"match", {"alpha", "beta"}}, {"responses", {"both"}}},
                                        {{"tag", "t"}, {"match", "alpha"}, {"responses", {"a1", "a2"}}},
                                        {{"tag", "t"}, {"responses", {"any"}}}}}});
    EXPECT_EQ(gw->complete(make_request("t", "", "alpha beta")).text, "both");
    EXPECT_EQ(gw->complete(make_request("t", "", "alpha beta")).text, "a1");
    EXPECT_EQ(gw->complete(make_request("t", "", "beta")).text, "any");
    EXPECT_EQ(gw->complete(make_request("t", "", "alpha")).text, "a2");
    try {
        gw->complete(make_request("t", "", "alpha"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.module(), "llm-gateway");
        EXPECT_EQ(e.variant(), "ScriptExhausted");
        EXPECT_EQ(e.detail(), "t");
    }
}

TEST(ScriptedBackend, CycleAndDefault) {
    auto gw = test::scripted_gateway(
        {{"entries", {{{"tag", "c"}, {"responses", {"x", "y"}}, {"cycle", true}}}}, {"default", "fallback"}});
    EXPECT_EQ(gw->complete(make_request("c", "", "")).text, "x");
    EXPECT_EQ(gw->complete(make_request("c", "", "")).text, "y");
    EXPECT_EQ(gw->complete(make_request("c", "", "")).text, "x");
    EXPECT_EQ(gw->complete(make_request("other", "", "")).text, "fallback");
}

TEST(ScriptedBackend, InlineJsonResponsesAreDumped) {
    const Script s = Script::from_json({{"entries", {{{"tag", "j"}, {"responses", {{{"a", 1}}}}}}}});
    ASSERT_EQ(s.entries.size(), 1u);
    EXPECT_EQ(s.entries[0].responses[0], R"({"a":1})");
    EXPECT_THROW(Script::from_json({{"nope", 1}}), Error);
}

TEST(ScriptedBackend, CursorRoundTrip) {
    const json script = {{"entries", {{{"tag", "t"}, {"responses", {"1", "2", "3"}}}}}};
    auto a = test::scripted_backend(script);
    Gateway ga(a);
    ga.complete(make_request("t", "", ""));
    auto b = test::scripted_backend(script);
    b->restore_cursor(a->cursor_state());
    Gateway gb(b);
    EXPECT_EQ(gb.complete(make_request("t", "", "")).text, "2");
    EXPECT_THROW(b->restore_cursor(json::array({1, 2})), Error);
}

TEST(Gateway, InvalidRequests) {
    auto gw = test::scripted_gateway({{"entries", json::array()}, {"default", "x"}});
    ChatRequest empty;
    empty.tag = "t";
    EXPECT_THROW(gw->complete(empty), Error);
    auto negative = make_request("t", "s", "u");
    negative.temperature = -1;
    EXPECT_THROW(gw->complete(negative), Error);
}

TEST(Gateway, AuditRecordsEveryCall) {
    auto gw = test::scripted_gateway({{"entries", json::array()}, {"default", "ok"}}, {4, true});
    gw->set_iteration(2);
    auto req = make_request("x.y", "sys", "hello");
    req.tick = 17;
    gw->complete(req);
    const auto entries = gw->audit().entries();
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].tag, "x.y");
    EXPECT_EQ(entries[0].tick, 17);
    EXPECT_EQ(entries[0].iteration, 2);
    EXPECT_EQ(entries[0].prompt_sha256, sha256_hex(req.prompt_text()));
    EXPECT_EQ(entries[0].latency_ms, 0.0);
    ASSERT_TRUE(entries[0].prompt);
    EXPECT_NE(entries[0].prompt->find("hello"), std::string::npos);
    const auto line = json::parse(gw->audit().to_jsonl());
    const auto back = audit_entry_from_json(line);
    EXPECT_EQ(back.tag, "x.y");
    EXPECT_EQ(back.tick, 17);
}

TEST(ExtractJson, FencesAndProse) {
    EXPECT_EQ(extract_json("```json\n{\"a\": 1}\n```")->at("a"), 1);
    EXPECT_EQ(extract_json("Sure! {\"a\": [1,2]} hope that helps")->at("a").size(), 2u);
    EXPECT_TRUE(extract_json("[1, 2]")->is_array());
    std::string err;
    EXPECT_FALSE(extract_json("no json here", &err));
    EXPECT_FALSE(err.empty());
    EXPECT_FALSE(extract_json("{broken", &err));
}

TEST(Schema, ChecksShapes) {
    const Schema s = Schema::object({{"n", Schema::integer()},
                                     {"xs", Schema::array(Schema::string())},
                                     {"opt", Schema::boolean(), false}});
    EXPECT_FALSE(s.check(json{{"n", 3}, {"xs", {"a"}}}));
    EXPECT_FALSE(s.check(json{{"n", 3.0}, {"xs", json::array()}}));
    EXPECT_TRUE(s.check(json{{"n", 3.5}, {"xs", json::array()}}));
    EXPECT_TRUE(s.check(json{{"xs", json::array()}}));
    EXPECT_TRUE(s.check(json{{"n", 1}, {"xs", {1}}}));
    EXPECT_TRUE(s.check(json{{"n", 1}, {"xs", json::array()}, {"opt", "yes"}}));
    EXPECT_NE(s.describe().find("\"xs\": [string, ...]"), std::string::npos);
}

TEST(Structured, RepairSucceedsOnSecondReply) {
    auto gw = test::scripted_gateway({{"entries", {{{"tag", "s"}, {"responses", {"not json", R"({"v": 4})"}}}}}});
    const auto v = gw->complete_structured(make_request("s", "", "q"), Schema::object({{"v", Schema::integer()}}));
    EXPECT_EQ(v.at("v"), 4);
    const auto entries = gw->audit().entries();
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(entries[1].tag, "s");
}

TEST(Structured, RepairPromptCarriesErrorAndOriginal) {
    auto gw = test::scripted_gateway({{"entries",
                                       {{{"tag", "s"}, {"match", "could not be parsed"}, {"responses", {R"({"v":1})"}}},
                                        {{"tag", "s"}, {"responses", {R"({"v":"wrong"})"}}}}}});
    EXPECT_EQ(gw->complete_structured(make_request("s", "", "q"), Schema::object({{"v", Schema::integer()}}))["v"],
              1);
}

TEST(Structured, UnparseableAfterRepairKeepsBothTexts) {
    auto gw = test::scripted_gateway({{"entries", {{{"tag", "s"}, {"responses", {"first", "second"}}}}}});
    try {
        gw->complete_structured(make_request("s", "", "q"), Schema::object({{"v", Schema::integer()}}));
        FAIL();
    } catch (const UnparseableAfterRepair& e) {
        EXPECT_EQ(e.variant(), "UnparseableAfterRepair");
        EXPECT_EQ(e.first_text(), "first");
        EXPECT_EQ(e.repair_text(), "second");
    }
}

namespace {

class SlowBackend : public Backend {
public:
    BackendKind kind() const override { return BackendKind::Scripted; }
    std::string complete(const ChatRequest&) override {
        const int now = ++active_;
        int peak = peak_.load();
        while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --active_;
        return "ok";
    }
    std::atomic<int> active_{0};
    std::atomic<int> peak_{0};
};

} // namespace

TEST(Gateway, BoundsCallsInFlight) {
    auto backend = std::make_shared<SlowBackend>();
    Gateway gw(backend, {3, false});
    std::vector<std::thread> threads;
    for (int t = 0; t < 12; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 5; ++i) gw.complete(make_request("t", "", "x"));
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_LE(backend->peak_.load(), 3);
    EXPECT_LE(gw.peak_in_flight(), 3u);
    EXPECT_GE(gw.peak_in_flight(), 1u);
    EXPECT_EQ(gw.audit().size(), 60u);
}

TEST(MakeBackend, Errors) {
    try {
        make_backend("scripted", std::nullopt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.variant(), "ScriptMissing");
    }
    try {
        make_backend("oracle", std::nullopt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.variant(), "UnknownBackend");
    }
    LiveConfig live;
    live.api_key_env = "CUP_TEST_KEY_THAT_IS_NOT_SET";
    try {
        make_backend("live", std::nullopt, live);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.variant(), "AuthMissing");
    }
}

namespace {

// Local OpenAI-compatible stub: fails `failures` times with `status`, then answers.
class StubServer {
public:
    StubServer(int failures, int status) : failures_(failures), status_(status) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            auth_ = req.get_header_value("Authorization");
            body_ = req.body;
            if (hits_ <= failures_) {
                res.status = status_;
                res.set_content("{}", "application/json");
                return;
            }
            json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    LiveConfig config() const {
        LiveConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_);
        c.initial_backoff = std::chrono::milliseconds(1);
        c.timeout = std::chrono::seconds(5);
        c.max_attempts = 3;
        return c;
    }

    std::atomic<int> hits_{0};
    std::string auth_;
    std::string body_;

private:
    httplib::Server server_;
    int failures_;
    int status_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST(LiveBackend, SucceedsAfterTransientFailures) {
    StubServer stub(2, 503);
    auto backend = std::make_shared<LiveBackend>(stub.config(), "secret");
    Gateway gw(backend);
    const auto c = gw.complete(make_request("t", "sys", "ping"));
    EXPECT_EQ(c.text, "pong");
    EXPECT_EQ(c.backend, BackendKind::Live);
    EXPECT_EQ(stub.hits_.load(), 3);
    EXPECT_EQ(backend->attempts_made(), 3);
    EXPECT_EQ(stub.auth_, "Bearer secret");
    const auto body = json::parse(stub.body_);
    EXPECT_EQ(body.at("model"), "gpt-4o");
    EXPECT_EQ(body.at("temperature"), 0.0);
    EXPECT_EQ(body.at("messages").size(), 2u);
    EXPECT_EQ(body.at("messages")[1].at("content"), "ping");
}

TEST(LiveBackend, GivesUpAfterMaxAttempts) {
    StubServer stub(10, 429);
    auto backend = std::make_shared<LiveBackend>(stub.config(), "secret");
    Gateway gw(backend);
    try {
        gw.complete(make_request("t", "sys", "ping"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.variant(), "BackendUnavailable");
        EXPECT_NE(e.detail().find("429"), std::string::npos);
    }
    EXPECT_EQ(stub.hits_.load(), 3);
    EXPECT_EQ(gw.audit().size(), 0u);
}

TEST(LiveBackend, ClientErrorsAreNotRetried) {
    StubServer stub(10, 400);
    auto backend = std::make_shared<LiveBackend>(stub.config(), "secret");
    Gateway gw(backend);
    EXPECT_THROW(gw.complete(make_request("t", "sys", "ping")), Error);
    EXPECT_EQ(stub.hits_.load(), 1);
}

TEST(LiveBackend, UnreachableHostIsUnavailable) {
    LiveConfig c;
    c.base_url = "http://127.0.0.1:1";
    c.initial_backoff = std::chrono::milliseconds(1);
    c.max_attempts = 2;
    c.timeout = std::chrono::seconds(1);
    auto backend = std::make_shared<LiveBackend>(c, "k");
    Gateway gw(backend);
    try {
        gw.complete(make_request("t", "s", "u"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.variant(), "BackendUnavailable");
    }
    EXPECT_EQ(backend->attempts_made(), 2);
}
