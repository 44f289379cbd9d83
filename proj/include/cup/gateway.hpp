#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/error.hpp"

namespace cup {

// ---------------------------------------------------------------------------
// Requests and completions
// ---------------------------------------------------------------------------

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct Message {
    Role role = Role::User;
    std::string text;
};

struct ChatRequest {
    std::vector<Message> messages;
    double temperature = 0.0;
    std::string tag;     // call site, e.g. "plan.draft"
    int max_tokens = 1024;
    std::optional<int> tick; // simulation tick, when the call happens inside a day

    // Concatenation of all message texts, the string hashed and matched against.
    std::string prompt_text() const;
};

// Convenience: system + user message pair.
ChatRequest make_request(std::string tag, std::string system, std::string user);

enum class BackendKind { Live, Scripted };

std::string_view to_string(BackendKind kind);

struct Completion {
    std::string text;
    BackendKind backend = BackendKind::Scripted;
    double latency_ms = 0.0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendKind kind() const = 0;
    virtual std::string complete(const ChatRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

struct ScriptEntry {
    std::string tag;
    std::vector<std::string> match; // every substring must occur in the prompt
    std::vector<std::string> responses;
    bool cycle = false;             // replay the queue forever
};

struct Script {
    std::vector<ScriptEntry> entries;
    std::optional<std::string> default_response;

    static Script from_json(const nlohmann::json& j);
    static Script load(const std::filesystem::path& path);
};

// Pops responses by tag. The first entry (in file order) whose tag and match
// predicate fit and whose queue is not exhausted answers; then `default`;
// otherwise ScriptExhausted(tag).
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(Script script);

    BackendKind kind() const override { return BackendKind::Scripted; }
    std::string complete(const ChatRequest& request) override;

    // Per-entry consumption counts, for checkpoint/resume.
    nlohmann::json cursor_state() const;
    void restore_cursor(const nlohmann::json& state);

private:
    Script script_;
    std::vector<std::size_t> consumed_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Live backend (OpenAI-compatible chat completions)
// ---------------------------------------------------------------------------

struct LiveConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "CUP_API_KEY";
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{60};

    static LiveConfig from_json(const nlohmann::json& j);
};

class LiveBackend final : public Backend {
public:
    // Reads the credential from the environment (CUP_API_KEY); throws AuthMissing if unset.
    explicit LiveBackend(LiveConfig config);
    LiveBackend(LiveConfig config, std::string api_key);

    BackendKind kind() const override { return BackendKind::Live; }
    std::string complete(const ChatRequest& request) override;

    nlohmann::json request_body(const ChatRequest& request) const;
    int attempts_made() const { return attempts_.load(); }

private:
    LiveConfig config_;
    std::string api_key_;
    std::atomic<int> attempts_{0};
};

// ---------------------------------------------------------------------------
// Structured output
// ---------------------------------------------------------------------------

struct SchemaField;

class Schema {
public:
    enum class Kind { String, Integer, Number, Boolean, Array, Object, Any };

    static Schema string() { return Schema(Kind::String); }
    static Schema integer() { return Schema(Kind::Integer); }
    static Schema number() { return Schema(Kind::Number); }
    static Schema boolean() { return Schema(Kind::Boolean); }
    static Schema any() { return Schema(Kind::Any); }
    static Schema array(Schema element);
    static Schema object(std::vector<SchemaField> fields);

    Kind kind() const { return kind_; }

    // Empty when the value conforms; otherwise a description of the first mismatch.
    std::optional<std::string> check(const nlohmann::json& value, const std::string& where = "$") const;

    // Human-readable shape, embedded in prompts: {"score": integer}.
    std::string describe() const;

private:
    explicit Schema(Kind kind) : kind_(kind) {}

    Kind kind_;
    std::vector<SchemaField> fields_;
    std::shared_ptr<Schema> element_;
};

struct SchemaField {
    std::string name;
    Schema schema;
    bool required = true;
};

// Raised when both the completion and its repair fail to parse.
class UnparseableAfterRepair : public Error {
public:
    UnparseableAfterRepair(std::string first_text, std::string repair_text, const std::string& reason);

    const std::string& first_text() const noexcept { return first_text_; }
    const std::string& repair_text() const noexcept { return repair_text_; }

private:
    std::string first_text_;
    std::string repair_text_;
};

// Extracts the JSON document from a model reply (code fences and prose tolerated).
std::optional<nlohmann::json> extract_json(const std::string& text, std::string* error = nullptr);

// ---------------------------------------------------------------------------
// Audit log and gateway
// ---------------------------------------------------------------------------

struct AuditEntry {
    std::optional<int> tick;
    std::optional<int> iteration;
    std::string tag;
    std::string prompt_sha256;
    std::string response;
    BackendKind backend = BackendKind::Scripted;
    double latency_ms = 0.0;
    std::optional<std::string> prompt;
};

nlohmann::json to_json(const AuditEntry& entry);
AuditEntry audit_entry_from_json(const nlohmann::json& j);

// Append-only, internally synchronized.
class AuditLog {
public:
    void append(AuditEntry entry);
    std::vector<AuditEntry> entries() const;
    std::vector<AuditEntry> entries_since(std::size_t offset) const;
    std::size_t size() const;
    std::string to_jsonl(std::size_t offset = 0) const;

private:
    mutable std::mutex mutex_;
    std::vector<AuditEntry> entries_;
};

struct GatewayOptions {
    std::size_t max_in_flight = 4;
    bool record_prompts = false;
};

class Gateway {
public:
    explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

    // Throws BackendUnavailable, ScriptExhausted, AuthMissing (all module "llm-gateway").
    Completion complete(const ChatRequest& request);

    // Parses the completion against `schema`; on failure issues one repair call
    // carrying the parse error and the original text. Throws UnparseableAfterRepair.
    nlohmann::json complete_structured(const ChatRequest& request, const Schema& schema);

    const AuditLog& audit() const { return audit_; }
    Backend& backend() { return *backend_; }
    BackendKind backend_kind() const { return backend_->kind(); }

    // Stamped onto subsequent audit entries.
    void set_iteration(std::optional<int> iteration) { iteration_ = iteration; }

    std::size_t peak_in_flight() const { return peak_in_flight_.load(); }

private:
    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    AuditLog audit_;
    std::counting_semaphore<1024> slots_;
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> peak_in_flight_{0};
    std::optional<int> iteration_;
};

// Scripted or live backend per name ("scripted" | "live").
std::shared_ptr<Backend> make_backend(const std::string& name,
                                      const std::optional<std::filesystem::path>& script_path,
                                      const LiveConfig& live = {});

} // namespace cup
