#include "cup/gateway.hpp"

#include <httplib.h>

#include <cstdlib>
#include <sstream>
#include <thread>

#include "cup/error.hpp"
#include "cup/hash.hpp"
#include "cup/io.hpp"

namespace cup {

namespace {

constexpr const char* kModule = "llm-gateway";

bool contains_all(const std::string& haystack, const std::vector<std::string>& needles) {
    for (const auto& needle : needles) {
        if (haystack.find(needle) == std::string::npos) {
            return false;
        }
    }
    return true;
}

std::string kind_name(Schema::Kind kind) {
    switch (kind) {
    case Schema::Kind::String: return "string";
    case Schema::Kind::Integer: return "integer";
    case Schema::Kind::Number: return "number";
    case Schema::Kind::Boolean: return "boolean";
    case Schema::Kind::Array: return "array";
    case Schema::Kind::Object: return "object";
    case Schema::Kind::Any: return "any";
    }
    return "any";
}

} // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(BackendKind kind) {
    return kind == BackendKind::Live ? "live" : "scripted";
}

std::string ChatRequest::prompt_text() const {
    std::string out;
    for (const auto& m : messages) {
        out += to_string(m.role);
        out += ": ";
        out += m.text;
        out += "\n";
    }
    return out;
}

ChatRequest make_request(std::string tag, std::string system, std::string user) {
    ChatRequest request;
    request.tag = std::move(tag);
    if (!system.empty()) {
        request.messages.push_back({Role::System, std::move(system)});
    }
    request.messages.push_back({Role::User, std::move(user)});
    return request;
}

// ---------------------------------------------------------------------------
// Script

Script Script::from_json(const nlohmann::json& j) {
    Script script;
    try {
        for (const auto& item : j.at("entries")) {
            ScriptEntry entry;
            entry.tag = item.at("tag").get<std::string>();
            if (item.contains("match")) {
                const auto& match = item.at("match");
                if (match.is_string()) {
                    entry.match.push_back(match.get<std::string>());
                } else {
                    entry.match = match.get<std::vector<std::string>>();
                }
            }
            for (const auto& response : item.at("responses")) {
                // Structured responses may be written inline as JSON values.
                entry.responses.push_back(response.is_string() ? response.get<std::string>() : response.dump());
            }
            entry.cycle = item.value("cycle", false);
            script.entries.push_back(std::move(entry));
        }
        if (j.contains("default") && !j.at("default").is_null()) {
            const auto& d = j.at("default");
            script.default_response = d.is_string() ? d.get<std::string>() : d.dump();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, "MalformedScript", e.what());
    }
    return script;
}

Script Script::load(const std::filesystem::path& path) {
    return from_json(io::read_json(path));
}

ScriptedBackend::ScriptedBackend(Script script)
    : script_(std::move(script)), consumed_(script_.entries.size(), 0) {}

std::string ScriptedBackend::complete(const ChatRequest& request) {
    const std::string prompt = request.prompt_text();
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < script_.entries.size(); ++i) {
        const auto& entry = script_.entries[i];
        if (entry.tag != request.tag || entry.responses.empty() || !contains_all(prompt, entry.match)) {
            continue;
        }
        if (entry.cycle) {
            return entry.responses[consumed_[i]++ % entry.responses.size()];
        }
        if (consumed_[i] < entry.responses.size()) {
            return entry.responses[consumed_[i]++];
        }
    }
    if (script_.default_response) {
        return *script_.default_response;
    }
    throw Error(kModule, "ScriptExhausted", request.tag);
}

nlohmann::json ScriptedBackend::cursor_state() const {
    std::lock_guard lock(mutex_);
    return consumed_;
}

void ScriptedBackend::restore_cursor(const nlohmann::json& state) {
    auto counts = state.get<std::vector<std::size_t>>();
    std::lock_guard lock(mutex_);
    if (counts.size() != consumed_.size()) {
        throw Error(kModule, "CursorMismatch", std::to_string(counts.size()));
    }
    consumed_ = std::move(counts);
}

// ---------------------------------------------------------------------------
// Live backend

LiveConfig LiveConfig::from_json(const nlohmann::json& j) {
    LiveConfig config;
    config.base_url = j.value("base_url", config.base_url);
    config.path = j.value("path", config.path);
    config.model = j.value("model", config.model);
    config.max_attempts = j.value("max_attempts", config.max_attempts);
    config.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", config.initial_backoff.count()));
    config.timeout = std::chrono::seconds(j.value("timeout_s", config.timeout.count()));
    return config;
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(kModule, "AuthMissing", config_.api_key_env);
    }
    api_key_ = key;
}

LiveBackend::LiveBackend(LiveConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
    if (api_key_.empty()) {
        throw Error(kModule, "AuthMissing", config_.api_key_env);
    }
}

nlohmann::json LiveBackend::request_body(const ChatRequest& request) const {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
    }
    return {{"model", config_.model},
            {"messages", messages},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

std::string LiveBackend::complete(const ChatRequest& request) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    client.set_bearer_token_auth(api_key_);

    const std::string body = request_body(request).dump();
    std::string last_error = "no attempt made";
    auto backoff = config_.initial_backoff;

    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        ++attempts_;
        auto result = client.Post(config_.path, body, "application/json");
        bool transient = true;
        if (!result) {
            last_error = "transport: " + httplib::to_string(result.error());
        } else if (result->status == 200) {
            try {
                const auto reply = nlohmann::json::parse(result->body);
                const auto& content = reply.at("choices").at(0).at("message").at("content");
                return content.is_null() ? std::string{} : content.get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("malformed response: ") + e.what();
            }
        } else {
            last_error = "HTTP " + std::to_string(result->status);
            transient = result->status == 429 || result->status >= 500;
        }
        if (!transient) {
            break;
        }
        if (attempt < config_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw Error(kModule, "BackendUnavailable", last_error);
}

std::shared_ptr<Backend> make_backend(const std::string& name,
                                      const std::optional<std::filesystem::path>& script_path,
                                      const LiveConfig& live) {
    if (name == "scripted") {
        if (!script_path) {
            throw Error(kModule, "ScriptMissing");
        }
        return std::make_shared<ScriptedBackend>(Script::load(*script_path));
    }
    if (name == "live") {
        return std::make_shared<LiveBackend>(live);
    }
    throw Error(kModule, "UnknownBackend", name);
}

// ---------------------------------------------------------------------------
// Schema

UnparseableAfterRepair::UnparseableAfterRepair(std::string first_text, std::string repair_text,
                                               const std::string& reason)
    : Error(kModule, "UnparseableAfterRepair", reason),
      first_text_(std::move(first_text)),
      repair_text_(std::move(repair_text)) {}

Schema Schema::array(Schema element) {
    Schema s(Kind::Array);
    s.element_ = std::make_shared<Schema>(std::move(element));
    return s;
}

Schema Schema::object(std::vector<SchemaField> fields) {
    Schema s(Kind::Object);
    s.fields_ = std::move(fields);
    return s;
}

std::optional<std::string> Schema::check(const nlohmann::json& value, const std::string& where) const {
    auto mismatch = [&] { return where + ": expected " + kind_name(kind_) + ", got " + value.type_name(); };
    switch (kind_) {
    case Kind::Any:
        return std::nullopt;
    case Kind::String:
        if (!value.is_string()) return mismatch();
        return std::nullopt;
    case Kind::Boolean:
        if (!value.is_boolean()) return mismatch();
        return std::nullopt;
    case Kind::Number:
        if (!value.is_number()) return mismatch();
        return std::nullopt;
    case Kind::Integer:
        if (value.is_number_integer()) return std::nullopt;
        if (value.is_number_float()) {
            const double d = value.get<double>();
            if (d == static_cast<double>(static_cast<long long>(d))) return std::nullopt;
        }
        return mismatch();
    case Kind::Array:
        if (!value.is_array()) return mismatch();
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (auto err = element_->check(value[i], where + "[" + std::to_string(i) + "]")) return err;
        }
        return std::nullopt;
    case Kind::Object:
        if (!value.is_object()) return mismatch();
        for (const auto& field : fields_) {
            auto it = value.find(field.name);
            if (it == value.end() || it->is_null()) {
                if (field.required) return where + "." + field.name + ": missing";
                continue;
            }
            if (auto err = field.schema.check(*it, where + "." + field.name)) return err;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

std::string Schema::describe() const {
    switch (kind_) {
    case Kind::Array:
        return "[" + element_->describe() + ", ...]";
    case Kind::Object: {
        std::string out = "{";
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (i > 0) out += ", ";
            out += "\"" + fields_[i].name + "\": " + fields_[i].schema.describe();
            if (!fields_[i].required) out += " (optional)";
        }
        return out + "}";
    }
    default:
        return kind_name(kind_);
    }
}

std::optional<nlohmann::json> extract_json(const std::string& text, std::string* error) {
    std::string body = text;
    if (auto fence = body.find("```"); fence != std::string::npos) {
        auto start = body.find('\n', fence);
        auto end = start == std::string::npos ? std::string::npos : body.find("```", start);
        if (end != std::string::npos) {
            body = body.substr(start + 1, end - start - 1);
        }
    }
    const auto open = body.find_first_of("{[");
    if (open == std::string::npos) {
        if (error) *error = "no JSON object or array found";
        return std::nullopt;
    }
    const char close_char = body[open] == '{' ? '}' : ']';
    const auto close = body.find_last_of(close_char);
    if (close == std::string::npos || close < open) {
        if (error) *error = "unterminated JSON document";
        return std::nullopt;
    }
    try {
        return nlohmann::json::parse(body.substr(open, close - open + 1));
    } catch (const nlohmann::json::parse_error& e) {
        if (error) *error = e.what();
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Audit log

nlohmann::json to_json(const AuditEntry& e) {
    nlohmann::json j{{"tag", e.tag},
                     {"prompt_sha256", e.prompt_sha256},
                     {"response", e.response},
                     {"backend", std::string(to_string(e.backend))},
                     {"latency_ms", e.latency_ms}};
    if (e.tick) j["tick"] = *e.tick;
    if (e.iteration) j["iteration"] = *e.iteration;
    if (e.prompt) j["prompt"] = *e.prompt;
    return j;
}

AuditEntry audit_entry_from_json(const nlohmann::json& j) {
    AuditEntry e;
    e.tag = j.at("tag").get<std::string>();
    e.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
    e.response = j.at("response").get<std::string>();
    e.backend = j.at("backend").get<std::string>() == "live" ? BackendKind::Live : BackendKind::Scripted;
    e.latency_ms = j.at("latency_ms").get<double>();
    if (j.contains("tick")) e.tick = j.at("tick").get<int>();
    if (j.contains("iteration")) e.iteration = j.at("iteration").get<int>();
    if (j.contains("prompt")) e.prompt = j.at("prompt").get<std::string>();
    return e;
}

void AuditLog::append(AuditEntry entry) {
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(entry));
}

std::vector<AuditEntry> AuditLog::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::vector<AuditEntry> AuditLog::entries_since(std::size_t offset) const {
    std::lock_guard lock(mutex_);
    if (offset >= entries_.size()) return {};
    return {entries_.begin() + static_cast<std::ptrdiff_t>(offset), entries_.end()};
}

std::size_t AuditLog::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string AuditLog::to_jsonl(std::size_t offset) const {
    std::string out;
    for (const auto& e : entries_since(offset)) {
        out += to_json(e).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_(options),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options.max_in_flight, 1, 1024))) {
    if (!backend_) {
        throw Error(kModule, "BackendUnavailable", "no backend configured");
    }
}

Completion Gateway::complete(const ChatRequest& request) {
    if (request.messages.empty()) {
        throw Error(kModule, "InvalidRequest", "no messages");
    }
    if (request.temperature < 0.0) {
        throw Error(kModule, "InvalidRequest", "negative temperature");
    }
    const std::string prompt = request.prompt_text();

    slots_.acquire();
    const std::size_t now_in_flight = ++in_flight_;
    std::size_t peak = peak_in_flight_.load();
    while (now_in_flight > peak && !peak_in_flight_.compare_exchange_weak(peak, now_in_flight)) {
    }

    Completion completion;
    completion.backend = backend_->kind();
    const auto started = std::chrono::steady_clock::now();
    try {
        completion.text = backend_->complete(request);
    } catch (...) {
        --in_flight_;
        slots_.release();
        throw;
    }
    --in_flight_;
    slots_.release();

    // Scripted runs must be byte-reproducible, so their latency is recorded as zero.
    if (completion.backend == BackendKind::Live) {
        completion.latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    }

    AuditEntry entry;
    entry.tick = request.tick;
    entry.iteration = iteration_;
    entry.tag = request.tag;
    entry.prompt_sha256 = sha256_hex(prompt);
    entry.response = completion.text;
    entry.backend = completion.backend;
    entry.latency_ms = completion.latency_ms;
    if (options_.record_prompts) {
        entry.prompt = prompt;
    }
    audit_.append(std::move(entry));
    return completion;
}

nlohmann::json Gateway::complete_structured(const ChatRequest& request, const Schema& schema) {
    const Completion first = complete(request);
    std::string error;
    if (auto value = extract_json(first.text, &error)) {
        if (auto mismatch = schema.check(*value)) {
            error = *mismatch;
        } else {
            return *value;
        }
    }

    ChatRequest repair = request;
    repair.messages.push_back({Role::Assistant, first.text});
    repair.messages.push_back(
        {Role::User, "Your previous reply could not be parsed (" + error + "). Original reply:\n" + first.text +
                         "\nReply again with only a JSON document of the shape " + schema.describe() + "."});
    const Completion second = complete(repair);
    std::string second_error;
    if (auto value = extract_json(second.text, &second_error)) {
        if (auto mismatch = schema.check(*value)) {
            second_error = *mismatch;
        } else {
            return *value;
        }
    }
    throw UnparseableAfterRepair(first.text, second.text, second_error);
}

} // namespace cup
