#pragma once

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wisemind {

struct GenerationConfig {
    double temperature = 0.6;
    int max_output_tokens = 1024;
    std::chrono::milliseconds timeout{60'000};
    int retry_limit = 2;

    // Reasoning/empathy agents and baselines.
    static GenerationConfig doctor() { return {}; }
    // Simulated patient and story generation.
    static GenerationConfig patient() {
        GenerationConfig c;
        c.temperature = 0.2;
        return c;
    }

    // Throws ConfigError when out of range.
    void validate() const;
};

// Who is asking. Scripted backends key replies on it; live backends ignore it.
enum class AgentRole { reasoning, empathy, baseline, patient, story, detector };

std::string_view to_string(AgentRole r);
std::optional<AgentRole> role_from_string(std::string_view s);

struct ChatRequest {
    std::string system;
    std::string human;
    AgentRole role = AgentRole::reasoning;
    std::string node;  // node under discussion, empty when not applicable
    int turn = 0;      // doctor-turn index within the session
    GenerationConfig config;
};

// A chat-completion backend. complete() returns non-empty text or throws a
// BackendError; implementations must tolerate concurrent calls from
// different sessions.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

using BackendPtr = std::shared_ptr<ChatBackend>;

// Replays canned replies. Each call consumes the first unconsumed entry whose
// filters (node, role, turn) all match the request. One instance per session.
class ScriptedBackend final : public ChatBackend {
public:
    struct Entry {
        std::optional<std::string> match;  // node id
        std::optional<AgentRole> role;
        std::optional<int> turn;
        std::string reply;
    };

    explicit ScriptedBackend(std::vector<Entry> entries, std::string label = "scripted");

    // File format: [{"match"?: node id, "role"?: name, "turn"?: int, "reply": text}, ...]
    static std::vector<Entry> load_entries(const nlohmann::json& doc);
    static std::vector<Entry> load_entries_file(const std::filesystem::path& path);

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return label_; }

    std::size_t calls() const { return calls_; }
    std::size_t remaining() const;

private:
    std::vector<Entry> entries_;
    std::vector<bool> consumed_;
    std::string label_;
    std::size_t calls_ = 0;
};

// Delegates to a callable; handy for oracles and tests.
class CallbackBackend final : public ChatBackend {
public:
    using Fn = std::function<std::string(const ChatRequest&)>;
    CallbackBackend(Fn fn, std::string label) : fn_(std::move(fn)), label_(std::move(label)) {}

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return label_; }
    std::size_t calls() const { return calls_.load(); }

private:
    Fn fn_;
    std::string label_;
    std::atomic<std::size_t> calls_{0};
};

struct HttpBackendOptions {
    std::string base_url;  // e.g. https://api.example.com/v1
    std::string model;
    std::string api_key;   // sent as a bearer token when non-empty
    std::string path = "/chat/completions";
};

// Speaks the common chat-completion JSON shape over HTTP(S).
class HttpBackend final : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    // base url, key and model from the named environment variables.
    static HttpBackendOptions options_from_env(const std::string& base_url_var = "CHAT_API_BASE_URL",
                                               const std::string& api_key_var = "CHAT_API_KEY",
                                               const std::string& model_var = "CHAT_API_MODEL");

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "http:" + options_.model; }

    static nlohmann::json request_body(const std::string& model, const ChatRequest& request);
    // Extracts choices[0].message.content; throws BackendRefusal when absent or filtered.
    static std::string reply_from_body(const nlohmann::json& body);

private:
    HttpBackendOptions options_;
    std::string host_;
    std::string prefix_;
};

}  // namespace wisemind
