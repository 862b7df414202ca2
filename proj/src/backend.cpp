#include "wisemind/backend.hpp"

#include "wisemind/error.hpp"
#include "wisemind/text.hpp"

#include "httplib.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace wisemind {

void GenerationConfig::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ConfigError("temperature must lie in [0, 2], got " + std::to_string(temperature));
    if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
    if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
    if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
}

std::string_view to_string(AgentRole r) {
    switch (r) {
        case AgentRole::reasoning: return "reasoning";
        case AgentRole::empathy: return "empathy";
        case AgentRole::baseline: return "baseline";
        case AgentRole::patient: return "patient";
        case AgentRole::story: return "story";
        case AgentRole::detector: return "detector";
    }
    return "reasoning";
}

std::optional<AgentRole> role_from_string(std::string_view s) {
    for (auto r : {AgentRole::reasoning, AgentRole::empathy, AgentRole::baseline, AgentRole::patient,
                   AgentRole::story, AgentRole::detector})
        if (text::iequals(s, to_string(r))) return r;
    // Short aliases used in fixtures.
    if (text::iequals(s, "ra")) return AgentRole::reasoning;
    if (text::iequals(s, "ea")) return AgentRole::empathy;
    return std::nullopt;
}

// ---- ScriptedBackend ------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<Entry> entries, std::string label)
    : entries_(std::move(entries)), consumed_(entries_.size(), false), label_(std::move(label)) {}

std::vector<ScriptedBackend::Entry> ScriptedBackend::load_entries(const nlohmann::json& doc) {
    if (!doc.is_array()) throw ConfigError("scripted backend file must hold a JSON array");
    std::vector<Entry> out;
    for (const auto& e : doc) {
        if (!e.is_object() || !e.contains("reply") || !e["reply"].is_string())
            throw ConfigError("scripted entry needs a string 'reply'");
        Entry entry;
        entry.reply = e["reply"].get<std::string>();
        if (e.contains("match") && !e["match"].is_null()) entry.match = e["match"].get<std::string>();
        if (e.contains("turn") && !e["turn"].is_null()) entry.turn = e["turn"].get<int>();
        if (e.contains("role") && !e["role"].is_null()) {
            entry.role = role_from_string(e["role"].get<std::string>());
            if (!entry.role) throw ConfigError("unknown role '" + e["role"].get<std::string>() + "'");
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<ScriptedBackend::Entry> ScriptedBackend::load_entries_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scripted backend file " + path.string());
    try {
        return load_entries(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
    ++calls_;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (consumed_[i]) continue;
        const auto& e = entries_[i];
        if (e.match && *e.match != request.node) continue;
        if (e.role && *e.role != request.role) continue;
        if (e.turn && *e.turn != request.turn) continue;
        consumed_[i] = true;
        return e.reply;
    }
    throw BackendRefusal(label_ + ": script exhausted for role " + std::string(to_string(request.role)) +
                         " at node '" + request.node + "'");
}

std::size_t ScriptedBackend::remaining() const {
    return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

std::string CallbackBackend::complete(const ChatRequest& request) {
    ++calls_;
    auto reply = fn_(request);
    if (reply.empty()) throw BackendRefusal(label_ + ": empty reply");
    return reply;
}

// ---- HttpBackend ----------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) throw ConfigError("http backend needs a base url");
    const auto scheme_end = options_.base_url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = options_.base_url.find('/', host_start);
    host_ = options_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : options_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

HttpBackendOptions HttpBackend::options_from_env(const std::string& base_url_var, const std::string& api_key_var,
                                                 const std::string& model_var) {
    auto env = [](const std::string& var) {
        const char* v = var.empty() ? nullptr : std::getenv(var.c_str());
        return v ? std::string(v) : std::string();
    };
    HttpBackendOptions o;
    o.base_url = env(base_url_var);
    o.api_key = env(api_key_var);
    o.model = env(model_var);
    return o;
}

nlohmann::json HttpBackend::request_body(const std::string& model, const ChatRequest& request) {
    return {{"model", model},
            {"messages",
             nlohmann::json::array({{{"role", "system"}, {"content", request.system}},
                                    {{"role", "user"}, {"content", request.human}}})},
            {"temperature", request.config.temperature},
            {"max_tokens", request.config.max_output_tokens},
            {"stream", false}};
}

std::string HttpBackend::reply_from_body(const nlohmann::json& body) {
    if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty())
        throw BackendRefusal("response has no choices");
    const auto& choice = body["choices"][0];
    if (choice.value("finish_reason", "") == "content_filter") throw BackendRefusal("reply withheld by content filter");
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string())
        throw BackendRefusal("response has no message content");
    auto content = choice["message"]["content"].get<std::string>();
    if (text::trim(content).empty()) throw BackendRefusal("empty completion");
    return content;
}

std::string HttpBackend::complete(const ChatRequest& request) {
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

    const auto body = request_body(options_.model, request).dump();
    auto res = client.Post(prefix_ + options_.path, headers, body, "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            throw BackendTimeout(name() + ": " + httplib::to_string(err));
        throw BackendError("backend_unreachable", name() + ": " + httplib::to_string(err));
    }
    if (res->status >= 400 && res->status < 500)
        throw BackendRefusal(name() + ": HTTP " + std::to_string(res->status));
    if (res->status != 200) throw BackendError("backend_http", name() + ": HTTP " + std::to_string(res->status));
    try {
        return reply_from_body(nlohmann::json::parse(res->body));
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("backend_protocol", name() + ": " + e.what());
    }
}

}  // namespace wisemind
