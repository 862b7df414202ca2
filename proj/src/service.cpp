#include "wisemind/service.hpp"

#include "wisemind/error.hpp"
#include "wisemind/oracle.hpp"

#include "httplib.h"

#include <spdlog/spdlog.h>

#include <fstream>
#include <random>
#include <sstream>

namespace wisemind {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

void reject_secrets(const json& j, const std::string& where) {
    if (!j.is_object()) return;
    for (const auto& [k, v] : j.items()) {
        if (k == "api_key" || k == "apiKey" || k == "key")
            throw ConfigError(where + "." + k + ": API keys are read from environment variables only");
        reject_secrets(v, where + "." + k);
    }
}

BackendSpec backend_from_json(const json& j, const fs::path& base) {
    BackendSpec s;
    if (j.is_string()) {
        s.kind = j.get<std::string>();
        return s;
    }
    if (!j.is_object()) throw ConfigError("backend entry must be a string or an object");
    s.kind = j.value("kind", s.kind);
    if (j.contains("script")) s.script = resolve(base, j.at("script").get<std::string>());
    s.base_url_env = j.value("base_url_env", s.base_url_env);
    s.api_key_env = j.value("api_key_env", s.api_key_env);
    s.model_env = j.value("model_env", s.model_env);
    if (j.contains("model")) s.model = j.at("model").get<std::string>();
    if (s.kind != "oracle" && s.kind != "scripted" && s.kind != "http")
        throw ConfigError("unknown backend kind '" + s.kind + "'");
    if (s.kind == "scripted" && s.script.empty()) throw ConfigError("scripted backend needs a script path");
    return s;
}

void generation_from_json(const json& j, GenerationConfig& g) {
    g.temperature = j.value("temperature", g.temperature);
    g.max_output_tokens = j.value("max_output_tokens", g.max_output_tokens);
    g.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(g.timeout.count())));
    g.retry_limit = j.value("retry_limit", g.retry_limit);
}

Service::Response error_response(int status, const std::string& kind, const std::string& message) {
    return {status, json{{"error", kind}, {"message", message}}};
}

std::string fresh_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::ostringstream os;
    os << std::hex << rng();
    return "s" + os.str();
}

}  // namespace

AppConfig AppConfig::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_secrets(j, "config");
    AppConfig c;
    try {
        for (const auto& [disorder, path] : j.at("graphs").items())
            c.graphs[disorder] = resolve(base_dir, path.get<std::string>());
        if (j.contains("cases_dir")) c.cases_dir = resolve(base_dir, j.at("cases_dir").get<std::string>());
        c.session_dir = resolve(base_dir, j.value("session_dir", std::string("sessions")));
        if (j.contains("backends")) {
            const auto& b = j.at("backends");
            if (b.contains("reasoning")) c.ra = backend_from_json(b.at("reasoning"), base_dir);
            if (b.contains("empathy")) c.ea = backend_from_json(b.at("empathy"), base_dir);
            if (b.contains("patient")) c.patient = backend_from_json(b.at("patient"), base_dir);
            if (b.contains("detector") && !b.at("detector").is_null())
                c.detector = backend_from_json(b.at("detector"), base_dir);
        }
        if (j.contains("generation")) {
            const auto& g = j.at("generation");
            if (g.contains("doctor")) generation_from_json(g.at("doctor"), c.doctor_generation);
            if (g.contains("patient")) generation_from_json(g.at("patient"), c.patient_generation);
        }
        if (j.contains("safety")) {
            const auto& s = j.at("safety");
            c.safety_enabled = s.value("enabled", c.safety_enabled);
            if (s.contains("lexicon")) c.lexicon = resolve(base_dir, s.at("lexicon").get<std::string>());
            c.thresholds.under_words = s.value("under_words", c.thresholds.under_words);
            c.thresholds.over_words = s.value("over_words", c.thresholds.over_words);
            if (s.contains("alert_log")) c.alert_log = resolve(base_dir, s.at("alert_log").get<std::string>());
            c.alert_webhook = s.value("alert_webhook", c.alert_webhook);
        }
        if (j.contains("limits")) {
            const auto& l = j.at("limits");
            c.max_turns = l.value("max_turns", c.max_turns);
            c.max_nmi = l.value("max_nmi", c.max_nmi);
            c.max_recheck = l.value("max_recheck", c.max_recheck);
        }
        if (j.contains("server")) {
            c.host = j.at("server").value("host", c.host);
            c.port = j.at("server").value("port", c.port);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

AppConfig AppConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void AppConfig::validate() const {
    if (graphs.empty()) throw ConfigError("config lists no graphs");
    for (const auto& [d, p] : graphs)
        if (!fs::exists(p)) throw ConfigError("graph file for " + d + " not found: " + p.string());
    if (!cases_dir.empty() && !fs::is_directory(cases_dir))
        throw ConfigError("cases_dir not found: " + cases_dir.string());
    if (safety_enabled && lexicon.empty()) throw ConfigError("safety enabled but no lexicon configured");
    if (!lexicon.empty() && !fs::exists(lexicon)) throw ConfigError("lexicon not found: " + lexicon.string());
    for (const auto* b : {&ra, &ea, &patient})
        if (b->kind == "scripted" && b->script.string().find("{case}") == std::string::npos && !fs::exists(b->script))
            throw ConfigError("script not found: " + b->script.string());
    doctor_generation.validate();
    patient_generation.validate();
    if (max_nmi < 1 || max_recheck < 0 || max_turns == 0) throw ConfigError("limits out of range");
}

Runtime::Runtime(AppConfig config) : config_(std::move(config)) {
    config_.validate();
    for (const auto& [d, p] : config_.graphs) graphs_[d] = std::make_shared<const KnowledgeGraph>(load_graph_file(p));
    if (!config_.lexicon.empty()) lexicon_ = std::make_shared<const RiskLexicon>(RiskLexicon::load(config_.lexicon));
    std::shared_ptr<AlertSink> sink;
    if (!config_.alert_log.empty()) sink = std::make_shared<FileAlertSink>(config_.alert_log);
    if (!config_.alert_webhook.empty()) sink = std::make_shared<WebhookAlertSink>(config_.alert_webhook, sink);
    sink_ = sink ? sink : std::make_shared<MemoryAlertSink>();
}

std::shared_ptr<const KnowledgeGraph> Runtime::graph(const std::string& disorder) const {
    auto it = graphs_.find(disorder);
    if (it == graphs_.end()) throw Error("unknown_disorder", "no graph for disorder '" + disorder + "'");
    return it->second;
}

std::vector<std::string> Runtime::disorders() const {
    std::vector<std::string> out;
    for (const auto& [d, g] : graphs_) out.push_back(d);
    return out;
}

PatientCase Runtime::load_case(const std::string& case_id) const {
    if (config_.cases_dir.empty()) throw ConfigError("no cases_dir configured");
    if (case_id.find('/') != std::string::npos || case_id.find("..") != std::string::npos)
        throw Error("unknown_case", "invalid case id '" + case_id + "'");
    const auto path = config_.cases_dir / (case_id + ".json");
    if (!fs::exists(path)) throw Error("unknown_case", "no case file for '" + case_id + "'");
    return load_case_file(path);
}

BackendPtr Runtime::make_backend(const BackendSpec& spec, AgentRole role,
                                 const std::shared_ptr<const KnowledgeGraph>& g, const PatientCase* c) const {
    if (spec.kind == "oracle") {
        switch (role) {
            case AgentRole::reasoning:
                if (!c) throw ConfigError("oracle reasoning backend needs a case");
                return oracle::reasoning(*c);
            case AgentRole::empathy: return oracle::empathy(g);
            case AgentRole::story: return make_template_story_backend(g);
            default: throw ConfigError("no oracle for role " + std::string(to_string(role)));
        }
    }
    if (spec.kind == "scripted") {
        auto path = spec.script.string();
        if (auto pos = path.find("{case}"); pos != std::string::npos) {
            if (!c) throw ConfigError("script path uses {case} but no case was given");
            path.replace(pos, 6, c->case_id);
        }
        return std::make_shared<ScriptedBackend>(ScriptedBackend::load_entries_file(path), "scripted:" + path);
    }
    auto options = HttpBackend::options_from_env(spec.base_url_env, spec.api_key_env, spec.model_env);
    if (spec.model) options.model = *spec.model;
    if (options.base_url.empty()) throw ConfigError("environment variable " + spec.base_url_env + " is not set");
    return std::make_shared<HttpBackend>(options);
}

InterviewConfig Runtime::interview_config() const {
    InterviewConfig ic;
    ic.max_turns = config_.max_turns;
    ic.max_nmi = config_.max_nmi;
    ic.max_recheck = config_.max_recheck;
    ic.generation = config_.doctor_generation;
    ic.safety.enabled = config_.safety_enabled;
    ic.safety.lexicon = lexicon_;
    ic.safety.thresholds = config_.thresholds;
    ic.safety.sink = sink_;
    if (config_.detector) ic.safety.detector = make_backend(*config_.detector, AgentRole::detector, nullptr, nullptr);
    return ic;
}

WebhookAlertSink::WebhookAlertSink(std::string url, std::shared_ptr<AlertSink> next)
    : url_(std::move(url)), next_(std::move(next)) {}

void WebhookAlertSink::emit(const EscalationRecord& record) {
    if (next_) next_->emit(record);
    const auto scheme = url_.find("://");
    const auto slash = url_.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    const auto origin = slash == std::string::npos ? url_ : url_.substr(0, slash);
    const auto path = slash == std::string::npos ? std::string("/") : url_.substr(slash);
    try {
        httplib::Client cli(origin);
        cli.set_connection_timeout(std::chrono::seconds(5));
        auto res = cli.Post(path, to_json(record).dump(), "application/json");
        if (!res || res->status >= 300)
            spdlog::error("alert webhook {} failed for session {}", url_, record.session_id);
    } catch (const std::exception& e) {
        spdlog::error("alert webhook {}: {}", url_, e.what());
    }
}

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::shared_ptr<StoredSession> SessionStore::insert(
    std::string disorder, std::optional<std::string> case_id,
    const std::function<std::unique_ptr<Session>(const std::string&)>& make) {
    auto s = std::make_shared<StoredSession>();
    s->disorder = std::move(disorder);
    s->case_id = std::move(case_id);
    {
        std::lock_guard lock(mu_);
        do s->id = fresh_id();
        while (sessions_.count(s->id) || fs::exists(path_for(s->id)));
        sessions_[s->id] = s;
    }
    try {
        s->session = make(s->id);
    } catch (...) {
        std::lock_guard lock(mu_);
        sessions_.erase(s->id);
        throw;
    }
    return s;
}

std::shared_ptr<StoredSession> SessionStore::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

fs::path SessionStore::path_for(const std::string& id) const { return dir_ / (id + ".json"); }

void SessionStore::persist(const StoredSession& s) const {
    const auto path = path_for(s.id);
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("persist_failed", "cannot write " + tmp.string());
        out << session_json(s).dump(2);
        out.flush();
        if (!out) throw Error("persist_failed", "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::optional<json> SessionStore::load_persisted(const std::string& id) const {
    if (id.find('/') != std::string::npos || id.find("..") != std::string::npos) return std::nullopt;
    std::ifstream in(path_for(id));
    if (!in) return std::nullopt;
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        spdlog::error("persisted session {} unreadable: {}", id, e.what());
        return std::nullopt;
    }
}

json session_json(const StoredSession& s) {
    const auto& st = s.session->state();
    auto j = transcript_json(s.id, s.disorder, st.history, outcome_of(st));
    j["status"] = to_string(st.status);
    if (s.case_id) j["case_id"] = *s.case_id;

    json path = json::array();
    for (const auto& p : st.path) path.push_back({{"node", p.node}, {"branch", to_string(p.branch)}});
    json assessed = json::array();
    for (const auto& a : st.assessed) assessed.push_back({{"node", a.node}, {"action", to_string(a.action)}});
    json flags = json::array();
    for (const auto& f : st.contradiction_flags)
        flags.push_back({{"turn_index", f.turn_index}, {"node", f.node}, {"reentry", f.reentry}});
    json escalations = json::array();
    for (const auto& e : st.escalations) escalations.push_back(to_json(e));
    j["state"] = {{"current", st.current},
                  {"path", std::move(path)},
                  {"assessed", std::move(assessed)},
                  {"nmi_count_at_node", st.nmi_count_at_node},
                  {"contradiction_flags", std::move(flags)},
                  {"recheck_count", st.recheck_count},
                  {"escalations", std::move(escalations)},
                  {"directives", st.directives}};
    json qs = json::array();
    for (const auto& [r, score] : s.questionnaires) {
        auto q = to_json(r);
        q["score"] = score;
        qs.push_back(std::move(q));
    }
    j["questionnaires"] = std::move(qs);
    j["escalated"] = !st.escalations.empty();
    return j;
}

Service::Service(AppConfig config) : runtime_(std::move(config)), store_(runtime_.config().session_dir) {}

Service::Response Service::create_session(const json& body) {
    if (!body.is_object() || !body.contains("disorder") || !body.at("disorder").is_string())
        return error_response(400, "bad_request", "body needs a disorder string");
    const auto disorder = body.at("disorder").get<std::string>();
    std::optional<std::string> case_id;
    if (body.contains("case_id")) {
        if (!body.at("case_id").is_string()) return error_response(400, "bad_request", "case_id must be a string");
        case_id = body.at("case_id").get<std::string>();
    }
    try {
        auto g = runtime_.graph(disorder);
        std::optional<PatientCase> c;
        if (case_id) {
            c = runtime_.load_case(*case_id);
            if (c->disorder != disorder)
                return error_response(400, "bad_request", "case " + *case_id + " is for " + c->disorder);
        }
        const PatientCase* cp = c ? &*c : nullptr;
        auto stored = store_.insert(disorder, case_id, [&](const std::string& id) {
            auto ra = runtime_.make_backend(runtime_.config().ra, AgentRole::reasoning, g, cp);
            auto ea = runtime_.make_backend(runtime_.config().ea, AgentRole::empathy, g, cp);
            return std::make_unique<Session>(g, ra, ea, runtime_.interview_config(), id);
        });
        std::lock_guard lock(stored->busy);
        const auto greeting = stored->session->start();
        store_.persist(*stored);
        spdlog::info("session {} created for {}", stored->id, disorder);
        return {201, json{{"session_id", stored->id}, {"greeting", greeting}}};
    } catch (const Error& e) {
        const int status = e.kind() == "unknown_disorder" || e.kind() == "unknown_case" ? 404 : 400;
        return error_response(status, e.kind(), e.what());
    }
}

Service::Response Service::message(const std::string& id, const json& body) {
    if (!body.is_object() || !body.contains("text") || !body.at("text").is_string())
        return error_response(400, "bad_request", "body needs a text string");
    auto stored = store_.find(id);
    if (!stored) {
        if (auto persisted = store_.load_persisted(id); persisted && persisted->value("status", "") != "active")
            return error_response(409, "session_terminated", "session " + id + " has ended");
        return error_response(404, "unknown_session", "no live session " + id);
    }
    std::unique_lock lock(stored->busy, std::try_to_lock);
    if (!lock.owns_lock()) return error_response(409, "session_busy", "a message for session " + id + " is in flight");
    if (stored->session->terminated())
        return error_response(409, "session_terminated", "session " + id + " has ended");
    try {
        auto step = stored->session->reply(body.at("text").get<std::string>());
        store_.persist(*stored);
        json out{{"status", to_string(step.status)}, {"escalated", step.escalated}};
        out["doctor_reply"] = step.doctor_reply ? json(*step.doctor_reply) : json(nullptr);
        if (step.status != SessionStatus::active) out["outcome"] = to_json(stored->session->outcome());
        return {200, std::move(out)};
    } catch (const Error& e) {
        store_.persist(*stored);
        spdlog::error("session {}: {}", id, e.what());
        return error_response(502, e.kind(), e.what());
    }
}

Service::Response Service::get_session(const std::string& id) {
    if (auto stored = store_.find(id)) {
        std::lock_guard lock(stored->busy);
        return {200, session_json(*stored)};
    }
    if (auto persisted = store_.load_persisted(id)) return {200, std::move(*persisted)};
    return error_response(404, "unknown_session", "no session " + id);
}

Service::Response Service::questionnaire(const std::string& id, const json& body) {
    auto stored = store_.find(id);
    if (!stored) return error_response(404, "unknown_session", "no live session " + id);
    try {
        auto r = questionnaire_from_json(body, id);
        const double score = score_questionnaire(r);
        std::lock_guard lock(stored->busy);
        stored->questionnaires.emplace_back(std::move(r), score);
        store_.persist(*stored);
        return {200, json{{"score", score}}};
    } catch (const Error& e) {
        return error_response(422, e.kind(), e.what());
    }
}

void Service::mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse = [](const httplib::Request& req) {
        if (req.body.empty()) return json::object();
        return json::parse(req.body, nullptr, false);
    };
    auto bad_json = [&](httplib::Response& res) { send(res, error_response(400, "bad_request", "body is not JSON")); };

    server.Get("/healthz", [send](const httplib::Request&, httplib::Response& res) {
        send(res, {200, json{{"status", "ok"}}});
    });
    server.Get("/questionnaires", [send](const httplib::Request&, httplib::Response& res) {
        send(res, {200, questionnaires_json()});
    });
    server.Get("/disorders", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, {200, runtime_.disorders()});
    });
    server.Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse(req);
        if (body.is_discarded()) return bad_json(res);
        send(res, create_session(body));
    });
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/message)", [=, this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse(req);
        if (body.is_discarded()) return bad_json(res);
        send(res, message(req.matches[1], body));
    });
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/questionnaire)",
                [=, this](const httplib::Request& req, httplib::Response& res) {
                    auto body = parse(req);
                    if (body.is_discarded()) return bad_json(res);
                    send(res, questionnaire(req.matches[1], body));
                });
    server.Get(R"(/sessions/([A-Za-z0-9_-]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
        send(res, get_session(req.matches[1]));
    });
    server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, error_response(500, "internal", what));
    });
}

bool Service::listen() {
    httplib::Server server;
    mount(server);
    spdlog::info("listening on {}:{}", runtime_.config().host, runtime_.config().port);
    return server.listen(runtime_.config().host, runtime_.config().port);
}

}  // namespace wisemind
