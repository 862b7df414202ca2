#pragma once

#include "wisemind/dialogue.hpp"
#include "wisemind/graph.hpp"
#include "wisemind/patient.hpp"
#include "wisemind/questionnaire.hpp"
#include "wisemind/safety.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace wisemind {

// How to build a backend for one agent role.
//   oracle   - ground-truth replies (needs a case for the reasoning role)
//   scripted - ScriptedBackend file; "{case}" in the path expands to the case id
//   http     - chat-completion endpoint; url, model and key come from env vars
struct BackendSpec {
    std::string kind = "oracle";
    std::filesystem::path script;
    std::string base_url_env = "CHAT_API_BASE_URL";
    std::string api_key_env = "CHAT_API_KEY";
    std::string model_env = "CHAT_API_MODEL";
    std::optional<std::string> model;  // overrides model_env
};

struct AppConfig {
    std::map<std::string, std::filesystem::path> graphs;  // disorder -> graph file
    std::filesystem::path cases_dir;                      // <case_id>.json files
    std::filesystem::path session_dir = "sessions";
    BackendSpec ra, ea, patient;
    std::optional<BackendSpec> detector;
    GenerationConfig doctor_generation = GenerationConfig::doctor();
    GenerationConfig patient_generation = GenerationConfig::patient();
    bool safety_enabled = true;
    std::filesystem::path lexicon;
    ImbalanceThresholds thresholds;
    std::filesystem::path alert_log;
    std::string alert_webhook;  // optional URL receiving each EscalationRecord
    std::size_t max_turns = 40;
    int max_nmi = 3;
    int max_recheck = 2;
    std::string host = "127.0.0.1";
    int port = 8080;

    // Relative paths resolve against `base_dir`. Rejects any "api_key" field.
    static AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static AppConfig load(const std::filesystem::path& path);

    // Referenced files exist, generation settings in range.
    void validate() const;
};

// Everything a session needs, loaded once.
class Runtime {
public:
    explicit Runtime(AppConfig config);

    const AppConfig& config() const { return config_; }
    std::shared_ptr<const KnowledgeGraph> graph(const std::string& disorder) const;
    std::vector<std::string> disorders() const;
    PatientCase load_case(const std::string& case_id) const;

    // `c` is required for oracle reasoning backends and "{case}" scripts.
    BackendPtr make_backend(const BackendSpec& spec, AgentRole role, const std::shared_ptr<const KnowledgeGraph>& g,
                            const PatientCase* c) const;
    InterviewConfig interview_config() const;

private:
    AppConfig config_;
    std::map<std::string, std::shared_ptr<const KnowledgeGraph>> graphs_;
    std::shared_ptr<const RiskLexicon> lexicon_;
    std::shared_ptr<AlertSink> sink_;
};

// Forwards escalation records to a URL as JSON POSTs; failures are logged.
class WebhookAlertSink final : public AlertSink {
public:
    explicit WebhookAlertSink(std::string url, std::shared_ptr<AlertSink> next = nullptr);
    void emit(const EscalationRecord& record) override;

private:
    std::string url_;
    std::shared_ptr<AlertSink> next_;
};

struct StoredSession {
    std::mutex busy;  // held for the duration of one message
    std::string id;
    std::string disorder;
    std::optional<std::string> case_id;
    std::unique_ptr<Session> session;
    std::vector<std::pair<QuestionnaireResponse, double>> questionnaires;
};

// Live sessions in memory plus one JSON file per session on disk.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path dir);

    // Inserts under a fresh unique id.
    std::shared_ptr<StoredSession> insert(std::string disorder, std::optional<std::string> case_id,
                                          const std::function<std::unique_ptr<Session>(const std::string&)>& make);
    std::shared_ptr<StoredSession> find(const std::string& id) const;

    // Writes atomically (temp file + rename). Caller holds `s.busy`.
    void persist(const StoredSession& s) const;
    std::optional<nlohmann::json> load_persisted(const std::string& id) const;
    std::filesystem::path path_for(const std::string& id) const;

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<StoredSession>> sessions_;
};

nlohmann::json session_json(const StoredSession& s);

class Service {
public:
    struct Response {
        int status = 200;
        nlohmann::json body;
    };

    explicit Service(AppConfig config);

    Response create_session(const nlohmann::json& body);
    Response message(const std::string& id, const nlohmann::json& body);
    Response get_session(const std::string& id);
    Response questionnaire(const std::string& id, const nlohmann::json& body);

    Runtime& runtime() { return runtime_; }
    SessionStore& store() { return store_; }

    // Registers every route on `server`.
    void mount(httplib::Server& server);
    // Blocks until the server stops.
    bool listen();

private:
    Runtime runtime_;
    SessionStore store_;
};

}  // namespace wisemind
