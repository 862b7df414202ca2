#pragma once

#include "wisemind/action.hpp"
#include "wisemind/backend.hpp"
#include "wisemind/graph.hpp"
#include "wisemind/history.hpp"
#include "wisemind/prompts.hpp"
#include "wisemind/safety.hpp"

#include "json.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wisemind {

enum class SessionStatus { active, diagnosed, inconclusive, escalated };

std::string_view to_string(SessionStatus s);
SessionStatus status_from_string(std::string_view s);

struct SafetyOptions {
    bool enabled = false;  // off in benchmark mode
    std::shared_ptr<const RiskLexicon> lexicon;
    BackendPtr detector;  // optional second stage
    ImbalanceThresholds thresholds;
    std::shared_ptr<AlertSink> sink;
};

struct InterviewConfig {
    std::size_t max_turns = 40;  // doctor turns after the greeting
    int max_nmi = 3;
    int max_recheck = 2;
    ActionSpace actions = ActionSpace::full();
    int knowledge_depth = kDefaultKnowledgeDepth;
    std::size_t history_window = kDefaultHistoryWindow;
    std::string greeting{kDefaultGreeting};
    GenerationConfig generation = GenerationConfig::doctor();
    SafetyOptions safety;

    void validate() const;
};

struct AssessedNode {
    NodeId node;
    DiagnosticAction action;

    bool operator==(const AssessedNode&) const = default;
};

struct ContradictionFlag {
    std::size_t turn_index;  // index of the patient turn that was flagged
    NodeId node;             // node under assessment when flagged
    NodeId reentry;
};

struct SessionState {
    std::string session_id;
    std::shared_ptr<const KnowledgeGraph> graph;
    NodeId current;
    NodePath path;  // root .. current
    DialogueHistory history;
    int nmi_count_at_node = 0;
    std::vector<ContradictionFlag> contradiction_flags;
    std::map<NodeId, int> recheck_count;
    std::vector<AssessedNode> assessed;  // ordered, one entry per node
    SessionStatus status = SessionStatus::active;
    bool recheck_exhausted = false;
    std::vector<EscalationRecord> escalations;
    ImbalanceSignal pending_signal;        // turned into a directive for the next question
    std::vector<std::string> directives;   // every directive issued, in order
    std::size_t ra_calls = 0;
    std::size_t ea_calls = 0;
};

struct DiagnosisOutcome {
    std::optional<std::string> label;  // present iff status == diagnosed
    SessionStatus status = SessionStatus::active;
    std::vector<AssessedNode> assessed_nodes;
    std::size_t turn_count = 0;  // doctor turns after the greeting

    bool operator==(const DiagnosisOutcome&) const = default;
};

DiagnosisOutcome outcome_of(const SessionState& state);

// Doctor turns after the greeting.
std::size_t interview_turns(const DialogueHistory& history);

// Node ids probed by doctor turns, in order (greeting excluded).
std::vector<NodeId> node_sequence(const DialogueHistory& history);

// Anything that can answer the doctor: scripted case, generative model, a human.
class PatientResponder {
public:
    virtual ~PatientResponder() = default;
    // The last doctor turn of `history` is the utterance being answered; its
    // node is empty for the greeting.
    virtual std::string respond(const std::string& doctor_utterance, const DialogueHistory& history) = 0;
};

struct RaDecision {
    DiagnosticAction action;
    std::string reason;
    int calls = 0;
};

struct DecideOptions {
    ActionSpace actions = ActionSpace::full();
    bool force_decision = false;
    int knowledge_depth = kDefaultKnowledgeDepth;
    std::size_t history_window = kDefaultHistoryWindow;
    GenerationConfig generation = GenerationConfig::doctor();
    int turn = 0;
};

// One reasoning-agent decision at an internal node. Replies naming an action
// outside the allowed set (or outside met/not_met when forced) are re-prompted.
RaDecision decide_action(ChatBackend& ra, const KnowledgeGraph& g, const NodeId& node, const DialogueHistory& history,
                         std::string_view patient_response, const DecideOptions& options = {});

struct QuestionOptions {
    std::string directive;
    std::size_t history_window = kDefaultHistoryWindow;
    GenerationConfig generation = GenerationConfig::doctor();
    int turn = 0;
};

// Empathy-agent utterance targeting `next`; a closing statement when `next` is a leaf.
std::string generate_question(ChatBackend& ea, const KnowledgeGraph& g, const NodeId& next, DiagnosticAction action,
                              const DialogueHistory& history, std::string_view patient_response,
                              const QuestionOptions& options = {});

// Picks the re-entry node for a contradiction raised at state.current: the most
// recent earlier node on the path that was assessed met/not_met and whose id
// the reason mentions; the current node otherwise. Clears the target's assessed
// entry, truncates the path and records the flag. Throws RecheckExhausted once
// a node has been re-entered max_recheck times.
NodeId handle_contradiction(SessionState& state, std::string_view reason, int max_recheck);

// active, or the terminal status the state has reached.
SessionStatus check_termination(const SessionState& state, const InterviewConfig& config);

// Incremental driver: start() emits the greeting, each reply() consumes one
// patient utterance and returns the next doctor utterance (if any).
class Session {
public:
    Session(std::shared_ptr<const KnowledgeGraph> graph, BackendPtr ra, BackendPtr ea, InterviewConfig config = {},
            std::string session_id = {});

    struct Step {
        std::optional<std::string> doctor_reply;  // absent when the session ended silently
        SessionStatus status = SessionStatus::active;
        bool escalated = false;
    };

    const std::string& start();
    Step reply(const std::string& patient_text);

    // Idempotent per patient turn.
    const EscalationRecord& escalate(const RiskAssessment& assessment);

    const SessionState& state() const { return state_; }
    DiagnosisOutcome outcome() const { return outcome_of(state_); }
    bool started() const { return !state_.history.empty(); }
    bool terminated() const { return state_.status != SessionStatus::active; }
    const InterviewConfig& config() const { return config_; }

private:
    void record_assessment(const NodeId& node, DiagnosticAction action);
    void append_doctor(const NodeId& node, DiagnosticAction action, const std::string& patient_text);

    SessionState state_;
    BackendPtr ra_;
    BackendPtr ea_;
    InterviewConfig config_;
};

struct InterviewResult {
    DiagnosisOutcome outcome;
    SessionState state;
};

InterviewResult run_interview(std::shared_ptr<const KnowledgeGraph> graph, BackendPtr ra, BackendPtr ea,
                              PatientResponder& patient, const InterviewConfig& config = {},
                              std::string session_id = {});

nlohmann::json to_json(const DiagnosisOutcome& o);
DiagnosisOutcome outcome_from_json(const nlohmann::json& j);

// {session_id, disorder, turns, outcome[, baseline_kind]}
nlohmann::json transcript_json(const std::string& session_id, const std::string& disorder,
                               const DialogueHistory& history, const DiagnosisOutcome& outcome,
                               const std::string& baseline_kind = {});
// Inverse of transcript_json for the history part.
DialogueHistory history_from_json(const nlohmann::json& transcript);

}  // namespace wisemind
