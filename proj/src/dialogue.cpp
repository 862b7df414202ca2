#include "wisemind/dialogue.hpp"

#include "wisemind/error.hpp"
#include "wisemind/tagged.hpp"
#include "wisemind/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <set>

namespace wisemind {

std::string_view to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::active: return "active";
        case SessionStatus::diagnosed: return "diagnosed";
        case SessionStatus::inconclusive: return "inconclusive";
        case SessionStatus::escalated: return "escalated";
    }
    return "active";
}

SessionStatus status_from_string(std::string_view s) {
    for (auto st : {SessionStatus::active, SessionStatus::diagnosed, SessionStatus::inconclusive,
                    SessionStatus::escalated})
        if (s == to_string(st)) return st;
    throw ParseError("malformed_status", "unknown session status '" + std::string(s) + "'");
}

void InterviewConfig::validate() const {
    if (max_turns < 2) throw ConfigError("max_turns must be >= 2");
    if (max_nmi < 0) throw ConfigError("max_nmi must be >= 0");
    if (max_recheck < 0) throw ConfigError("max_recheck must be >= 0");
    if (knowledge_depth < 0) throw ConfigError("knowledge_depth must be >= 0");
    if (!actions.allows(DiagnosticAction::met_criteria) || !actions.allows(DiagnosticAction::not_met_criteria))
        throw ConfigError("action space must contain met_criteria and not_met_criteria");
    if (safety.enabled && !safety.lexicon) throw ConfigError("safety enabled without a risk lexicon");
    generation.validate();
}

DiagnosisOutcome outcome_of(const SessionState& state) {
    DiagnosisOutcome o;
    o.status = state.status;
    o.assessed_nodes = state.assessed;
    o.turn_count = interview_turns(state.history);
    if (state.status == SessionStatus::diagnosed && state.graph)
        o.label = state.graph->node(state.current).diagnosis;
    return o;
}

std::size_t interview_turns(const DialogueHistory& history) {
    const auto n = history.doctor_turns();
    return n == 0 ? 0 : n - 1;
}

std::vector<NodeId> node_sequence(const DialogueHistory& history) {
    std::vector<NodeId> out;
    for (const auto& t : history.turns())
        if (t.speaker == Speaker::doctor && t.node) out.push_back(*t.node);
    return out;
}

RaDecision decide_action(ChatBackend& ra, const KnowledgeGraph& g, const NodeId& node, const DialogueHistory& history,
                         std::string_view patient_response, const DecideOptions& options) {
    const auto& criterion = g.node(node);
    if (criterion.is_leaf()) throw GraphError("leaf_decision", "no decision to make at leaf " + node);

    ReasoningPromptOptions prompt_options;
    prompt_options.knowledge = node_knowledge(g, node, options.knowledge_depth);
    prompt_options.actions = options.actions;
    prompt_options.force_decision = options.force_decision;
    prompt_options.history_window = options.history_window;
    const auto prompt = render_ra_prompt(criterion, history, patient_response, prompt_options);

    ChatRequest req{prompt.system, prompt.human, AgentRole::reasoning, node, options.turn, options.generation};
    const bool forced = options.force_decision;
    const auto actions = options.actions;
    auto parsed = complete_parsed(ra, std::move(req), tags::kReasoningRequired, tags::kReasoningOptional,
                                  [forced, actions](const FieldMap& f) {
                                      const auto a = parse_action(f.at("Action"));
                                      const bool decisive = a == DiagnosticAction::met_criteria ||
                                                            a == DiagnosticAction::not_met_criteria;
                                      if (!actions.allows(a) || (forced && !decisive))
                                          throw ParseError("disallowed_action",
                                                           "action not offered: " + std::string(to_string(a)));
                                  });

    RaDecision d;
    d.action = parse_action(parsed.fields.at("Action"));
    if (auto it = parsed.fields.find("Reason_for_Action"); it != parsed.fields.end()) d.reason = it->second;
    d.calls = parsed.calls;
    return d;
}

std::string generate_question(ChatBackend& ea, const KnowledgeGraph& g, const NodeId& next, DiagnosticAction action,
                              const DialogueHistory& history, std::string_view patient_response,
                              const QuestionOptions& options) {
    const auto& target = g.node(next);
    EmpathyPromptOptions prompt_options{options.directive, options.history_window};
    const auto prompt = render_ea_prompt(target, action, history, patient_response, prompt_options);
    ChatRequest req{prompt.system, prompt.human, AgentRole::empathy, next, options.turn, options.generation};
    auto parsed = complete_parsed(ea, std::move(req), tags::kEmpathyRequired, tags::kEmpathyOptional,
                                  [](const FieldMap& f) {
                                      if (f.at("Response").empty())
                                          throw ParseError("empty_response", "empty <Response>");
                                  });
    auto response = parsed.fields.at("Response");
    if (target.is_leaf()) {
        const auto lower = text::to_lower(response);
        if (lower.find(text::to_lower(*target.diagnosis)) == std::string::npos)
            response += " Assessment outcome: " + *target.diagnosis + ".";
    }
    return response;
}

namespace {

// Identifier-like runs ([A-Za-z0-9_]+), upper-cased.
std::set<std::string> mentioned_ids(std::string_view reason) {
    std::set<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.insert(cur);
        cur.clear();
    };
    for (char c : reason) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
            cur += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        else
            flush();
    }
    flush();
    return out;
}

bool decisively_assessed(const SessionState& s, const NodeId& node) {
    return std::any_of(s.assessed.begin(), s.assessed.end(), [&](const AssessedNode& a) {
        return a.node == node &&
               (a.action == DiagnosticAction::met_criteria || a.action == DiagnosticAction::not_met_criteria);
    });
}

std::string node_topic(const CriterionNode& n) {
    return "[" + n.id + "] " + text::truncate_words(n.description, 25);
}

}  // namespace

NodeId handle_contradiction(SessionState& state, std::string_view reason, int max_recheck) {
    const auto ids = mentioned_ids(reason);
    NodeId target = state.current;
    if (state.path.size() > 1) {
        for (auto it = std::next(state.path.rbegin()); it != state.path.rend(); ++it) {
            auto upper = it->node;
            std::transform(upper.begin(), upper.end(), upper.begin(),
                           [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
            if (ids.count(upper) && decisively_assessed(state, it->node)) {
                target = it->node;
                break;
            }
        }
    }

    auto& count = state.recheck_count[target];
    if (count >= max_recheck) throw RecheckExhausted(target);
    ++count;

    const auto turn_index = state.history.empty() ? 0 : state.history.size() - 1;
    state.contradiction_flags.push_back({turn_index, state.current, target});
    std::erase_if(state.assessed, [&](const AssessedNode& a) { return a.node == target; });

    auto pos = std::find_if(state.path.begin(), state.path.end(),
                            [&](const PathStep& s) { return s.node == target; });
    if (pos != state.path.end()) {
        state.path.erase(std::next(pos), state.path.end());
        state.path.back().branch = Branch::none;
    }
    state.current = target;
    state.nmi_count_at_node = 0;
    return target;
}

SessionStatus check_termination(const SessionState& state, const InterviewConfig& config) {
    if (state.status == SessionStatus::escalated || !state.escalations.empty()) return SessionStatus::escalated;
    if (state.graph && state.graph->node(state.current).is_leaf()) return SessionStatus::diagnosed;
    if (state.recheck_exhausted) return SessionStatus::inconclusive;
    if (interview_turns(state.history) >= config.max_turns) return SessionStatus::inconclusive;
    return SessionStatus::active;
}

Session::Session(std::shared_ptr<const KnowledgeGraph> graph, BackendPtr ra, BackendPtr ea, InterviewConfig config,
                 std::string session_id)
    : ra_(std::move(ra)), ea_(std::move(ea)), config_(std::move(config)) {
    if (!graph) throw ConfigError("session needs a graph");
    if (!ea_) throw ConfigError("session needs an empathy backend");
    config_.validate();
    state_.session_id = std::move(session_id);
    state_.graph = std::move(graph);
    state_.current = state_.graph->root();
    if (!ra_ && !state_.graph->node(state_.current).is_leaf()) throw ConfigError("session needs a reasoning backend");
}

const std::string& Session::start() {
    if (!started()) {
        state_.history.append({Speaker::doctor, config_.greeting, std::nullopt, std::nullopt, 0});
        state_.current = get_start_node(*state_.graph, "");
        state_.path = {{state_.current, Branch::none}};
    }
    return state_.history.turns().front().text;
}

const EscalationRecord& Session::escalate(const RiskAssessment& assessment) {
    if (!assessment.flagged()) throw Error("invalid_escalation", "escalation needs a flagged assessment");
    for (const auto& r : state_.escalations)
        if (r.cause.turn_index == assessment.turn_index) return r;

    EscalationRecord record{state_.session_id, assessment, EscalationAction::safety_stop,
                            state_.history.empty() ? 0 : state_.history.turns().back().timestamp};
    state_.escalations.push_back(record);
    state_.status = SessionStatus::escalated;
    state_.history.append({Speaker::system, std::string(kSafetyMessage), state_.current, std::nullopt, 0});
    if (config_.safety.sink) config_.safety.sink->emit(record);
    spdlog::warn("session {} escalated: {} ('{}')", state_.session_id, to_string(assessment.category),
                 assessment.trigger_text);
    return state_.escalations.back();
}

void Session::record_assessment(const NodeId& node, DiagnosticAction action) {
    for (auto& a : state_.assessed) {
        if (a.node == node) {
            a.action = action;
            return;
        }
    }
    state_.assessed.push_back({node, action});
}

void Session::append_doctor(const NodeId& node, DiagnosticAction action, const std::string& patient_text) {
    QuestionOptions q;
    const auto signal = std::exchange(state_.pending_signal, {});
    if (signal.kind != ImbalanceKind::none && !state_.graph->node(node).is_leaf()) {
        q.directive = adapt_strategy(signal, node_topic(state_.graph->node(node)));
        state_.directives.push_back(q.directive);
    }
    q.history_window = config_.history_window;
    q.generation = config_.generation;
    q.turn = static_cast<int>(state_.history.doctor_turns());
    auto utterance = generate_question(*ea_, *state_.graph, node, action, state_.history, patient_text, q);
    ++state_.ea_calls;
    state_.history.append({Speaker::doctor, std::move(utterance), node, action, 0});
}

Session::Step Session::reply(const std::string& patient_text) {
    if (!started()) throw Error("session_not_started", "call start() before reply()");
    if (terminated())
        throw Error("session_terminated", "session " + state_.session_id + " is " + std::string(to_string(state_.status)));

    auto& history = state_.history;
    const bool first = history.size() == 1;
    history.append({Speaker::patient, patient_text, std::nullopt, std::nullopt, 0});
    if (first) history.set_initial_complaint(patient_text);
    const auto patient_index = history.size() - 1;
    const auto& g = *state_.graph;

    if (config_.safety.enabled) {
        auto risk = assess_risk(patient_text, *config_.safety.lexicon, config_.safety.detector.get(), patient_index);
        if (risk.flagged()) {
            escalate(risk);
            return {std::string(kSafetyMessage), state_.status, true};
        }
        state_.pending_signal = detect_imbalance(patient_text, config_.safety.thresholds);
    }

    if (g.node(state_.current).is_leaf()) {
        append_doctor(state_.current, DiagnosticAction::met_criteria, patient_text);
        state_.status = SessionStatus::diagnosed;
        return {history.turns().back().text, state_.status, false};
    }

    DecideOptions options;
    options.actions = config_.actions;
    options.force_decision = state_.nmi_count_at_node >= config_.max_nmi;
    options.knowledge_depth = config_.knowledge_depth;
    options.history_window = config_.history_window;
    options.generation = config_.generation;
    options.turn = static_cast<int>(history.doctor_turns());

    RaDecision decision;
    try {
        decision = decide_action(*ra_, g, state_.current, history, patient_text, options);
    } catch (const Error& e) {
        spdlog::error("session {} at {} (turn {}): {}", state_.session_id, state_.current, options.turn, e.what());
        throw;
    }
    state_.ra_calls += static_cast<std::size_t>(decision.calls);

    NodeId next;
    switch (decision.action) {
        case DiagnosticAction::met_criteria:
        case DiagnosticAction::not_met_criteria: {
            record_assessment(state_.current, decision.action);
            state_.path.back().branch =
                decision.action == DiagnosticAction::met_criteria ? Branch::yes : Branch::no;
            next = transition(g, state_.current, decision.action);
            state_.path.push_back({next, Branch::none});
            state_.nmi_count_at_node = 0;
            break;
        }
        case DiagnosticAction::needs_more_information:
            ++state_.nmi_count_at_node;
            next = state_.current;
            break;
        case DiagnosticAction::contradiction:
            try {
                next = handle_contradiction(state_, decision.reason, config_.max_recheck);
            } catch (const RecheckExhausted& e) {
                spdlog::info("session {}: {}", state_.session_id, e.what());
                state_.recheck_exhausted = true;
                state_.status = SessionStatus::inconclusive;
                return {std::nullopt, state_.status, false};
            }
            break;
    }
    state_.current = next;

    const auto status = check_termination(state_, config_);
    if (status == SessionStatus::inconclusive) {
        state_.status = status;
        return {std::nullopt, status, false};
    }
    append_doctor(next, decision.action, patient_text);
    state_.status = status;
    return {history.turns().back().text, state_.status, false};
}

InterviewResult run_interview(std::shared_ptr<const KnowledgeGraph> graph, BackendPtr ra, BackendPtr ea,
                              PatientResponder& patient, const InterviewConfig& config, std::string session_id) {
    Session session(std::move(graph), std::move(ra), std::move(ea), config, std::move(session_id));
    session.start();
    while (!session.terminated()) {
        const auto& history = session.state().history;
        session.reply(patient.respond(history.turns().back().text, history));
    }
    return {session.outcome(), session.state()};
}

nlohmann::json to_json(const DiagnosisOutcome& o) {
    nlohmann::json assessed = nlohmann::json::array();
    for (const auto& a : o.assessed_nodes) assessed.push_back({{"node", a.node}, {"action", to_string(a.action)}});
    return {{"label", o.label ? nlohmann::json(*o.label) : nlohmann::json(nullptr)},
            {"status", to_string(o.status)},
            {"assessed_nodes", std::move(assessed)},
            {"turns", o.turn_count}};
}

DiagnosisOutcome outcome_from_json(const nlohmann::json& j) {
    DiagnosisOutcome o;
    if (j.contains("label") && !j.at("label").is_null()) o.label = j.at("label").get<std::string>();
    o.status = status_from_string(j.at("status").get<std::string>());
    for (const auto& a : j.at("assessed_nodes"))
        o.assessed_nodes.push_back({a.at("node").get<std::string>(), parse_action(a.at("action").get<std::string>())});
    o.turn_count = j.at("turns").get<std::size_t>();
    return o;
}

nlohmann::json transcript_json(const std::string& session_id, const std::string& disorder,
                               const DialogueHistory& history, const DiagnosisOutcome& outcome,
                               const std::string& baseline_kind) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : history.turns()) turns.push_back(to_json(t));
    nlohmann::json j{{"session_id", session_id},
                     {"disorder", disorder},
                     {"initial_complaint", history.initial_complaint()},
                     {"turns", std::move(turns)},
                     {"outcome", to_json(outcome)}};
    if (!baseline_kind.empty()) j["baseline_kind"] = baseline_kind;
    return j;
}

DialogueHistory history_from_json(const nlohmann::json& transcript) {
    if (!transcript.is_object() || !transcript.contains("turns") || !transcript.at("turns").is_array())
        throw ParseError("invalid_transcript", "transcript needs a turns array");
    std::vector<Turn> turns;
    for (const auto& t : transcript.at("turns")) turns.push_back(turn_from_json(t));
    return DialogueHistory::restore(std::move(turns), transcript.value("initial_complaint", std::string{}));
}

}  // namespace wisemind
