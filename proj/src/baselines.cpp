#include "wisemind/baselines.hpp"

#include "wisemind/error.hpp"
#include "wisemind/prompts.hpp"
#include "wisemind/tagged.hpp"
#include "wisemind/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <regex>
#include <set>

namespace wisemind {

std::string_view to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::kfp: return "kfp";
        case BaselineKind::tkep_icl: return "tkep_icl";
        case BaselineKind::tkep_rag: return "tkep_rag";
        case BaselineKind::skep_single: return "skep_single";
    }
    return "kfp";
}

std::optional<BaselineKind> baseline_from_string(std::string_view s) {
    for (auto k : {BaselineKind::kfp, BaselineKind::tkep_icl, BaselineKind::tkep_rag, BaselineKind::skep_single})
        if (text::iequals(s, to_string(k))) return k;
    return std::nullopt;
}

namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words{
        "a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",    "at",
        "be",    "been",  "being", "but",   "by",    "can",   "could", "did",   "do",    "does",  "for",
        "from",  "had",   "has",   "have",  "he",    "her",   "his",   "how",   "i",     "if",    "in",
        "into",  "is",    "it",    "its",   "just",  "me",    "more",  "most",  "my",    "no",    "not",
        "of",    "on",    "or",    "other", "our",   "out",   "she",   "so",    "some",  "such",  "than",
        "that",  "the",   "their", "them",  "then",  "there", "these", "they",  "this",  "those", "to",
        "up",    "very",  "was",   "we",    "were",  "what",  "when",  "which", "while", "who",   "will",
        "with",  "would", "you",   "your",  "criteria", "met",  "patient"};
    return words;
}

std::set<std::string> content_tokens(const std::string& s) {
    std::set<std::string> out;
    for (auto& t : text::tokenize(s))
        if (!stopwords().count(t)) out.insert(std::move(t));
    return out;
}

}  // namespace

double token_overlap_score(const std::string& query, const std::string& chunk) {
    const auto q = content_tokens(query);
    const auto c = content_tokens(chunk);
    if (q.empty() || c.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& t : q) shared += c.count(t);
    return static_cast<double>(shared) / std::sqrt(static_cast<double>(q.size() * c.size()));
}

RetrievalIndex::RetrievalIndex(const KnowledgeGraph& g, std::size_t top_k, RetrievalScorer scorer)
    : top_k_(top_k), scorer_(std::move(scorer)) {
    if (top_k_ == 0) throw ConfigError("top_k must be positive");
    for (const auto& id : g.breadth_first()) {
        const auto& n = g.node(id);
        if (!n.description.empty()) chunks_.push_back({id, n.description});
    }
}

std::vector<RetrievalIndex::Chunk> RetrievalIndex::retrieve(const std::string& query) const {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        const double s = scorer_(query, chunks_[i].text);
        if (s > 0.0) scored.emplace_back(s, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Chunk> out;
    for (std::size_t i = 0; i < scored.size() && i < top_k_; ++i) out.push_back(chunks_[scored[i].second]);
    return out;
}

std::vector<AssessedNode> parse_knowledge_used(const std::string& value, const KnowledgeGraph& g) {
    static const std::regex entry(R"(<?\s*\[?([A-Za-z0-9_]+)\]?\s*,\s*(1|0|true|false|yes|no|met|not_met)\s*>?)",
                                  std::regex::icase);
    std::vector<AssessedNode> out;
    for (auto it = std::sregex_iterator(value.begin(), value.end(), entry); it != std::sregex_iterator(); ++it) {
        const auto id = (*it)[1].str();
        if (!g.contains(id) || g.node(id).is_leaf()) continue;
        const auto flag = text::to_lower((*it)[2].str());
        const bool met = flag == "1" || flag == "true" || flag == "yes" || flag == "met";
        out.push_back({id, met ? DiagnosticAction::met_criteria : DiagnosticAction::not_met_criteria});
    }
    return out;
}

std::string flatten_criteria(const KnowledgeGraph& g, std::uint64_t seed) {
    std::vector<NodeId> ids;
    for (const auto& id : g.breadth_first())
        if (!g.node(id).is_leaf()) ids.push_back(id);
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::string out;
    for (const auto& id : ids) out += "[" + id + "] " + g.node(id).description + "\n";
    if (ids.empty()) {
        // A single-leaf graph still exposes its only outcome.
        out = "[" + g.root() + "] Diagnosis: " + g.node(g.root()).diagnosis.value_or("") + "\n";
    }
    return out;
}

bool is_none_marker(std::string_view decision) {
    const auto t = text::trim(decision);
    return t.empty() || text::iequals(t, "none");
}

namespace {

void note_assessed(std::vector<AssessedNode>& assessed, const AssessedNode& a) {
    for (auto& e : assessed) {
        if (e.node == a.node) {
            e.action = a.action;
            return;
        }
    }
    assessed.push_back(a);
}

std::optional<std::string> match_label(const std::vector<std::string>& labels, const std::string& decision) {
    const auto t = text::trim(decision);
    for (const auto& l : labels)
        if (text::iequals(l, t)) return l;
    return std::nullopt;
}

// Shared driver for the three unstructured regimes.
template <typename Render>
BaselineResult run_free_form(ChatBackend& backend, const std::vector<std::string>& labels, PatientResponder& patient,
                             const BaselineConfig& config, const KnowledgeGraph* g, bool with_knowledge,
                             Render render) {
    BaselineResult result;
    auto& h = result.history;
    h.append({Speaker::doctor, config.greeting, std::nullopt, std::nullopt, 0});
    const auto complaint = patient.respond(config.greeting, h);
    h.append({Speaker::patient, complaint, std::nullopt, std::nullopt, 0});
    h.set_initial_complaint(complaint);

    std::vector<std::string> optional = with_knowledge ? tags::kBaselineOptional : std::vector<std::string>{};
    result.outcome.status = SessionStatus::inconclusive;
    while (interview_turns(h) < config.max_turns) {
        const auto response = h.last_patient_response();
        const PromptPair prompt = render(response, h);
        ChatRequest req{prompt.system, prompt.human, AgentRole::baseline, "",
                        static_cast<int>(interview_turns(h)), config.generation};
        auto parsed = complete_parsed(backend, std::move(req), tags::kBaselineRequired, optional);

        if (g) {
            if (auto it = parsed.fields.find("Knowledge_Used"); it != parsed.fields.end())
                for (const auto& a : parse_knowledge_used(it->second, *g)) note_assessed(result.outcome.assessed_nodes, a);
        }
        h.append({Speaker::doctor, parsed.fields.at("Response"), std::nullopt, std::nullopt, 0});

        const auto& decision = parsed.fields.at("Final_Decision");
        if (!is_none_marker(decision)) {
            result.raw_decision = decision;
            if (auto label = match_label(labels, decision)) {
                result.outcome.label = *label;
                result.outcome.status = SessionStatus::diagnosed;
            } else {
                spdlog::info("baseline decision '{}' is not a known label", decision);
            }
            break;
        }
        const auto answer = patient.respond(h.turns().back().text, h);
        h.append({Speaker::patient, answer, std::nullopt, std::nullopt, 0});
    }
    result.outcome.turn_count = interview_turns(h);
    return result;
}

}  // namespace

BaselineResult run_kfp(ChatBackend& backend, const std::vector<std::string>& labels, PatientResponder& patient,
                       const BaselineConfig& config) {
    if (labels.empty()) throw ConfigError("KFP needs the label set");
    return run_free_form(backend, labels, patient, config, nullptr, false,
                         [&](const std::string& response, const DialogueHistory& h) {
                             return render_kfp_prompt(labels, response, h, config.history_window);
                         });
}

BaselineResult run_tkep(BaselineKind kind, ChatBackend& backend, const KnowledgeGraph& g, PatientResponder& patient,
                        const BaselineConfig& config, const RetrievalIndex* index) {
    const auto labels = g.leaf_labels();
    if (kind == BaselineKind::tkep_icl) {
        const auto criteria = flatten_criteria(g, config.shuffle_seed);
        return run_free_form(backend, labels, patient, config, &g, true,
                             [&](const std::string& response, const DialogueHistory& h) {
                                 return render_tkep_icl_prompt(labels, response, h, criteria, config.history_window);
                             });
    }
    if (kind != BaselineKind::tkep_rag) throw ConfigError("run_tkep takes tkep_icl or tkep_rag");

    std::optional<RetrievalIndex> owned;
    if (!index) index = &owned.emplace(g, config.top_k);
    std::string ids;
    for (const auto& c : index->chunks()) ids += (ids.empty() ? "" : ", ") + c.node;
    return run_free_form(backend, labels, patient, config, &g, true,
                         [&](const std::string& response, const DialogueHistory& h) {
                             std::string context;
                             for (const auto& c : index->retrieve(response))
                                 context += "[" + c.node + "] " + c.text + "\n";
                             return render_tkep_rag_prompt(labels, response, h, "node ids " + ids, context,
                                                           config.history_window);
                         });
}

BaselineResult run_skep_single(ChatBackend& backend, std::shared_ptr<const KnowledgeGraph> graph,
                               PatientResponder& patient, const BaselineConfig& config) {
    if (!graph) throw ConfigError("single agent needs a graph");
    const auto& g = *graph;
    SessionState state;
    state.graph = graph;
    state.current = get_start_node(g, "");
    state.path = {{state.current, Branch::none}};
    auto& h = state.history;
    h.append({Speaker::doctor, config.greeting, std::nullopt, std::nullopt, 0});

    BaselineResult result;
    while (state.status == SessionStatus::active) {
        const auto answer = patient.respond(h.turns().back().text, h);
        h.append({Speaker::patient, answer, std::nullopt, std::nullopt, 0});
        if (h.size() == 2) h.set_initial_complaint(answer);

        const auto& node = g.node(state.current);
        if (node.is_leaf()) {
            state.status = SessionStatus::diagnosed;
            break;
        }

        ActionSpace offered = config.actions;
        const bool forced = state.nmi_count_at_node >= config.max_nmi;
        if (forced) {
            offered = ActionSpace{}.with(DiagnosticAction::met_criteria).with(DiagnosticAction::not_met_criteria);
        }
        const auto prompt = render_single_agent_prompt(node, node_knowledge(g, node.id, config.knowledge_depth), h,
                                                       answer, offered, config.history_window);
        ChatRequest req{prompt.system, prompt.human, AgentRole::baseline, node.id,
                        static_cast<int>(interview_turns(h)), config.generation};
        auto parsed = complete_parsed(backend, std::move(req), tags::kSingleAgentRequired, tags::kSingleAgentOptional,
                                      [offered](const FieldMap& f) {
                                          const auto a = parse_action(f.at("Action"));
                                          if (!offered.allows(a))
                                              throw ParseError("disallowed_action", "action not offered");
                                          if (text::trim(f.at("Response")).empty())
                                              throw ParseError("empty_response", "empty <Response>");
                                      });
        const auto action = parse_action(parsed.fields.at("Action"));
        std::string reason;
        if (auto it = parsed.fields.find("Reason_for_Action"); it != parsed.fields.end()) reason = it->second;

        NodeId next = state.current;
        switch (action) {
            case DiagnosticAction::met_criteria:
            case DiagnosticAction::not_met_criteria:
                note_assessed(state.assessed, {state.current, action});
                state.path.back().branch = action == DiagnosticAction::met_criteria ? Branch::yes : Branch::no;
                next = transition(g, state.current, action);
                state.path.push_back({next, Branch::none});
                state.nmi_count_at_node = 0;
                break;
            case DiagnosticAction::needs_more_information:
                ++state.nmi_count_at_node;
                break;
            case DiagnosticAction::contradiction:
                try {
                    next = handle_contradiction(state, reason, config.max_recheck);
                } catch (const RecheckExhausted&) {
                    state.recheck_exhausted = true;
                    state.status = SessionStatus::inconclusive;
                    continue;
                }
                break;
        }
        state.current = next;

        const auto& target = g.node(next);
        if (!target.is_leaf() && interview_turns(h) >= config.max_turns) {
            state.status = SessionStatus::inconclusive;
            break;
        }
        auto utterance = parsed.fields.at("Response");
        if (target.is_leaf() &&
            text::to_lower(utterance).find(text::to_lower(*target.diagnosis)) == std::string::npos)
            utterance += " Assessment outcome: " + *target.diagnosis + ".";
        h.append({Speaker::doctor, std::move(utterance), next, action, 0});
        if (target.is_leaf()) state.status = SessionStatus::diagnosed;
    }

    result.outcome.status = state.status;
    result.outcome.assessed_nodes = state.assessed;
    result.outcome.turn_count = interview_turns(h);
    if (state.status == SessionStatus::diagnosed) result.outcome.label = g.node(state.current).diagnosis;
    result.history = std::move(h);
    return result;
}

}  // namespace wisemind
