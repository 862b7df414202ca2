#include "wisemind/patient.hpp"

#include "wisemind/error.hpp"
#include "wisemind/prompts.hpp"
#include "wisemind/text.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

namespace wisemind {

std::string_view to_string(OverlayKind k) {
    switch (k) {
        case OverlayKind::generic: return "generic";
        case OverlayKind::contradiction: return "contradiction";
        case OverlayKind::under_talking: return "under_talking";
        case OverlayKind::over_talking: return "over_talking";
        case OverlayKind::risk: return "risk";
    }
    return "generic";
}

OverlayKind overlay_kind_from_string(std::string_view s) {
    for (auto k : {OverlayKind::generic, OverlayKind::contradiction, OverlayKind::under_talking,
                   OverlayKind::over_talking, OverlayKind::risk})
        if (text::iequals(s, to_string(k))) return k;
    throw ParseError("malformed_overlay", "unknown overlay kind '" + std::string(s) + "'");
}

const CaseStep* PatientCase::step(const NodeId& node) const {
    for (const auto& s : path)
        if (s.node == node) return &s;
    return nullptr;
}

std::set<NodeId> PatientCase::critical_nodes() const {
    std::set<NodeId> out;
    for (const auto& s : path) out.insert(s.node);
    return out;
}

std::string PatientCase::complaint() const {
    if (!path.empty()) {
        if (auto it = stories.find(path.front().node); it != stories.end()) return it->second;
    }
    return std::string(kDefaultComplaint);
}

void validate_case(const KnowledgeGraph& g, const PatientCase& c) {
    auto fail = [&](const std::string& what) { throw GraphError("invalid_case", c.case_id + ": " + what); };
    NodeId at = g.root();
    for (const auto& s : c.path) {
        if (s.node != at) fail("path expects " + at + " but lists " + s.node);
        const auto& n = g.node(at);
        if (n.is_leaf()) fail("path continues past leaf " + at);
        const auto& child = s.met ? n.yes_child : n.no_child;
        if (!child) fail("node " + at + " has no " + (s.met ? "yes" : "no") + " branch");
        auto story = c.stories.find(s.node);
        if (story == c.stories.end()) fail("no story for " + s.node);
        if (text::word_count(story->second) > kStoryWordCap) fail("story for " + s.node + " exceeds word cap");
        at = *child;
    }
    const auto& last = g.node(at);
    if (!last.is_leaf()) fail("path ends at internal node " + at);
    if (*last.diagnosis != c.label) fail("path reaches '" + *last.diagnosis + "', label is '" + c.label + "'");
    for (const auto& o : c.overlays) {
        if (!g.contains(o.at_node)) fail("overlay at unknown node " + o.at_node);
        if (o.refers_to && !g.contains(*o.refers_to)) fail("overlay refers to unknown node " + *o.refers_to);
    }
}

nlohmann::json to_json(const PatientCase& c) {
    nlohmann::json path = nlohmann::json::array();
    for (const auto& s : c.path) path.push_back({{"node", s.node}, {"met", s.met}});
    nlohmann::json j{{"case_id", c.case_id},
                     {"disorder", c.disorder},
                     {"label", c.label},
                     {"path", std::move(path)},
                     {"stories", c.stories}};
    if (!c.overlays.empty()) {
        auto& arr = j["overlays"] = nlohmann::json::array();
        for (const auto& o : c.overlays) {
            nlohmann::json e{{"at_node", o.at_node}, {"replacement_text", o.replacement_text},
                             {"kind", to_string(o.kind)}};
            if (o.refers_to) e["refers_to"] = *o.refers_to;
            arr.push_back(std::move(e));
        }
    }
    return j;
}

PatientCase case_from_json(const nlohmann::json& j) {
    try {
        PatientCase c;
        c.case_id = j.at("case_id").get<std::string>();
        c.disorder = j.at("disorder").get<std::string>();
        c.label = j.at("label").get<std::string>();
        for (const auto& s : j.at("path")) c.path.push_back({s.at("node").get<std::string>(), s.at("met").get<bool>()});
        c.stories = j.at("stories").get<std::map<std::string, std::string>>();
        if (j.contains("overlays")) {
            for (const auto& o : j.at("overlays")) {
                Overlay ov;
                ov.at_node = o.at("at_node").get<std::string>();
                ov.replacement_text = o.at("replacement_text").get<std::string>();
                if (o.contains("kind")) ov.kind = overlay_kind_from_string(o.at("kind").get<std::string>());
                if (o.contains("refers_to") && !o.at("refers_to").is_null())
                    ov.refers_to = o.at("refers_to").get<std::string>();
                c.overlays.push_back(std::move(ov));
            }
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("case_schema", std::string("case document: ") + e.what());
    }
}

PatientCase load_case_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open case file " + path.string());
    try {
        return case_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("case_schema", path.string() + ": " + e.what());
    }
}

void save_case_file(const PatientCase& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write case file " + path.string());
    out << to_json(c).dump(2) << '\n';
}

std::vector<CaseStep> case_path_to(const KnowledgeGraph& g, const NodeId& leaf) {
    if (!g.node(leaf).is_leaf()) throw GraphError("not_a_leaf", leaf + " is not a leaf");
    std::vector<CaseStep> out;
    for (const auto& step : g.path_to(leaf))
        if (step.branch != Branch::none) out.push_back({step.node, step.branch == Branch::yes});
    return out;
}

PatientCase generate_case(const KnowledgeGraph& g, const NodeId& target_leaf, ChatBackend& story_backend,
                          const CaseGenConfig& config, std::string case_id) {
    PatientCase c;
    c.case_id = case_id.empty() ? g.disorder() + "-" + target_leaf : std::move(case_id);
    c.disorder = g.disorder();
    c.label = *g.node(target_leaf).diagnosis;
    c.path = case_path_to(g, target_leaf);

    std::string memo;
    for (const auto& step : c.path) {
        const auto& n = g.node(step.node);
        const auto prompt = render_story_prompt(n.id, n.description, step.met, memo);
        ChatRequest req{prompt.system, prompt.human, AgentRole::story, n.id, 0, config.generation};
        std::string story;
        for (int attempt = 0; attempt <= config.regenerations; ++attempt) {
            story = text::trim(story_backend.complete(req));
            if (text::word_count(story) <= config.word_cap) break;
        }
        if (text::word_count(story) > config.word_cap) {
            spdlog::warn("{}: story for {} over {} words after regeneration, truncating", c.case_id, n.id,
                         config.word_cap);
            story = text::truncate_words(story, config.word_cap);
        }
        if (!memo.empty()) memo += " ";
        memo += story;
        c.stories[n.id] = std::move(story);
    }
    return c;
}

std::vector<PatientCase> generate_cases(const std::vector<std::shared_ptr<const KnowledgeGraph>>& graphs,
                                        std::size_t total, ChatBackend& story_backend, const CaseGenConfig& config) {
    if (graphs.empty()) throw ConfigError("no graphs to generate cases from");
    std::vector<std::vector<NodeId>> leaves;
    for (const auto& g : graphs) leaves.push_back(g->leaves());
    std::vector<std::size_t> next(graphs.size(), 0);

    std::vector<PatientCase> out;
    out.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        const auto gi = i % graphs.size();
        const auto& g = *graphs[gi];
        const auto n = next[gi]++;
        const auto& leaf = leaves[gi][n % leaves[gi].size()];
        char id[64];
        std::snprintf(id, sizeof id, "%s-%03zu", g.disorder().c_str(), n + 1);
        out.push_back(generate_case(g, leaf, story_backend, config, id));
    }
    return out;
}

BackendPtr make_template_story_backend(std::shared_ptr<const KnowledgeGraph> graph) {
    return std::make_shared<CallbackBackend>(
        [graph](const ChatRequest& req) {
            const auto& n = graph->node(req.node);
            const bool met = req.human.find("You do not have this symptom") == std::string::npos;
            const auto detail = text::truncate_words(n.description, 70);
            if (met) return "Yes, this has been part of my life lately. Thinking about it honestly: " + detail;
            return "No, I can't say that applies to me. When I think about it: " + detail + " That isn't me.";
        },
        "template-story");
}

std::optional<NodeId> probed_node(const DialogueHistory& history) {
    for (auto it = history.turns().rbegin(); it != history.turns().rend(); ++it)
        if (it->speaker == Speaker::doctor) return it->node;
    return std::nullopt;
}

std::string ScriptedPatient::respond_scripted(const std::optional<NodeId>& node) const {
    if (!node) return case_.complaint();
    if (case_.step(*node)) {
        if (auto it = case_.stories.find(*node); it != case_.stories.end()) return it->second;
    }
    return std::string(kOffPathDenial);
}

std::string ScriptedPatient::respond(const std::string&, const DialogueHistory& history) {
    const bool greeting = history.doctor_turns() <= 1;
    auto node = probed_node(history);
    if (greeting && !node && !case_.path.empty()) node = case_.path.front().node;

    if (node) {
        for (std::size_t i = 0; i < case_.overlays.size(); ++i) {
            if (case_.overlays[i].at_node == *node && !served_.count(i)) {
                served_.insert(i);
                return case_.overlays[i].replacement_text;
            }
        }
    }
    if (greeting) return case_.complaint();
    if (node) return respond_scripted(node);

    // Node-less doctor turns: tell the remaining stories in path order.
    while (narrated_ < case_.path.size()) {
        const auto& id = case_.path[narrated_++].node;
        if (auto it = case_.stories.find(id); it != case_.stories.end()) return it->second;
    }
    return std::string(kNothingToAdd);
}

GenerativePatient::GenerativePatient(PatientCase c, BackendPtr backend, std::size_t history_window,
                                     GenerationConfig generation)
    : case_(std::move(c)), backend_(std::move(backend)), window_(history_window), generation_(generation) {
    if (!backend_) throw ConfigError("generative patient needs a backend");
}

std::string GenerativePatient::respond(const std::string& doctor_utterance, const DialogueHistory& history) {
    return respond_generative(case_, history, doctor_utterance, *backend_, window_, generation_);
}

std::string respond_generative(const PatientCase& c, const DialogueHistory& history,
                               const std::string& doctor_utterance, ChatBackend& backend,
                               std::size_t history_window, const GenerationConfig& generation) {
    const auto node = probed_node(history);
    std::string story;
    if (!node) {
        story = c.complaint();
    } else if (auto it = c.stories.find(*node); it != c.stories.end() && c.step(*node)) {
        story = it->second;
    } else {
        story = "You have not experienced what the doctor is asking about.";
    }
    const auto prompt = render_roleplay_prompt(story, history.memo(history_window), doctor_utterance);
    ChatRequest req{prompt.system, prompt.human, AgentRole::patient, node.value_or(""),
                    static_cast<int>(history.doctor_turns()), generation};
    return text::trim(backend.complete(req));
}

}  // namespace wisemind
