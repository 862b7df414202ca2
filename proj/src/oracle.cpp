#include "wisemind/oracle.hpp"

#include "wisemind/error.hpp"
#include "wisemind/text.hpp"

#include <atomic>

namespace wisemind::oracle {

namespace {

constexpr std::string_view kResponseMarker = "Patient Response: ";

struct Decision {
    DiagnosticAction action;
    std::string reason;
};

Decision decide(const PatientCase& c, const ChatRequest& req) {
    const auto* step = c.step(req.node);
    const bool met = step && step->met;
    const auto response = patient_response_in(req.human);
    const bool offers_contradiction = req.human.find("detect_contradiction") != std::string::npos;
    const bool offers_nmi = req.human.find("ask_more_detail") != std::string::npos;

    for (const auto& o : c.overlays) {
        if (o.at_node != req.node || text::trim(o.replacement_text) != response) continue;
        if (o.kind == OverlayKind::contradiction) {
            if (offers_contradiction)
                return {DiagnosticAction::contradiction,
                        "The patient now contradicts what was said about " + o.refers_to.value_or(req.node) + "."};
            const bool inverted = !met;
            return {inverted ? DiagnosticAction::met_criteria : DiagnosticAction::not_met_criteria,
                    "Taking the patient's latest statement at face value."};
        }
        if (o.kind == OverlayKind::under_talking && offers_nmi)
            return {DiagnosticAction::needs_more_information, "The answer is too brief to judge."};
    }
    return {met ? DiagnosticAction::met_criteria : DiagnosticAction::not_met_criteria,
            met ? "The patient's account satisfies " + req.node + "." : "The patient's account does not satisfy " + req.node + "."};
}

}  // namespace

std::string patient_response_in(const std::string& human) {
    const auto pos = human.rfind(kResponseMarker);
    if (pos == std::string::npos) return {};
    auto rest = human.substr(pos + kResponseMarker.size());
    if (!rest.empty() && rest.back() == '.') rest.pop_back();
    return text::trim(rest);
}

std::string question_for(const CriterionNode& node) {
    if (node.is_leaf())
        return "Thank you for walking through all of this with me. Based on what you've shared, my assessment is " +
               *node.diagnosis + ". We can talk about what this means and what support could help.";
    return "I'd like to understand this part a bit better [" + node.id +
           "]. Could you tell me whether this fits your experience: " + text::truncate_words(node.description, 30) +
           "?";
}

BackendPtr reasoning(const PatientCase& c) {
    return std::make_shared<CallbackBackend>(
        [c](const ChatRequest& req) {
            const auto d = decide(c, req);
            return "<Reason_for_Action>" + d.reason + "</Reason_for_Action>\n<Action>" +
                   std::string(prompt_name(d.action)) + "</Action>";
        },
        "oracle-ra");
}

BackendPtr empathy(std::shared_ptr<const KnowledgeGraph> graph) {
    return std::make_shared<CallbackBackend>(
        [graph](const ChatRequest& req) {
            return "<Response>" + question_for(graph->node(req.node)) +
                   "</Response>\n<Reason_for_Response>Following the peer's action.</Reason_for_Response>";
        },
        "oracle-ea");
}

BackendPtr single_agent(const PatientCase& c, std::shared_ptr<const KnowledgeGraph> graph) {
    return std::make_shared<CallbackBackend>(
        [c, graph](const ChatRequest& req) {
            const auto d = decide(c, req);
            NodeId next = req.node;
            if (d.action == DiagnosticAction::met_criteria || d.action == DiagnosticAction::not_met_criteria)
                next = transition(*graph, req.node, d.action);
            return "<Reason_for_Action>" + d.reason + "</Reason_for_Action>\n<Action>" +
                   std::string(prompt_name(d.action)) + "</Action>\n<Response>" + question_for(graph->node(next)) +
                   "</Response>";
        },
        "oracle-single");
}

BackendPtr faulty(BackendPtr inner, int faults, std::string garbage) {
    auto remaining = std::make_shared<std::atomic<int>>(faults);
    const auto label = "faulty:" + inner->name();
    return std::make_shared<CallbackBackend>(
        [inner, remaining, garbage](const ChatRequest& req) {
            if (remaining->fetch_sub(1) > 0) return garbage;
            return inner->complete(req);
        },
        label);
}

}  // namespace wisemind::oracle
