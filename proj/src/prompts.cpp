#include "wisemind/prompts.hpp"

#include "wisemind/text.hpp"

namespace wisemind {

namespace {

constexpr std::string_view kRaSystem =
    "You are a psychiatrist evaluating patient responses based on provided medical topics and dialogue. "
    "Your task is to assess if the patient meets specific criteria, needs further investigation, or "
    "contradicts previous information.";

constexpr std::string_view kRaFormat =
    "Required Response Format:\n"
    "<Reason_for_Action>Explain your decision based on the conversation, criteria, and any "
    "contradictions.</Reason_for_Action>\n"
    "<Action>Selected action</Action>\n\n"
    "Now, please evaluate the conversation: Dialogue: {st_memo}, Current Node: {node}, "
    "Patient Response: {patient_res}.";

constexpr std::string_view kEaSystem =
    "You are a psychiatrist responding to the patient based on their responses, previous conversations, "
    "the current node criteria, and peer actions. Smartly apply empathy but avoid unnecessary gratitude. "
    "If the patient has provided sufficient information, begin asking closed-ended questions to move the "
    "process forward.";

constexpr std::string_view kEaHuman =
    "Your actions should be based on:\n"
    "1. Current conversation\n"
    "2. Previous conversation summary\n"
    "3. Current node description\n"
    "4. Peer's action on the patient's response\n\n"
    "Required Response Format:\n"
    "<Response>Provide your response to the patient.</Response>\n"
    "<Reason_for_Response>Justify your response based on the action, patient's response, and node "
    "description.</Reason_for_Response>\n\n"
    "Now, please respond to the patient: Dialogue: {st_memo}, Current Node: {node}, "
    "Patient Response: {patient_res}, Peer's action: {action}.";

constexpr std::string_view kClosingHuman =
    "The assessment has reached its conclusion. Communicate the outcome to the patient with warmth and "
    "without alarm, and do not ask further diagnostic questions. Outcome: {diagnosis}.\n\n"
    "Required Response Format:\n"
    "<Response>Provide your closing message to the patient.</Response>\n"
    "<Reason_for_Response>Justify your message.</Reason_for_Response>\n\n"
    "Dialogue: {st_memo}, Patient Response: {patient_res}.";

constexpr std::string_view kKfpSystem =
    "You are a psychiatrist tasked with conducting differential diagnosis via clinical interviews. Keep "
    "asking questions until the objective is met. DO NOT propose treatment plans. The final diagnostic "
    "labels will be provided. Avoid repeating questions and irrelevant information.";

constexpr std::string_view kKfpHuman =
    "Required Response Format:\n"
    "<Response>Ask necessary questions to help with diagnosis.</Response>\n"
    "<Final_Decision>Provide final diagnosis or None if not ready.</Final_Decision>\n\n"
    "Now, please proceed with the interview: The final diagnostic labels are {diagnostic_labels}, the "
    "patient responded: {patient_response}, Dialogue history: {st_memo}. Do not ask repeated questions.";

constexpr std::string_view kIclSystem =
    "You are a psychiatrist conducting differential diagnosis through clinical interviews. Use the provided "
    "criteria to guide the diagnosis. Avoid repeating questions and irrelevant information.";

constexpr std::string_view kIclHuman =
    "Required Response Format:\n"
    "<Response>Ask necessary questions to help with diagnosis.</Response>\n"
    "<Knowledge_Used>Return the knowledge node used with a binary indicating if criteria are "
    "met.</Knowledge_Used>\n"
    "<Reason>Provide reasoning for decision.</Reason>\n"
    "<Final_Decision>Provide final diagnosis or None if not ready.</Final_Decision>\n\n"
    "Now, please proceed with the interview: The final diagnostic labels are {diagnostic_labels}, the "
    "patient responded: {patient_response}, Dialogue history: {st_memo}, Do not ask repeated questions. "
    "Assessment criteria: {criteria}.";

constexpr std::string_view kRagSystem =
    "You are a psychiatrist conducting differential diagnosis using clinical interviews. Use the provided "
    "context to assist with the diagnosis. Avoid repeating questions and irrelevant information.";

constexpr std::string_view kRagHuman =
    "Required Response Format:\n"
    "<Response>Ask necessary questions to help with diagnosis.</Response>\n"
    "<Knowledge_Used>Return the knowledge node used with a binary indicating if criteria are met based on "
    "context.</Knowledge_Used>\n"
    "<Reason>Provide reasoning for decision.</Reason>\n"
    "<Final_Decision>Provide final diagnosis or None if not ready.</Final_Decision>\n\n"
    "Now, please proceed with the interview: The final diagnostic labels are {diagnostic_labels}, the "
    "patient responded: {patient_response}, Dialogue history: {st_memo}, Do not ask repeated questions. "
    "Assessment criteria: {criteria}. The relevant context is {context}.";

constexpr std::string_view kSingleSystem =
    "You are a psychiatrist conducting a differential diagnosis interview guided by a structured decision "
    "tree. In each turn you assess the patient's latest response against the current criterion and then "
    "ask the next question yourself. Be empathic, avoid unnecessary gratitude, and do not propose treatment.";

constexpr std::string_view kSingleFormat =
    "Required Response Format:\n"
    "<Reason_for_Action>Explain your decision based on the conversation and criteria.</Reason_for_Action>\n"
    "<Action>Selected action</Action>\n"
    "<Response>Your next message to the patient: a question about the current criterion if you need more "
    "detail, otherwise a question about the next criterion that follows from your decision.</Response>\n\n"
    "Now, please evaluate and respond: Dialogue: {st_memo}, Current Node: {node}, Patient Response: "
    "{patient_res}.";

constexpr std::string_view kPatientSystem =
    "You are a patient visiting a psychiatrist. Please conduct a role-playing session as this patient based "
    "on the following information.";

constexpr std::string_view kStoryHuman =
    "Right now, we are talking about {name} symptom, which is {description}. You {has_description} this "
    "symptom. Please make up a personal story about your symptom. Be natural and honest. Use a paragraph of "
    "fewer than 100 words. Be natural and consistent with your previous stories {st_memo} to make it more "
    "coherent. Only output the story relevant to the current symptom based on the description, and DO NOT "
    "REPEAT WHAT YOU SAID IN THE PAST. Only output the story without any extra words.";

constexpr std::string_view kRoleplayHuman =
    "Your background for the current topic: {story}. The conversation so far: {st_memo}. The doctor now "
    "says: \"{question}\". Answer the doctor in the first person, naturally and honestly, using only "
    "information consistent with your background and previous answers. DO NOT REPEAT WHAT YOU SAID IN THE "
    "PAST. Only output your reply without any extra words.";

constexpr std::string_view kRiskSystem =
    "You are a clinical safety reviewer. Classify whether a patient's statement indicates imminent risk.";

constexpr std::string_view kRiskHuman =
    "Classify the statement into exactly one category: none, suicidal, homicidal, hallucination "
    "(command hallucinations or perceptions urging harm).\n\n"
    "Required Response Format:\n<Risk>category</Risk>\n\nStatement: {patient_res}";

std::string action_menu(ActionSpace actions, bool force_decision) {
    struct Item {
        DiagnosticAction action;
        std::string_view help;
    };
    constexpr Item items[] = {
        {DiagnosticAction::met_criteria, "Choose when the patient clearly meets the current criteria."},
        {DiagnosticAction::not_met_criteria, "Choose when the patient clearly does NOT meet the criteria."},
        {DiagnosticAction::needs_more_information, "Choose when more information is needed."},
        {DiagnosticAction::contradiction,
         "Choose when the patient's response contradicts previous information."},
    };
    std::string out = "Select ONE of the following actions:\n\n";
    int index = 1;
    for (const auto& item : items) {
        if (!actions.allows(item.action)) continue;
        if (force_decision && item.action != DiagnosticAction::met_criteria &&
            item.action != DiagnosticAction::not_met_criteria)
            continue;
        out += std::to_string(index++) + ") " + std::string(prompt_name(item.action)) + ": " +
               std::string(item.help) + "\n";
    }
    if (actions.allows(DiagnosticAction::contradiction) && !force_decision)
        out += "When reporting a contradiction, name in your reason the node id of the earlier topic that is "
               "contradicted.\n";
    if (force_decision)
        out += "Enough detail has been requested on this topic already; make your best determination now.\n";
    return out + "\n";
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string out = "[";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += "; ";
        out += labels[i];
    }
    return out + "]";
}

}  // namespace

PromptPair render_ra_prompt(const CriterionNode& node, const DialogueHistory& history,
                            std::string_view patient_response, const ReasoningPromptOptions& options) {
    const auto knowledge = options.knowledge.empty() ? "[" + node.id + "] " + node.description : options.knowledge;
    auto human = action_menu(options.actions, options.force_decision) +
                 text::fill(kRaFormat, {{"st_memo", history.memo(options.history_window, true)},
                                        {"node", knowledge},
                                        {"patient_res", std::string(patient_response)}});
    return {std::string(kRaSystem), std::move(human)};
}

PromptPair render_ea_prompt(const CriterionNode& target, DiagnosticAction action, const DialogueHistory& history,
                            std::string_view patient_response, const EmpathyPromptOptions& options) {
    const auto memo = history.memo(options.history_window);
    std::string human;
    if (target.is_leaf()) {
        human = text::fill(kClosingHuman, {{"diagnosis", *target.diagnosis},
                                           {"st_memo", memo},
                                           {"patient_res", std::string(patient_response)}});
    } else {
        human = text::fill(kEaHuman, {{"st_memo", memo},
                                      {"node", "[" + target.id + "] " + target.description},
                                      {"patient_res", std::string(patient_response)},
                                      {"action", std::string(to_string(action))}});
    }
    if (!options.directive.empty()) human += "\n\nConversation strategy: " + options.directive;
    return {std::string(kEaSystem), std::move(human)};
}

PromptPair render_kfp_prompt(const std::vector<std::string>& labels, std::string_view patient_response,
                             const DialogueHistory& history, std::size_t history_window) {
    return {std::string(kKfpSystem), text::fill(kKfpHuman, {{"diagnostic_labels", join_labels(labels)},
                                                            {"patient_response", std::string(patient_response)},
                                                            {"st_memo", history.memo(history_window)}})};
}

PromptPair render_tkep_icl_prompt(const std::vector<std::string>& labels, std::string_view patient_response,
                                  const DialogueHistory& history, std::string_view criteria,
                                  std::size_t history_window) {
    return {std::string(kIclSystem), text::fill(kIclHuman, {{"diagnostic_labels", join_labels(labels)},
                                                            {"patient_response", std::string(patient_response)},
                                                            {"st_memo", history.memo(history_window)},
                                                            {"criteria", std::string(criteria)}})};
}

PromptPair render_tkep_rag_prompt(const std::vector<std::string>& labels, std::string_view patient_response,
                                  const DialogueHistory& history, std::string_view criteria,
                                  std::string_view context, std::size_t history_window) {
    return {std::string(kRagSystem), text::fill(kRagHuman, {{"diagnostic_labels", join_labels(labels)},
                                                            {"patient_response", std::string(patient_response)},
                                                            {"st_memo", history.memo(history_window)},
                                                            {"criteria", std::string(criteria)},
                                                            {"context", std::string(context)}})};
}

PromptPair render_single_agent_prompt(const CriterionNode& node, std::string_view knowledge,
                                      const DialogueHistory& history, std::string_view patient_response,
                                      ActionSpace actions, std::size_t history_window) {
    const auto node_text = knowledge.empty() ? "[" + node.id + "] " + node.description : std::string(knowledge);
    auto human = action_menu(actions, false) +
                 text::fill(kSingleFormat, {{"st_memo", history.memo(history_window, true)},
                                            {"node", node_text},
                                            {"patient_res", std::string(patient_response)}});
    return {std::string(kSingleSystem), std::move(human)};
}

PromptPair render_story_prompt(std::string_view name, std::string_view description, bool met,
                               std::string_view st_memo) {
    return {std::string(kPatientSystem),
            text::fill(kStoryHuman, {{"name", std::string(name)},
                                     {"description", std::string(description)},
                                     {"has_description", met ? "have" : "do not have"},
                                     {"st_memo", std::string(st_memo)}})};
}

PromptPair render_roleplay_prompt(std::string_view story_context, std::string_view st_memo,
                                  std::string_view doctor_utterance) {
    return {std::string(kPatientSystem), text::fill(kRoleplayHuman, {{"story", std::string(story_context)},
                                                                     {"st_memo", std::string(st_memo)},
                                                                     {"question", std::string(doctor_utterance)}})};
}

PromptPair render_risk_prompt(std::string_view patient_response) {
    return {std::string(kRiskSystem), text::fill(kRiskHuman, {{"patient_res", std::string(patient_response)}})};
}

}  // namespace wisemind
