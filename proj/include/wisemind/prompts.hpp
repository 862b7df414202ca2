#pragma once

#include "wisemind/action.hpp"
#include "wisemind/graph.hpp"
#include "wisemind/history.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace wisemind {

struct PromptPair {
    std::string system;
    std::string human;
};

inline constexpr std::string_view kDefaultGreeting = "Hi there. I am Dr. WiseMind. What can I do for you today?";
inline constexpr std::size_t kDefaultHistoryWindow = 12;

// Tag sets of the structured replies.
namespace tags {
inline const std::vector<std::string> kReasoningRequired{"Action"};
inline const std::vector<std::string> kReasoningOptional{"Reason_for_Action"};
inline const std::vector<std::string> kEmpathyRequired{"Response"};
inline const std::vector<std::string> kEmpathyOptional{"Reason_for_Response"};
inline const std::vector<std::string> kBaselineRequired{"Response", "Final_Decision"};
inline const std::vector<std::string> kBaselineOptional{"Knowledge_Used", "Reason"};
inline const std::vector<std::string> kSingleAgentRequired{"Action", "Response"};
inline const std::vector<std::string> kSingleAgentOptional{"Reason_for_Action"};
inline const std::vector<std::string> kRiskRequired{"Risk"};
}  // namespace tags

struct ReasoningPromptOptions {
    std::string knowledge;  // retrieved knowledge for the {node} slot; empty -> node description
    ActionSpace actions = ActionSpace::full();
    bool force_decision = false;  // only met/not_met offered, with a "best determination" instruction
    std::size_t history_window = kDefaultHistoryWindow;
};

// Reasoning-agent prompt: {st_memo}, {node}, {patient_res}.
PromptPair render_ra_prompt(const CriterionNode& node, const DialogueHistory& history,
                            std::string_view patient_response, const ReasoningPromptOptions& options = {});

struct EmpathyPromptOptions {
    std::string directive;  // conversation-strategy note from the safety layer
    std::size_t history_window = kDefaultHistoryWindow;
};

// Empathy-agent prompt for an internal target node: {st_memo}, {node},
// {patient_res}, {action}. For a leaf target the closing variant is rendered,
// which asks for the outcome to be communicated instead of a question.
PromptPair render_ea_prompt(const CriterionNode& target, DiagnosticAction action, const DialogueHistory& history,
                            std::string_view patient_response, const EmpathyPromptOptions& options = {});

// Baselines.
PromptPair render_kfp_prompt(const std::vector<std::string>& labels, std::string_view patient_response,
                             const DialogueHistory& history, std::size_t history_window = kDefaultHistoryWindow);
PromptPair render_tkep_icl_prompt(const std::vector<std::string>& labels, std::string_view patient_response,
                                  const DialogueHistory& history, std::string_view criteria,
                                  std::size_t history_window = kDefaultHistoryWindow);
PromptPair render_tkep_rag_prompt(const std::vector<std::string>& labels, std::string_view patient_response,
                                  const DialogueHistory& history, std::string_view criteria,
                                  std::string_view context, std::size_t history_window = kDefaultHistoryWindow);

// Single agent that both assesses the current node and phrases the next question.
PromptPair render_single_agent_prompt(const CriterionNode& node, std::string_view knowledge,
                                      const DialogueHistory& history, std::string_view patient_response,
                                      ActionSpace actions = ActionSpace::full(),
                                      std::size_t history_window = kDefaultHistoryWindow);

// Simulated patient.
PromptPair render_story_prompt(std::string_view name, std::string_view description, bool met,
                               std::string_view st_memo);
PromptPair render_roleplay_prompt(std::string_view story_context, std::string_view st_memo,
                                  std::string_view doctor_utterance);

// Second-stage risk classifier.
PromptPair render_risk_prompt(std::string_view patient_response);

}  // namespace wisemind
