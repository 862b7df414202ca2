#include "wisemind/action.hpp"

#include "wisemind/error.hpp"
#include "wisemind/text.hpp"

#include <utility>

namespace wisemind {

std::string_view to_string(DiagnosticAction action) {
    switch (action) {
        case DiagnosticAction::met_criteria: return "met_criteria";
        case DiagnosticAction::not_met_criteria: return "not_met_criteria";
        case DiagnosticAction::needs_more_information: return "needs_more_information";
        case DiagnosticAction::contradiction: return "contradiction";
    }
    return "unknown";
}

std::string_view prompt_name(DiagnosticAction action) {
    switch (action) {
        case DiagnosticAction::met_criteria: return "met_criteria";
        case DiagnosticAction::not_met_criteria: return "not_met_criteria";
        case DiagnosticAction::needs_more_information: return "ask_more_detail";
        case DiagnosticAction::contradiction: return "detect_contradiction";
    }
    return "unknown";
}

namespace {

constexpr std::pair<std::string_view, DiagnosticAction> kAliases[] = {
    {"met_criteria", DiagnosticAction::met_criteria},
    {"not_met_criteria", DiagnosticAction::not_met_criteria},
    {"needs_more_information", DiagnosticAction::needs_more_information},
    {"contradiction", DiagnosticAction::contradiction},
    {"ask_more_detail", DiagnosticAction::needs_more_information},
    {"ask_more_details", DiagnosticAction::needs_more_information},
    {"more_details", DiagnosticAction::needs_more_information},
    {"detect_contradiction", DiagnosticAction::contradiction},
};

}  // namespace

std::optional<DiagnosticAction> action_from_string(std::string_view value) {
    const auto cleaned = text::trim(value);
    for (const auto& [name, action] : kAliases) {
        if (text::iequals(cleaned, name)) return action;
    }
    return std::nullopt;
}

DiagnosticAction parse_action(std::string_view value) {
    if (auto a = action_from_string(value)) return *a;
    throw MalformedAction(std::string(value));
}

std::string ActionSpace::label() const {
    std::string out = "{";
    const std::pair<DiagnosticAction, const char*> names[] = {
        {DiagnosticAction::met_criteria, "MC"},
        {DiagnosticAction::not_met_criteria, "NMC"},
        {DiagnosticAction::needs_more_information, "NMI"},
        {DiagnosticAction::contradiction, "Contradict."},
    };
    for (const auto& [a, n] : names) {
        if (!allows(a)) continue;
        if (out.size() > 1) out += ", ";
        out += n;
    }
    return out + "}";
}

}  // namespace wisemind
