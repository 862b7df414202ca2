#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace wisemind {

// The reasoning agent's closed decision set.
enum class DiagnosticAction {
    met_criteria,
    not_met_criteria,
    needs_more_information,
    contradiction,
};

inline constexpr std::array<DiagnosticAction, 4> kAllActions = {
    DiagnosticAction::met_criteria,
    DiagnosticAction::not_met_criteria,
    DiagnosticAction::needs_more_information,
    DiagnosticAction::contradiction,
};

// Canonical name, e.g. "needs_more_information".
std::string_view to_string(DiagnosticAction action);

// Name used by the reasoning-agent prompt ("ask_more_detail", "detect_contradiction").
std::string_view prompt_name(DiagnosticAction action);

// Accepts canonical names and the prompt aliases (ask_more_detail, more_details,
// detect_contradiction), case-insensitively. Returns nullopt for anything else.
std::optional<DiagnosticAction> action_from_string(std::string_view value);

// Like action_from_string but throws MalformedAction.
DiagnosticAction parse_action(std::string_view value);

// Bitset over the four actions; used for ablated action spaces.
class ActionSpace {
public:
    constexpr ActionSpace() = default;

    static constexpr ActionSpace full() {
        ActionSpace s;
        s.bits_ = 0b1111;
        return s;
    }

    constexpr ActionSpace without(DiagnosticAction a) const {
        ActionSpace s = *this;
        s.bits_ &= static_cast<unsigned>(~bit(a));
        return s;
    }

    constexpr ActionSpace with(DiagnosticAction a) const {
        ActionSpace s = *this;
        s.bits_ |= bit(a);
        return s;
    }

    constexpr bool allows(DiagnosticAction a) const { return (bits_ & bit(a)) != 0; }

    constexpr bool operator==(const ActionSpace&) const = default;

    // Short form used in reports: "{MC, NMC, NMI, Contradict.}".
    std::string label() const;

private:
    static constexpr unsigned bit(DiagnosticAction a) { return 1u << static_cast<unsigned>(a); }
    unsigned bits_ = 0;
};

}  // namespace wisemind
