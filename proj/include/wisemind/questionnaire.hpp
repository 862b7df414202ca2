#pragma once

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wisemind {

enum class Instrument { help, empathy, specialty, precision };
enum class RaterRole { user, clinician };
enum class ItemScale { five_point, three_point };

std::string_view to_string(Instrument i);
std::optional<Instrument> instrument_from_string(std::string_view s);
std::string_view to_string(RaterRole r);
std::optional<RaterRole> rater_from_string(std::string_view s);

struct QuestionnaireItem {
    std::string_view text;
    ItemScale scale = ItemScale::five_point;
};

inline constexpr Instrument kAllInstruments[] = {Instrument::help, Instrument::empathy, Instrument::specialty,
                                                 Instrument::precision};

// Items in presentation order: help 10, empathy 10, specialty 13, precision 7.
const std::vector<QuestionnaireItem>& instrument_items(Instrument i);

// Option labels, lowest to highest. Answers use the 1..5 scale; three-point
// items accept 1 (No), 3 (Indifferent) and 5 (Yes) only.
std::vector<std::string> scale_options(ItemScale s);

struct QuestionnaireResponse {
    Instrument instrument = Instrument::help;
    std::vector<int> answers;
    std::string session_id;
    RaterRole rater_role = RaterRole::user;
};

// Mean over items of (value - 1) / 4, in [0, 1]. Throws Error("invalid_questionnaire").
double score_questionnaire(const QuestionnaireResponse& r);

// Answers may be integers or option labels ("Good", "Yes", ...).
QuestionnaireResponse questionnaire_from_json(const nlohmann::json& j, std::string session_id = {});
nlohmann::json to_json(const QuestionnaireResponse& r);

// Every instrument with its items and options, for form rendering.
nlohmann::json questionnaires_json();

}  // namespace wisemind
