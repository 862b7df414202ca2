#include "wisemind/questionnaire.hpp"

#include "wisemind/error.hpp"
#include "wisemind/text.hpp"

namespace wisemind {

namespace {

Error invalid(const std::string& what) { return Error("invalid_questionnaire", what); }

constexpr auto F = ItemScale::five_point;

const std::vector<QuestionnaireItem> kHelp{
    {"Did the conversation with the chatbot make you feel at ease or comfortable?", F},
    {"How clear were the chatbot's responses in helping you recognize possible symptoms of depression?", F},
    {"Was the information provided by the chatbot easy to understand and apply to your life?", F},
    {"To what extent did the chatbot's answers offer solutions that felt personal and tailored to you?", F},
    {"Were the chatbot's suggestions helpful in improving your mental health or well-being?", F},
    {"I would be completely happy to see this doctor again.", ItemScale::three_point},
    {"How would you rate your doctor today at assessing your medical condition?", F},
    {"How would you rate your doctor today at explaining your condition and treatment?", F},
    {"How would you rate your doctor today at providing or arranging treatment for you?", F},
    {"How would you rate your doctor today at the reliability of the diagnosis?", F},
};

const std::vector<QuestionnaireItem> kEmpathy{
    {"How would you rate the politeness of the system during the conversation?", F},
    {"To what extent did the doctor make you feel at ease?", F},
    {"To what extent did the doctor engage in partnership building?", F},
    {"How would you rate the doctor's behavior of expressing caring and commitment?", F},
    {"How would you rate the doctor's behavior of encouraging patient participation?", F},
    {"To what extent did the doctor treat patient respectfully and sensitively and ensure comfort, safety, and "
     "dignity?",
     F},
    {"How would you rate the doctor's behavior of facilitating patient expression of emotional consequences of "
     "illness?",
     F},
    {"How would you rate the doctor's behavior of showing interest in the patient as a person?", F},
    {"To what extent did the doctor express sympathy and reassurance?", F},
    {"Did you feel heard and understood by the chatbot during the interaction?", F},
};

const std::vector<QuestionnaireItem> kSpecialty{
    {"How would you rate the doctor's behavior of respecting patient statements, privacy and autonomy?", F},
    {"How would you rate the doctor's behavior of eliciting patient's full set of concerns?", F},
    {"How would you rate the doctor's behavior of eliciting patient's perspective on the problem/illness?", F},
    {"How would you rate the doctor's behavior of asking open-ended questions?", F},
    {"How would you rate the doctor's behavior of explaining nature of the problem and approach to "
     "diagnosis/treatment?",
     F},
    {"How would you rate the doctor's behavior of providing information resources and help patient evaluate and "
     "use them?",
     F},
    {"To what extent did the doctor elicit the past medical history?", F},
    {"To what extent did the doctor elicit the past family history?", F},
    {"To what extent did the doctor elicit the past medication history?", F},
    {"To what extent did the doctor construct a sensible differential diagnosis?", F},
    {"How would you rate the doctor's behavior of avoiding jargon and complexity?", F},
    {"To what extent did the doctor explain relevant clinical information with structure?", F},
    {"How empathic was the doctor?", F},
};

const std::vector<QuestionnaireItem> kPrecision{
    {"How would you rate the doctor's accuracy of searching information?", F},
    {"How would you rate the doctor's accuracy of explaining relevant clinical information?", F},
    {"How would you rate the doctor's accuracy of exploring full effect of the illness?", F},
    {"How would you rate the doctor's accuracy of clarifying and summarizing information?", F},
    {"To what extent did the doctor understand the patient's problem?", F},
    {"To what extent did the doctor construct an accurate differential diagnosis?", F},
    {"How close did the doctor's differential diagnosis come to including the probable diagnosis from the answer "
     "key?",
     F},
};

int value_from_label(std::string_view label, ItemScale scale) {
    const auto options = scale_options(scale);
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (!text::iequals(label, options[i])) continue;
        if (scale == ItemScale::five_point) return static_cast<int>(i) + 1;
        return i == 0 ? 1 : i == 1 ? 3 : 5;
    }
    throw invalid("unknown answer '" + std::string(label) + "'");
}

}  // namespace

std::string_view to_string(Instrument i) {
    switch (i) {
        case Instrument::help: return "help";
        case Instrument::empathy: return "empathy";
        case Instrument::specialty: return "specialty";
        case Instrument::precision: return "precision";
    }
    return "help";
}

std::optional<Instrument> instrument_from_string(std::string_view s) {
    for (auto i : kAllInstruments)
        if (text::iequals(s, to_string(i))) return i;
    return std::nullopt;
}

std::string_view to_string(RaterRole r) { return r == RaterRole::clinician ? "clinician" : "user"; }

std::optional<RaterRole> rater_from_string(std::string_view s) {
    if (text::iequals(s, "user")) return RaterRole::user;
    if (text::iequals(s, "clinician")) return RaterRole::clinician;
    return std::nullopt;
}

const std::vector<QuestionnaireItem>& instrument_items(Instrument i) {
    switch (i) {
        case Instrument::help: return kHelp;
        case Instrument::empathy: return kEmpathy;
        case Instrument::specialty: return kSpecialty;
        case Instrument::precision: return kPrecision;
    }
    return kHelp;
}

std::vector<std::string> scale_options(ItemScale s) {
    if (s == ItemScale::three_point) return {"No", "Indifferent", "Yes"};
    return {"Poor", "Somewhat Poor", "Fair", "Good", "Excellent"};
}

double score_questionnaire(const QuestionnaireResponse& r) {
    const auto& items = instrument_items(r.instrument);
    if (r.answers.size() != items.size())
        throw invalid(std::string(to_string(r.instrument)) + " expects " + std::to_string(items.size()) +
                      " answers, got " + std::to_string(r.answers.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const int v = r.answers[i];
        if (v < 1 || v > 5) throw invalid("item " + std::to_string(i + 1) + " out of range: " + std::to_string(v));
        if (items[i].scale == ItemScale::three_point && v != 1 && v != 3 && v != 5)
            throw invalid("item " + std::to_string(i + 1) + " is Yes/No/Indifferent (5/1/3), got " + std::to_string(v));
        total += (v - 1) / 4.0;
    }
    return total / static_cast<double>(items.size());
}

QuestionnaireResponse questionnaire_from_json(const nlohmann::json& j, std::string session_id) {
    if (!j.is_object()) throw invalid("body must be an object");
    QuestionnaireResponse r;
    r.session_id = std::move(session_id);
    if (!j.contains("instrument") || !j.at("instrument").is_string()) throw invalid("missing instrument");
    auto instrument = instrument_from_string(j.at("instrument").get<std::string>());
    if (!instrument) throw invalid("unknown instrument '" + j.at("instrument").get<std::string>() + "'");
    r.instrument = *instrument;
    if (j.contains("rater_role")) {
        if (!j.at("rater_role").is_string()) throw invalid("rater_role must be a string");
        auto role = rater_from_string(j.at("rater_role").get<std::string>());
        if (!role) throw invalid("unknown rater_role");
        r.rater_role = *role;
    }
    if (!j.contains("answers") || !j.at("answers").is_array()) throw invalid("answers must be an array");
    const auto& items = instrument_items(r.instrument);
    const auto& answers = j.at("answers");
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto& a = answers[i];
        if (a.is_number_integer()) {
            r.answers.push_back(a.get<int>());
        } else if (a.is_string()) {
            const auto scale = i < items.size() ? items[i].scale : ItemScale::five_point;
            r.answers.push_back(value_from_label(a.get<std::string>(), scale));
        } else {
            throw invalid("answer " + std::to_string(i + 1) + " must be an integer or option label");
        }
    }
    return r;
}

nlohmann::json to_json(const QuestionnaireResponse& r) {
    return {{"instrument", to_string(r.instrument)},
            {"answers", r.answers},
            {"session_id", r.session_id},
            {"rater_role", to_string(r.rater_role)}};
}

nlohmann::json questionnaires_json() {
    nlohmann::json out = nlohmann::json::array();
    for (auto inst : kAllInstruments) {
        nlohmann::json items = nlohmann::json::array();
        for (const auto& item : instrument_items(inst)) {
            const bool three = item.scale == ItemScale::three_point;
            items.push_back({{"text", item.text},
                             {"scale", three ? "3-point" : "5-point"},
                             {"options", scale_options(item.scale)},
                             {"values", three ? std::vector<int>{1, 3, 5} : std::vector<int>{1, 2, 3, 4, 5}}});
        }
        out.push_back({{"instrument", to_string(inst)}, {"items", std::move(items)}});
    }
    return out;
}

}  // namespace wisemind
