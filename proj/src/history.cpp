#include "wisemind/history.hpp"

#include "wisemind/error.hpp"

#include <algorithm>

namespace wisemind {

std::string_view to_string(Speaker s) {
    switch (s) {
        case Speaker::doctor: return "doctor";
        case Speaker::patient: return "patient";
        case Speaker::system: return "system";
    }
    return "system";
}

Speaker speaker_from_string(std::string_view s) {
    if (s == "doctor") return Speaker::doctor;
    if (s == "patient") return Speaker::patient;
    if (s == "system") return Speaker::system;
    throw ParseError("schema_violation", "unknown speaker '" + std::string(s) + "'");
}

const Turn& DialogueHistory::append(Turn turn) {
    turn.timestamp = next_ts_++;
    turns_.push_back(std::move(turn));
    return turns_.back();
}

DialogueHistory DialogueHistory::restore(std::vector<Turn> turns, std::string initial_complaint) {
    DialogueHistory h;
    h.turns_ = std::move(turns);
    h.initial_complaint_ = std::move(initial_complaint);
    for (const auto& t : h.turns_) h.next_ts_ = std::max(h.next_ts_, t.timestamp + 1);
    return h;
}

std::string DialogueHistory::last_patient_response() const {
    auto it = std::find_if(turns_.rbegin(), turns_.rend(),
                           [](const Turn& t) { return t.speaker == Speaker::patient; });
    return it == turns_.rend() ? std::string{} : it->text;
}

std::size_t DialogueHistory::doctor_turns() const {
    return static_cast<std::size_t>(
        std::count_if(turns_.begin(), turns_.end(), [](const Turn& t) { return t.speaker == Speaker::doctor; }));
}

std::string DialogueHistory::memo(std::size_t window, bool with_nodes) const {
    std::vector<const Turn*> spoken;
    for (const auto& t : turns_)
        if (t.speaker != Speaker::system) spoken.push_back(&t);
    const std::size_t first = window == 0 || spoken.size() <= window ? 0 : spoken.size() - window;
    std::string out;
    for (std::size_t i = first; i < spoken.size(); ++i) {
        if (!out.empty()) out += '\n';
        if (spoken[i]->speaker == Speaker::doctor) {
            out += with_nodes && spoken[i]->node ? "Doctor [" + *spoken[i]->node + "]: " : "Doctor: ";
        } else {
            out += "Patient: ";
        }
        out += spoken[i]->text;
    }
    return out;
}

nlohmann::json to_json(const Turn& t) {
    return {{"speaker", to_string(t.speaker)},
            {"text", t.text},
            {"node", t.node ? nlohmann::json(*t.node) : nlohmann::json()},
            {"action", t.action ? nlohmann::json(to_string(*t.action)) : nlohmann::json()},
            {"ts", t.timestamp}};
}

Turn turn_from_json(const nlohmann::json& j) {
    Turn t;
    t.speaker = speaker_from_string(j.at("speaker").get<std::string>());
    t.text = j.at("text").get<std::string>();
    if (j.contains("node") && !j["node"].is_null()) t.node = j["node"].get<std::string>();
    if (j.contains("action") && !j["action"].is_null()) t.action = parse_action(j["action"].get<std::string>());
    t.timestamp = j.value("ts", std::uint64_t{0});
    return t;
}

}  // namespace wisemind
