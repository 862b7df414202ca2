#pragma once

#include "wisemind/action.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wisemind {

enum class Speaker { doctor, patient, system };

std::string_view to_string(Speaker s);
Speaker speaker_from_string(std::string_view s);

struct Turn {
    Speaker speaker = Speaker::doctor;
    std::string text;
    std::optional<std::string> node;  // node the doctor was probing when this was emitted
    std::optional<DiagnosticAction> action;
    std::uint64_t timestamp = 0;       // monotonic per session

    bool operator==(const Turn&) const = default;
};

// Append-only interview transcript. The first two turns are the greeting and
// the initial complaint.
class DialogueHistory {
public:
    const std::vector<Turn>& turns() const { return turns_; }
    const std::string& initial_complaint() const { return initial_complaint_; }
    bool empty() const { return turns_.empty(); }
    std::size_t size() const { return turns_.size(); }

    const Turn& append(Turn turn);

    // Rebuilds a history from persisted turns, keeping their timestamps.
    static DialogueHistory restore(std::vector<Turn> turns, std::string initial_complaint);
    void set_initial_complaint(std::string complaint) { initial_complaint_ = std::move(complaint); }

    // Most recent patient utterance, or the empty string.
    std::string last_patient_response() const;
    std::size_t doctor_turns() const;

    // The last `window` doctor/patient turns rendered as "Doctor: ...\nPatient: ..."
    // (window 0 renders everything). With `with_nodes`, doctor lines carry the
    // probed node id: "Doctor [DEPEPS]: ...".
    std::string memo(std::size_t window = 0, bool with_nodes = false) const;

    bool operator==(const DialogueHistory&) const = default;

private:
    std::vector<Turn> turns_;
    std::string initial_complaint_;
    std::uint64_t next_ts_ = 0;
};

nlohmann::json to_json(const Turn& t);
Turn turn_from_json(const nlohmann::json& j);

}  // namespace wisemind
