#pragma once

#include "wisemind/backend.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace wisemind {

enum class RiskCategory { none, suicidal, homicidal, hallucination };

std::string_view to_string(RiskCategory c);
std::optional<RiskCategory> risk_from_string(std::string_view s);

struct RiskAssessment {
    RiskCategory category = RiskCategory::none;
    std::string trigger_text;  // empty iff category == none
    std::size_t turn_index = 0;

    bool flagged() const { return category != RiskCategory::none; }
};

// Curated risk phrases. File format: one phrase per line, '#' starts a comment,
// an optional "category:" prefix (suicidal, homicidal, hallucination) assigns
// the category; unprefixed phrases count as suicidal. Matching is
// case-insensitive on whole words, ignoring punctuation.
class RiskLexicon {
public:
    struct Entry {
        RiskCategory category;
        std::string phrase;      // as written
        std::string normalized;  // " tok tok "
    };

    RiskLexicon() = default;
    static RiskLexicon parse(std::string_view contents);
    static RiskLexicon load(const std::filesystem::path& path);

    void add(RiskCategory category, std::string phrase);
    const std::vector<Entry>& entries() const { return entries_; }

    // First matching entry in file order.
    const Entry* match(std::string_view text) const;

private:
    std::vector<Entry> entries_;
};

// Stage 1 lexicon match; stage 2 (only when stage 1 is negative and a detector
// is given) asks the backend to classify. Detector failures fall back to the
// lexicon result.
RiskAssessment assess_risk(std::string_view patient_response, const RiskLexicon& lexicon,
                           ChatBackend* detector = nullptr, std::size_t turn_index = 0);

enum class ImbalanceKind { none, under_talking, over_talking };

std::string_view to_string(ImbalanceKind k);

struct ImbalanceThresholds {
    std::size_t under_words = 5;    // fewer words -> under-talking
    std::size_t over_words = 150;   // more words -> over-talking
};

struct ImbalanceSignal {
    ImbalanceKind kind = ImbalanceKind::none;
    std::size_t measured_length = 0;  // words
    std::size_t threshold = 0;        // threshold that was crossed, 0 when none
};

ImbalanceSignal detect_imbalance(std::string_view patient_response, const ImbalanceThresholds& thresholds = {});

// Empathy-agent directive for a non-none signal. `topic` names the current
// criterion (node id and short description).
std::string adapt_strategy(const ImbalanceSignal& signal, std::string_view topic);

enum class EscalationAction { safety_stop, alert };

std::string_view to_string(EscalationAction a);

struct EscalationRecord {
    std::string session_id;
    RiskAssessment cause;
    EscalationAction action_taken = EscalationAction::safety_stop;
    std::uint64_t timestamp = 0;  // session turn timestamp at escalation
};

nlohmann::json to_json(const EscalationRecord& r);

class AlertSink {
public:
    virtual ~AlertSink() = default;
    virtual void emit(const EscalationRecord& record) = 0;
};

// Append-only JSON-lines file; serialized across sessions.
class FileAlertSink final : public AlertSink {
public:
    explicit FileAlertSink(std::filesystem::path path);
    void emit(const EscalationRecord& record) override;

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

class MemoryAlertSink final : public AlertSink {
public:
    void emit(const EscalationRecord& record) override;
    std::vector<EscalationRecord> records() const;

private:
    mutable std::mutex mutex_;
    std::vector<EscalationRecord> records_;
};

// Resource text shown to the patient when a session is stopped for safety.
inline constexpr std::string_view kSafetyMessage =
    "I'm concerned about your safety based on what you just shared, so I'm pausing this assessment and "
    "alerting a clinician right away. If you are in immediate danger, please contact your local emergency "
    "number or a crisis line now. You don't have to go through this alone.";

}  // namespace wisemind
