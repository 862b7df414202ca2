#include "wisemind/safety.hpp"

#include "wisemind/error.hpp"
#include "wisemind/prompts.hpp"
#include "wisemind/tagged.hpp"
#include "wisemind/text.hpp"

#include <spdlog/spdlog.h>

#include <sstream>

namespace wisemind {

std::string_view to_string(RiskCategory c) {
    switch (c) {
        case RiskCategory::none: return "none";
        case RiskCategory::suicidal: return "suicidal";
        case RiskCategory::homicidal: return "homicidal";
        case RiskCategory::hallucination: return "hallucination";
    }
    return "none";
}

std::optional<RiskCategory> risk_from_string(std::string_view s) {
    for (auto c : {RiskCategory::none, RiskCategory::suicidal, RiskCategory::homicidal, RiskCategory::hallucination})
        if (text::iequals(text::trim(s), to_string(c))) return c;
    return std::nullopt;
}

namespace {

std::string normalize(std::string_view s) {
    std::string out = " ";
    for (const auto& tok : text::tokenize(s)) out += tok + " ";
    return out;
}

}  // namespace

RiskLexicon RiskLexicon::parse(std::string_view contents) {
    RiskLexicon lex;
    std::istringstream in{std::string(contents)};
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto phrase = text::trim(line);
        if (phrase.empty()) continue;
        auto category = RiskCategory::suicidal;
        if (const auto colon = phrase.find(':'); colon != std::string::npos) {
            if (auto c = risk_from_string(phrase.substr(0, colon)); c && *c != RiskCategory::none) {
                category = *c;
                phrase = text::trim(phrase.substr(colon + 1));
            }
        }
        if (!phrase.empty()) lex.add(category, std::move(phrase));
    }
    return lex;
}

RiskLexicon RiskLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open risk lexicon " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void RiskLexicon::add(RiskCategory category, std::string phrase) {
    auto normalized = normalize(phrase);
    if (normalized.size() <= 1) return;
    entries_.push_back({category, std::move(phrase), std::move(normalized)});
}

const RiskLexicon::Entry* RiskLexicon::match(std::string_view text) const {
    const auto haystack = normalize(text);
    for (const auto& e : entries_)
        if (haystack.find(e.normalized) != std::string::npos) return &e;
    return nullptr;
}

RiskAssessment assess_risk(std::string_view patient_response, const RiskLexicon& lexicon, ChatBackend* detector,
                           std::size_t turn_index) {
    RiskAssessment result;
    result.turn_index = turn_index;
    if (const auto* hit = lexicon.match(patient_response)) {
        result.category = hit->category;
        result.trigger_text = hit->phrase;
        return result;
    }
    if (!detector) return result;

    try {
        const auto prompt = render_risk_prompt(patient_response);
        ChatRequest req{prompt.system, prompt.human, AgentRole::detector, "", static_cast<int>(turn_index),
                        GenerationConfig::patient()};
        auto parsed = complete_parsed(*detector, req, tags::kRiskRequired, {}, [](const FieldMap& f) {
            if (!risk_from_string(f.at("Risk"))) throw ParseError("malformed_risk", "unknown risk category");
        });
        result.category = *risk_from_string(parsed.fields.at("Risk"));
        if (result.flagged()) result.trigger_text = text::truncate_words(patient_response, 40);
    } catch (const Error& e) {
        spdlog::warn("risk detector failed, using lexicon result only: {}", e.what());
    }
    return result;
}

std::string_view to_string(ImbalanceKind k) {
    switch (k) {
        case ImbalanceKind::none: return "none";
        case ImbalanceKind::under_talking: return "under_talking";
        case ImbalanceKind::over_talking: return "over_talking";
    }
    return "none";
}

ImbalanceSignal detect_imbalance(std::string_view patient_response, const ImbalanceThresholds& thresholds) {
    ImbalanceSignal s;
    s.measured_length = text::word_count(patient_response);
    if (s.measured_length < thresholds.under_words) {
        s.kind = ImbalanceKind::under_talking;
        s.threshold = thresholds.under_words;
    } else if (s.measured_length > thresholds.over_words) {
        s.kind = ImbalanceKind::over_talking;
        s.threshold = thresholds.over_words;
    }
    return s;
}

std::string adapt_strategy(const ImbalanceSignal& signal, std::string_view topic) {
    switch (signal.kind) {
        case ImbalanceKind::under_talking:
            return "The patient is giving minimal answers and may feel guarded. Relate to them first with a "
                   "brief, warm acknowledgement to build trust, approach the topic delicately, then ask one "
                   "simple closed-ended question (answerable with yes or no) about the current topic: " +
                   std::string(topic) + ".";
        case ImbalanceKind::over_talking:
            return "The patient is giving long answers that drift away from the assessment. Briefly "
                   "acknowledge what they shared, connect it back to the current topic (" +
                   std::string(topic) + ") and ask one focused question about that topic only.";
        case ImbalanceKind::none:
            break;
    }
    return {};
}

std::string_view to_string(EscalationAction a) {
    return a == EscalationAction::alert ? "alert" : "safety_stop";
}

nlohmann::json to_json(const EscalationRecord& r) {
    return {{"session_id", r.session_id},
            {"category", to_string(r.cause.category)},
            {"trigger_text", r.cause.trigger_text},
            {"turn_index", r.cause.turn_index},
            {"action_taken", to_string(r.action_taken)},
            {"timestamp", r.timestamp}};
}

FileAlertSink::FileAlertSink(std::filesystem::path path) : path_(std::move(path)) {}

void FileAlertSink::emit(const EscalationRecord& record) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        spdlog::error("cannot append to alert log {}", path_.string());
        return;
    }
    out << to_json(record).dump() << '\n';
}

void MemoryAlertSink::emit(const EscalationRecord& record) {
    std::lock_guard lock(mutex_);
    records_.push_back(record);
}

std::vector<EscalationRecord> MemoryAlertSink::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

}  // namespace wisemind
