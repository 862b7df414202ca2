#pragma once

#include "wisemind/backend.hpp"
#include "wisemind/dialogue.hpp"
#include "wisemind/graph.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wisemind {

struct CaseStep {
    NodeId node;
    bool met = false;

    bool operator==(const CaseStep&) const = default;
};

enum class OverlayKind { generic, contradiction, under_talking, over_talking, risk };

std::string_view to_string(OverlayKind k);
OverlayKind overlay_kind_from_string(std::string_view s);

// Replaces the patient's first answer to a probe of `at_node`.
struct Overlay {
    NodeId at_node;
    std::string replacement_text;
    OverlayKind kind = OverlayKind::generic;
    std::optional<NodeId> refers_to;  // contradictions: the earlier topic being contradicted

    bool operator==(const Overlay&) const = default;
};

inline constexpr std::size_t kStoryWordCap = 100;
inline constexpr std::string_view kOffPathDenial = "No, I haven't experienced that.";
inline constexpr std::string_view kNothingToAdd = "I don't think there is anything else to add.";
inline constexpr std::string_view kDefaultComplaint = "I haven't been feeling like myself lately.";

struct PatientCase {
    std::string case_id;
    std::string disorder;
    std::string label;            // ground-truth diagnosis
    std::vector<CaseStep> path;   // internal nodes root .. last decision
    std::map<NodeId, std::string> stories;
    std::vector<Overlay> overlays;

    bool operator==(const PatientCase&) const = default;

    const CaseStep* step(const NodeId& node) const;
    // Critical node set: the nodes on the ground-truth path.
    std::set<NodeId> critical_nodes() const;
    // Story of the root, or a fixed complaint for single-node graphs.
    std::string complaint() const;
};

// Throws GraphError naming the first violated invariant.
void validate_case(const KnowledgeGraph& g, const PatientCase& c);

nlohmann::json to_json(const PatientCase& c);
PatientCase case_from_json(const nlohmann::json& j);
PatientCase load_case_file(const std::filesystem::path& path);
void save_case_file(const PatientCase& c, const std::filesystem::path& path);

// Root-to-leaf decisions for a leaf.
std::vector<CaseStep> case_path_to(const KnowledgeGraph& g, const NodeId& leaf);

struct CaseGenConfig {
    std::size_t word_cap = kStoryWordCap;
    int regenerations = 2;
    GenerationConfig generation = GenerationConfig::patient();
};

// Stories are requested in path order; each prompt sees the earlier stories.
PatientCase generate_case(const KnowledgeGraph& g, const NodeId& target_leaf, ChatBackend& story_backend,
                          const CaseGenConfig& config = {}, std::string case_id = {});

// `total` cases spread round-robin over the graphs, and over each graph's
// leaves in breadth-first order.
std::vector<PatientCase> generate_cases(const std::vector<std::shared_ptr<const KnowledgeGraph>>& graphs,
                                        std::size_t total, ChatBackend& story_backend,
                                        const CaseGenConfig& config = {});

// Deterministic offline story writer keyed on the node in the request.
BackendPtr make_template_story_backend(std::shared_ptr<const KnowledgeGraph> graph);

// The node a doctor turn probed; nullopt for the greeting and node-less turns.
std::optional<NodeId> probed_node(const DialogueHistory& history);

// Deterministic replay of a case. On-path probes return the node's story,
// off-path probes a fixed denial. Each overlay replaces the first answer at its
// node. Doctor turns without a node (baselines) get the unserved stories in
// path order.
class ScriptedPatient final : public PatientResponder {
public:
    explicit ScriptedPatient(PatientCase c) : case_(std::move(c)) {}

    std::string respond(const std::string& doctor_utterance, const DialogueHistory& history) override;
    // Pure lookup used by respond(); ignores overlays and narration state.
    std::string respond_scripted(const std::optional<NodeId>& node) const;

    const PatientCase& patient_case() const { return case_; }
    std::size_t overlays_served() const { return served_.size(); }

private:
    PatientCase case_;
    std::set<std::size_t> served_;
    std::size_t narrated_ = 1;  // the root story is the complaint
};

// Role-play through a chat backend at patient temperature.
class GenerativePatient final : public PatientResponder {
public:
    GenerativePatient(PatientCase c, BackendPtr backend, std::size_t history_window = kDefaultHistoryWindow,
                      GenerationConfig generation = GenerationConfig::patient());

    std::string respond(const std::string& doctor_utterance, const DialogueHistory& history) override;

private:
    PatientCase case_;
    BackendPtr backend_;
    std::size_t window_;
    GenerationConfig generation_;
};

std::string respond_generative(const PatientCase& c, const DialogueHistory& history,
                               const std::string& doctor_utterance, ChatBackend& backend,
                               std::size_t history_window = kDefaultHistoryWindow,
                               const GenerationConfig& generation = GenerationConfig::patient());

}  // namespace wisemind
