#pragma once

#include "wisemind/backend.hpp"
#include "wisemind/dialogue.hpp"
#include "wisemind/graph.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wisemind {

enum class BaselineKind { kfp, tkep_icl, tkep_rag, skep_single };

std::string_view to_string(BaselineKind k);
std::optional<BaselineKind> baseline_from_string(std::string_view s);

struct BaselineConfig {
    std::size_t max_turns = 40;
    std::size_t history_window = kDefaultHistoryWindow;
    std::string greeting{kDefaultGreeting};
    GenerationConfig generation = GenerationConfig::doctor();
    std::uint64_t shuffle_seed = 20240917;  // ICL flattening
    std::size_t top_k = 3;                  // RAG
    // Single agent only.
    ActionSpace actions = ActionSpace::full();
    int max_nmi = 3;
    int max_recheck = 2;
    int knowledge_depth = kDefaultKnowledgeDepth;
};

struct BaselineResult {
    DiagnosisOutcome outcome;
    DialogueHistory history;
    std::string raw_decision;  // last non-None Final_Decision, verbatim
};

// Lexical relevance of `chunk` to `query`; higher is better.
using RetrievalScorer = std::function<double(const std::string& query, const std::string& chunk)>;

// Case-folded, stopword-stripped token sets; |Q ∩ C| / sqrt(|Q| |C|).
double token_overlap_score(const std::string& query, const std::string& chunk);

// One chunk per node description, in breadth-first order. Immutable after construction.
class RetrievalIndex {
public:
    struct Chunk {
        NodeId node;
        std::string text;
    };

    RetrievalIndex(const KnowledgeGraph& g, std::size_t top_k = 3, RetrievalScorer scorer = token_overlap_score);

    // Best `top_k` chunks with positive score, ties broken by chunk order.
    std::vector<Chunk> retrieve(const std::string& query) const;

    const std::vector<Chunk>& chunks() const { return chunks_; }
    std::size_t top_k() const { return top_k_; }

private:
    std::vector<Chunk> chunks_;
    std::size_t top_k_;
    RetrievalScorer scorer_;
};

// "<DEPEPS,1>"-style entries; unknown ids are dropped.
std::vector<AssessedNode> parse_knowledge_used(const std::string& value, const KnowledgeGraph& g);

// Flattened "[ID] description" lines of every internal node, shuffled with `seed`.
std::string flatten_criteria(const KnowledgeGraph& g, std::uint64_t seed);

// The case-insensitive literal "None" (or an empty field).
bool is_none_marker(std::string_view decision);

BaselineResult run_kfp(ChatBackend& backend, const std::vector<std::string>& labels, PatientResponder& patient,
                       const BaselineConfig& config = {});

BaselineResult run_tkep(BaselineKind kind, ChatBackend& backend, const KnowledgeGraph& g, PatientResponder& patient,
                        const BaselineConfig& config = {}, const RetrievalIndex* index = nullptr);

// Same traversal as the dual-agent session, one combined prompt per turn.
BaselineResult run_skep_single(ChatBackend& backend, std::shared_ptr<const KnowledgeGraph> g,
                               PatientResponder& patient, const BaselineConfig& config = {});

}  // namespace wisemind
