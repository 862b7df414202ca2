#pragma once

#include "wisemind/baselines.hpp"
#include "wisemind/dialogue.hpp"
#include "wisemind/graph.hpp"
#include "wisemind/patient.hpp"
#include "wisemind/safety.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wisemind {

struct InteractionLog {
    std::string session_id;
    std::string system;  // baseline kind or WiseMind variant
    std::string case_id;
    std::optional<std::string> predicted_label;
    std::set<NodeId> assessed_nodes;
    SessionStatus status = SessionStatus::inconclusive;
    bool escalated = false;
    std::string transcript_ref;
};

using CaseMap = std::map<std::string, PatientCase>;

CaseMap index_cases(const std::vector<PatientCase>& cases);

// |assessed ∩ critical| / |critical| for one log.
double cn_recall(const InteractionLog& log, const PatientCase& c);
// Mean over logs; throws Error("unknown_case") naming a missing case. 0 for no logs.
double cn_recall(const std::vector<InteractionLog>& logs, const CaseMap& cases);
// Exact label matches / logs; inconclusive and escalated runs count as wrong.
double ddx_accuracy(const std::vector<InteractionLog>& logs, const CaseMap& cases);

// ---- random-guess baseline ------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

// Uniform ground truth and uniform guess over the leaves, `trials` times.
// Trial i draws from its own stream seeded with splitmix64(seed + i), so the
// parallel and serial versions count exactly the same hits.
double random_guess_accuracy(const KnowledgeGraph& g, std::size_t trials, std::uint64_t seed = 2024);
double random_guess_accuracy_serial(const KnowledgeGraph& g, std::size_t trials, std::uint64_t seed = 2024);

// ---- benchmark matrix -----------------------------------------------------

enum class SystemKind { wisemind, kfp, tkep_icl, tkep_rag, skep_single };

std::string_view to_string(SystemKind k);

using GraphPtr = std::shared_ptr<const KnowledgeGraph>;
using BackendFactory = std::function<BackendPtr(const PatientCase&, const GraphPtr&)>;
using PatientFactory = std::function<std::unique_ptr<PatientResponder>(const PatientCase&)>;

struct SystemConfig {
    std::string name;  // row label
    SystemKind kind = SystemKind::wisemind;
    BackendFactory primary;  // RA for WiseMind, the only backend for baselines
    BackendFactory empathy;  // WiseMind only
    InterviewConfig interview;
    BaselineConfig baseline;
};

struct BenchmarkInput {
    std::vector<SystemConfig> systems;
    std::map<std::string, GraphPtr> graphs;  // by disorder
    std::vector<PatientCase> cases;
    PatientFactory patient;  // scripted replay when empty
};

struct RunRecord {
    std::size_t system_index = 0;
    InteractionLog log;
    std::vector<NodeId> node_sequence;
    DialogueHistory history;
    SessionState state;  // WiseMind runs only
    std::string error;   // non-empty when the run failed
};

// Runs one (system, case) pair; failures become inconclusive records.
RunRecord run_case(const BenchmarkInput& input, std::size_t system_index, const PatientCase& c);

// All (system, case) pairs, system-major. The parallel version spreads pairs
// over OpenMP threads; both return identical records.
std::vector<RunRecord> run_matrix(const BenchmarkInput& input);
std::vector<RunRecord> run_matrix_serial(const BenchmarkInput& input);

struct MetricRow {
    std::string system;
    std::string disorder;  // "average" for the per-system mean over disorders
    double ddx_acc = 0.0;
    double cn_recall = 0.0;
    std::size_t n_cases = 0;
    std::optional<double> help, empathy, specialty, precision;
};

struct MetricReport {
    std::vector<MetricRow> rows;  // systems in configuration order, disorders sorted, then average
};

MetricReport aggregate(const BenchmarkInput& input, const std::vector<RunRecord>& records);
MetricReport run_benchmark(const BenchmarkInput& input);

std::string report_csv(const MetricReport& r);
std::string report_table(const MetricReport& r);

// Oracle-backed WiseMind row (optionally with an ablated action space).
SystemConfig oracle_wisemind(std::string name = "oracle-wisemind", ActionSpace actions = ActionSpace::full());
SystemConfig oracle_single_agent(std::string name = "oracle-skep-single");

// ---- adversarial suite ----------------------------------------------------

enum class AdversarialCategory { ra_error, ea_error, risk, contradiction, under_talking, over_talking };

inline constexpr AdversarialCategory kAdversarialCategories[] = {
    AdversarialCategory::ra_error,      AdversarialCategory::ea_error,      AdversarialCategory::risk,
    AdversarialCategory::contradiction, AdversarialCategory::under_talking, AdversarialCategory::over_talking};

std::string_view to_string(AdversarialCategory c);
std::string_view display_name(AdversarialCategory c);

struct AdversarialCase {
    AdversarialCategory category;
    PatientCase patient;  // carries the overlay for extrinsic categories
    int ra_faults = 0;    // garbage replies before the oracle answers
    int ea_faults = 0;
};

// `per_category` cases per category built on top of `base` cases (those with
// at least three decisions are preferred).
std::vector<AdversarialCase> build_adversarial_suite(const std::vector<PatientCase>& base, std::size_t per_category = 5,
                                                     int retry_limit = 2);

struct AdversarialOutcome {
    AdversarialCase adv;
    DiagnosisOutcome outcome;
    bool resolved = false;
    bool escalated = false;
    bool directive_hit = false;  // closed-ended directive / topic redirect issued
    std::string error;
};

struct AdversarialRow {
    AdversarialCategory category;
    std::size_t cases = 0;
    std::size_t resolved = 0;
    std::size_t escalated = 0;
    std::size_t directive_hits = 0;
};

struct AdversarialReport {
    std::vector<AdversarialRow> rows;  // categories present, in canonical order
    std::vector<AdversarialOutcome> outcomes;
};

AdversarialReport run_adversarial_suite(const std::vector<AdversarialCase>& suite,
                                        const std::map<std::string, GraphPtr>& graphs,
                                        std::shared_ptr<const RiskLexicon> lexicon, InterviewConfig config = {});

std::string adversarial_csv(const AdversarialReport& r);

}  // namespace wisemind
