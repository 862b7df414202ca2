#pragma once

#include "wisemind/backend.hpp"
#include "wisemind/graph.hpp"
#include "wisemind/patient.hpp"

#include <memory>
#include <string>

// Deterministic stand-ins for the language models, answering from a case's
// ground truth. They read the node from the request and the offered actions
// from the rendered menu, so ablated action spaces behave as a faithful model
// would: an unflagged contradiction is taken at face value.
namespace wisemind::oracle {

// Reasoning agent: met/not_met from the case path. A contradiction overlay
// yields detect_contradiction naming the contradicted node (or, when that
// action is not offered, the inverted decision); an under-talking overlay
// yields ask_more_detail when offered.
BackendPtr reasoning(const PatientCase& c);

// Empathy agent: a question about the target node, or a closing statement at a leaf.
BackendPtr empathy(std::shared_ptr<const KnowledgeGraph> graph);

// Single agent doing both jobs in one reply.
BackendPtr single_agent(const PatientCase& c, std::shared_ptr<const KnowledgeGraph> graph);

// Question text the empathy oracle uses for a node.
std::string question_for(const CriterionNode& node);

// The patient response embedded in a reasoning or single-agent prompt.
std::string patient_response_in(const std::string& human);

// Fault injection: the first `faults` calls return `garbage`, later calls go to `inner`.
BackendPtr faulty(BackendPtr inner, int faults, std::string garbage = "I am not sure what to say here.");

}  // namespace wisemind::oracle
