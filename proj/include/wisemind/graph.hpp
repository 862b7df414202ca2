#pragma once

#include "wisemind/action.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wisemind {

using NodeId = std::string;

// One criterion or decision point of a differential-diagnosis tree. Leaves
// carry a diagnosis label and no children; internal nodes carry a description
// and at least one child.
struct CriterionNode {
    NodeId id;
    std::string description;
    std::optional<NodeId> yes_child;
    std::optional<NodeId> no_child;
    std::optional<std::string> diagnosis;
    bool is_critical = false;

    bool is_leaf() const { return diagnosis.has_value(); }
};

enum class Branch { none, yes, no };

std::string_view to_string(Branch b);

struct PathStep {
    NodeId node;
    Branch branch = Branch::none;  // branch taken out of `node`; none for the last entry

    bool operator==(const PathStep&) const = default;
};

// Root-to-current walk through a graph.
using NodePath = std::vector<PathStep>;

// Immutable after construction; safe to share between sessions.
class KnowledgeGraph {
public:
    // Validates every structural invariant; throws GraphError on violation.
    KnowledgeGraph(std::string disorder, NodeId root, std::map<NodeId, CriterionNode> nodes);

    const std::string& disorder() const { return disorder_; }
    const NodeId& root() const { return root_; }
    const std::map<NodeId, CriterionNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }

    bool contains(const NodeId& id) const { return nodes_.count(id) != 0; }
    // Throws GraphError("unknown_node") when absent.
    const CriterionNode& node(const NodeId& id) const;
    const NodeId* parent(const NodeId& id) const;

    // Node ids in breadth-first order from the root (yes child before no child).
    const std::vector<NodeId>& breadth_first() const { return bfs_order_; }

    // Leaf labels in breadth-first order, each exactly once.
    std::vector<std::string> leaf_labels() const;
    std::vector<NodeId> leaves() const;
    std::optional<NodeId> leaf_for_label(const std::string& label) const;

    // Unique root-to-leaf walk; entries carry the branch taken at each internal node.
    NodePath path_to(const NodeId& target) const;

private:
    std::string disorder_;
    NodeId root_;
    std::map<NodeId, CriterionNode> nodes_;
    std::map<NodeId, NodeId> parents_;
    std::vector<NodeId> bfs_order_;
};

// Parses and validates an SKG document: {disorder, root, nodes: {id: {description,
// yes, no, diagnosis?, critical?}}}. Unknown fields are rejected.
KnowledgeGraph load_graph(const nlohmann::json& doc);
KnowledgeGraph load_graph_file(const std::filesystem::path& path);
nlohmann::json to_json(const KnowledgeGraph& g);

// Next node for a decision. met -> yes child, not_met -> no child,
// needs_more_information -> same node, contradiction -> `reentry` when given
// (and present in the graph), otherwise the same node.
NodeId transition(const KnowledgeGraph& g, const NodeId& v, DiagnosticAction a,
                  const std::optional<NodeId>& reentry = std::nullopt);

// The complaint seeds the dialogue; the start node is always the root.
NodeId get_start_node(const KnowledgeGraph& g, std::string_view complaint);

inline constexpr int kDefaultKnowledgeDepth = 1;

// Current criterion followed by breadth-first descendants within `depth` hops.
// Leaves contribute their diagnosis text.
std::string node_knowledge(const KnowledgeGraph& g, const NodeId& v, int depth = kDefaultKnowledgeDepth);

std::vector<std::string> leaf_labels(const KnowledgeGraph& g);

// Replays the branch decisions of `path` from the root and returns the node reached.
NodeId replay(const KnowledgeGraph& g, const NodePath& path);

// Graphviz export; descriptions truncated to `max_chars`.
std::string to_dot(const KnowledgeGraph& g, std::size_t max_chars = 48);

}  // namespace wisemind
