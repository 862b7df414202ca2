#include "wisemind/graph.hpp"

#include "wisemind/error.hpp"

#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace wisemind {

std::string_view to_string(Branch b) {
    switch (b) {
        case Branch::yes: return "yes";
        case Branch::no: return "no";
        case Branch::none: return "none";
    }
    return "none";
}

KnowledgeGraph::KnowledgeGraph(std::string disorder, NodeId root, std::map<NodeId, CriterionNode> nodes)
    : disorder_(std::move(disorder)), root_(std::move(root)), nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw GraphError("schema_violation", "graph has no nodes");
    if (!nodes_.count(root_)) throw GraphError("missing_node", "root '" + root_ + "' is not a node");

    for (const auto& [id, n] : nodes_) {
        if (id != n.id) throw GraphError("schema_violation", "node key '" + id + "' does not match its id");
        const bool has_child = n.yes_child || n.no_child;
        if (n.diagnosis && has_child)
            throw GraphError("leaf_with_children", "node '" + id + "' has a diagnosis and children");
        if (!n.diagnosis && !has_child)
            throw GraphError("leaf_without_diagnosis", "leaf '" + id + "' has no diagnosis");
        if (n.diagnosis && n.diagnosis->empty())
            throw GraphError("leaf_without_diagnosis", "leaf '" + id + "' has an empty diagnosis");
        if (!n.diagnosis && n.description.empty())
            throw GraphError("schema_violation", "internal node '" + id + "' has an empty description");
        for (const auto* child : {&n.yes_child, &n.no_child}) {
            if (!*child) continue;
            if (!nodes_.count(**child))
                throw GraphError("missing_node", "node '" + id + "' references missing child '" + **child + "'");
            if (**child == root_)
                throw GraphError("cycle", "cycle detected: '" + id + "' points back to the root");
            auto [it, inserted] = parents_.emplace(**child, id);
            if (!inserted && it->second != id)
                throw GraphError("not_a_tree", "node '" + **child + "' has more than one parent");
            if (!inserted)
                throw GraphError("not_a_tree", "node '" + id + "' uses '" + **child + "' for both branches");
        }
    }

    // Every non-root node has exactly one parent at this point, so a walk up from
    // any node either reaches the root or loops.
    for (const auto& [id, n] : nodes_) {
        std::set<NodeId> seen{id};
        auto cur = id;
        while (cur != root_) {
            auto p = parents_.find(cur);
            if (p == parents_.end())
                throw GraphError("unreachable_node", "node '" + id + "' is unreachable from the root");
            cur = p->second;
            if (!seen.insert(cur).second) throw GraphError("cycle", "cycle detected through node '" + cur + "'");
        }
    }

    std::deque<NodeId> queue{root_};
    while (!queue.empty()) {
        auto id = std::move(queue.front());
        queue.pop_front();
        const auto& n = nodes_.at(id);
        if (n.yes_child) queue.push_back(*n.yes_child);
        if (n.no_child) queue.push_back(*n.no_child);
        bfs_order_.push_back(std::move(id));
    }
}

const CriterionNode& KnowledgeGraph::node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw GraphError("unknown_node", "unknown node '" + id + "'");
    return it->second;
}

const NodeId* KnowledgeGraph::parent(const NodeId& id) const {
    auto it = parents_.find(id);
    return it == parents_.end() ? nullptr : &it->second;
}

std::vector<NodeId> KnowledgeGraph::leaves() const {
    std::vector<NodeId> out;
    for (const auto& id : bfs_order_)
        if (nodes_.at(id).is_leaf()) out.push_back(id);
    return out;
}

std::vector<std::string> KnowledgeGraph::leaf_labels() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& id : leaves()) {
        const auto& label = *nodes_.at(id).diagnosis;
        if (seen.insert(label).second) out.push_back(label);
    }
    return out;
}

std::optional<NodeId> KnowledgeGraph::leaf_for_label(const std::string& label) const {
    for (const auto& id : leaves())
        if (*nodes_.at(id).diagnosis == label) return id;
    return std::nullopt;
}

NodePath KnowledgeGraph::path_to(const NodeId& target) const {
    node(target);
    NodePath reversed{{target, Branch::none}};
    auto cur = target;
    while (const auto* p = parent(cur)) {
        const auto& pn = nodes_.at(*p);
        reversed.push_back({*p, pn.yes_child == cur ? Branch::yes : Branch::no});
        cur = *p;
    }
    return {reversed.rbegin(), reversed.rend()};
}

namespace {

const std::set<std::string> kTopLevelKeys{"disorder", "root", "nodes"};
const std::set<std::string> kNodeKeys{"description", "yes", "no", "diagnosis", "critical"};

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    if (!obj.at(key).is_string())
        throw GraphError("schema_violation", where + "." + key + " must be a string");
    return obj.at(key).get<std::string>();
}

}  // namespace

KnowledgeGraph load_graph(const nlohmann::json& doc) {
    if (!doc.is_object()) throw GraphError("schema_violation", "document must be a JSON object");
    for (const auto& [key, _] : doc.items())
        if (!kTopLevelKeys.count(key)) throw GraphError("schema_violation", "unknown field '" + key + "'");
    for (const auto& key : kTopLevelKeys)
        if (!doc.contains(key)) throw GraphError("schema_violation", "missing field '" + key + "'");
    if (!doc["disorder"].is_string()) throw GraphError("schema_violation", "field 'disorder' must be a string");
    if (!doc["root"].is_string()) throw GraphError("schema_violation", "field 'root' must be a string");
    if (!doc["nodes"].is_object()) throw GraphError("schema_violation", "field 'nodes' must be an object");

    std::map<NodeId, CriterionNode> nodes;
    for (const auto& [id, body] : doc["nodes"].items()) {
        const auto where = "nodes." + id;
        if (id.empty()) throw GraphError("schema_violation", "empty node id");
        if (!body.is_object()) throw GraphError("schema_violation", where + " must be an object");
        for (const auto& [key, _] : body.items())
            if (!kNodeKeys.count(key)) throw GraphError("schema_violation", "unknown field '" + where + "." + key + "'");
        CriterionNode n;
        n.id = id;
        n.description = optional_string(body, "description", where).value_or("");
        n.yes_child = optional_string(body, "yes", where);
        n.no_child = optional_string(body, "no", where);
        n.diagnosis = optional_string(body, "diagnosis", where);
        if (body.contains("critical")) {
            if (!body["critical"].is_boolean())
                throw GraphError("schema_violation", where + ".critical must be a boolean");
            n.is_critical = body["critical"].get<bool>();
        }
        nodes.emplace(id, std::move(n));
    }
    return KnowledgeGraph(doc["disorder"].get<std::string>(), doc["root"].get<std::string>(), std::move(nodes));
}

KnowledgeGraph load_graph_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("io_error", "cannot open graph file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();

    // nlohmann keeps the last of duplicated keys, so duplicates are caught while parsing.
    std::string top_key;
    std::set<std::string> node_ids;
    std::optional<std::string> duplicate;
    auto cb = [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
        if (event == nlohmann::json::parse_event_t::key) {
            if (depth == 1) top_key = parsed.get<std::string>();
            if (depth == 2 && top_key == "nodes" && !node_ids.insert(parsed.get<std::string>()).second)
                duplicate = parsed.get<std::string>();
        }
        return true;
    };
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str(), cb);
    } catch (const nlohmann::json::parse_error& e) {
        throw GraphError("schema_violation", path.string() + ": " + e.what());
    }
    if (duplicate) throw GraphError("duplicate_id", "duplicate node id '" + *duplicate + "'");
    return load_graph(doc);
}

nlohmann::json to_json(const KnowledgeGraph& g) {
    nlohmann::json nodes = nlohmann::json::object();
    for (const auto& [id, n] : g.nodes()) {
        nlohmann::json body = {{"description", n.description},
                               {"yes", n.yes_child ? nlohmann::json(*n.yes_child) : nlohmann::json()},
                               {"no", n.no_child ? nlohmann::json(*n.no_child) : nlohmann::json()}};
        if (n.diagnosis) body["diagnosis"] = *n.diagnosis;
        if (n.is_critical) body["critical"] = true;
        nodes[id] = std::move(body);
    }
    return {{"disorder", g.disorder()}, {"root", g.root()}, {"nodes", std::move(nodes)}};
}

NodeId transition(const KnowledgeGraph& g, const NodeId& v, DiagnosticAction a, const std::optional<NodeId>& reentry) {
    const auto& n = g.node(v);
    switch (a) {
        case DiagnosticAction::needs_more_information:
            return v;
        case DiagnosticAction::contradiction:
            return reentry && g.contains(*reentry) ? *reentry : v;
        case DiagnosticAction::met_criteria:
        case DiagnosticAction::not_met_criteria: {
            if (n.is_leaf()) throw GraphError("off_leaf", "cannot transition off leaf '" + v + "'");
            const auto& child = a == DiagnosticAction::met_criteria ? n.yes_child : n.no_child;
            if (!child)
                throw GraphError("missing_branch", "node '" + v + "' has no " +
                                                       (a == DiagnosticAction::met_criteria ? "yes" : "no") + " branch");
            return *child;
        }
    }
    return v;
}

NodeId get_start_node(const KnowledgeGraph& g, std::string_view) { return g.root(); }

std::string node_knowledge(const KnowledgeGraph& g, const NodeId& v, int depth) {
    const auto& start = g.node(v);
    if (start.is_leaf()) return "Diagnosis: " + *start.diagnosis;

    std::ostringstream out;
    std::deque<std::pair<NodeId, int>> queue{{v, 0}};
    bool first = true;
    while (!queue.empty()) {
        auto [id, d] = queue.front();
        queue.pop_front();
        const auto& n = g.node(id);
        if (!first) out << '\n';
        first = false;
        if (n.is_leaf()) {
            out << "[" << id << "] Diagnosis: " << *n.diagnosis;
        } else {
            out << "[" << id << "] " << n.description;
        }
        if (d >= depth || n.is_leaf()) continue;
        if (n.yes_child) queue.emplace_back(*n.yes_child, d + 1);
        if (n.no_child) queue.emplace_back(*n.no_child, d + 1);
    }
    return out.str();
}

std::vector<std::string> leaf_labels(const KnowledgeGraph& g) { return g.leaf_labels(); }

NodeId replay(const KnowledgeGraph& g, const NodePath& path) {
    auto cur = g.root();
    for (const auto& step : path) {
        if (step.node != cur)
            throw GraphError("path_mismatch", "path entry '" + step.node + "' is not reachable at this step");
        if (step.branch == Branch::none) break;
        cur = transition(g, cur,
                         step.branch == Branch::yes ? DiagnosticAction::met_criteria
                                                    : DiagnosticAction::not_met_criteria);
    }
    return cur;
}

namespace {

std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c == '\n' ? ' ' : c);
    }
    return out;
}

std::string clip(std::string_view s, std::size_t max_chars) {
    if (s.size() <= max_chars) return std::string(s);
    return std::string(s.substr(0, max_chars)) + "...";
}

}  // namespace

std::string to_dot(const KnowledgeGraph& g, std::size_t max_chars) {
    std::ostringstream out;
    out << "digraph \"" << dot_escape(g.disorder()) << "\" {\n";
    out << "  node [shape=box, fontsize=10];\n";
    for (const auto& id : g.breadth_first()) {
        const auto& n = g.node(id);
        const auto body = n.is_leaf() ? *n.diagnosis : n.description;
        out << "  \"" << dot_escape(id) << "\" [label=\"" << dot_escape(id) << "\\n"
            << dot_escape(clip(body, max_chars)) << "\"" << (n.is_leaf() ? ", shape=ellipse" : "") << "];\n";
    }
    for (const auto& id : g.breadth_first()) {
        const auto& n = g.node(id);
        if (n.yes_child) out << "  \"" << dot_escape(id) << "\" -> \"" << dot_escape(*n.yes_child) << "\" [label=\"yes\"];\n";
        if (n.no_child) out << "  \"" << dot_escape(id) << "\" -> \"" << dot_escape(*n.no_child) << "\" [label=\"no\"];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace wisemind
