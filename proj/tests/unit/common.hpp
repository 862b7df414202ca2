#pragma once

#include "wisemind/graph.hpp"
#include "wisemind/patient.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace testutil {

inline std::filesystem::path data(const std::string& rel) { return std::filesystem::path(WISEMIND_DATA_DIR) / rel; }

inline std::shared_ptr<const wisemind::KnowledgeGraph> graph(const std::string& disorder) {
    static std::map<std::string, std::shared_ptr<const wisemind::KnowledgeGraph>> cache;
    auto& g = cache[disorder];
    if (!g)
        g = std::make_shared<const wisemind::KnowledgeGraph>(
            wisemind::load_graph_file(data("graphs/" + disorder + ".json")));
    return g;
}

inline wisemind::PatientCase golden() { return wisemind::load_case_file(data("fixtures/cases/mdd-golden.json")); }

inline wisemind::PatientCase template_case(const std::string& disorder, const wisemind::NodeId& leaf) {
    auto g = graph(disorder);
    auto story = wisemind::make_template_story_backend(g);
    return wisemind::generate_case(*g, leaf, *story, {}, disorder + "-" + leaf);
}

// Small hand-built tree: ROOT -yes-> A -yes-> L1 / -no-> L2 ; ROOT -no-> L3.
inline std::shared_ptr<const wisemind::KnowledgeGraph> tiny() {
    using wisemind::CriterionNode;
    std::map<wisemind::NodeId, CriterionNode> n;
    n["ROOT"] = {"ROOT", "patient reports low mood", "A", "L3", std::nullopt};
    n["A"] = {"A", "symptoms lasted two weeks", "L1", "L2", std::nullopt};
    n["L1"] = {"L1", "", std::nullopt, std::nullopt, "Disorder one"};
    n["L2"] = {"L2", "", std::nullopt, std::nullopt, "Disorder two"};
    n["L3"] = {"L3", "", std::nullopt, std::nullopt, "No diagnosis"};
    return std::make_shared<const wisemind::KnowledgeGraph>("tiny", "ROOT", std::move(n));
}

}  // namespace testutil
