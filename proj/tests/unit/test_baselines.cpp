#include "common.hpp"

#include "doctest.h"

#include "wisemind/baselines.hpp"
#include "wisemind/error.hpp"
#include "wisemind/oracle.hpp"

#include <cmath>

using namespace wisemind;

namespace {

struct Canned final : PatientResponder {
    int calls = 0;
    std::string respond(const std::string&, const DialogueHistory&) override {
        ++calls;
        return "I have been feeling low for weeks.";
    }
};

std::shared_ptr<CallbackBackend> decide_after(int rounds, std::string decision, std::string knowledge = "") {
    auto n = std::make_shared<int>(0);
    return std::make_shared<CallbackBackend>(
        [=](const ChatRequest&) {
            const bool done = ++*n > rounds;
            std::string out = "<Response>Could you tell me more?</Response><Final_Decision>" +
                              (done ? decision : std::string("None")) + "</Final_Decision>";
            if (!knowledge.empty()) out += "<Knowledge_Used>" + knowledge + "</Knowledge_Used>";
            return out;
        },
        "free");
}

}  // namespace

TEST_SUITE("baselines") {
    TEST_CASE("token overlap score") {
        CHECK(token_overlap_score("low mood", "mood low sleep") == doctest::Approx(2.0 / std::sqrt(6.0)));
        CHECK(token_overlap_score("the and of", "low mood") == 0.0);
        CHECK(token_overlap_score("Low MOOD", "low mood") == doctest::Approx(1.0));
    }

    TEST_CASE("retrieval returns the best chunks in graph order on ties") {
        auto g = testutil::tiny();
        RetrievalIndex idx(*g, 1);
        REQUIRE(idx.chunks().size() == 2);
        auto hits = idx.retrieve("my mood is low");
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].node == "ROOT");
        CHECK(idx.retrieve("weeks two").front().node == "A");
        CHECK(idx.retrieve("bananas").empty());
        CHECK_THROWS_AS(RetrievalIndex(*g, 0), ConfigError);
    }

    TEST_CASE("knowledge used entries drop unknown ids and leaves") {
        auto g = testutil::tiny();
        auto a = parse_knowledge_used("<ROOT,1>, <A, 0>, <NOPE,1>, <L1,1>", *g);
        CHECK(a == std::vector<AssessedNode>{{"ROOT", DiagnosticAction::met_criteria},
                                             {"A", DiagnosticAction::not_met_criteria}});
    }

    TEST_CASE("criteria flattening is seeded") {
        auto g = testutil::graph("depression");
        CHECK(flatten_criteria(*g, 1) == flatten_criteria(*g, 1));
        const auto flat = flatten_criteria(*g, 1);
        for (const auto& id : g->breadth_first())
            if (!g->node(id).is_leaf()) CHECK(flat.find("[" + id + "]") != std::string::npos);
    }

    TEST_CASE("none marker") {
        CHECK(is_none_marker(" none "));
        CHECK(is_none_marker(""));
        CHECK_FALSE(is_none_marker("Disorder one"));
    }

    TEST_CASE("kfp keeps asking until a decision arrives") {
        Canned p;
        auto b = decide_after(2, "disorder ONE");
        auto r = run_kfp(*b, {"Disorder one", "Disorder two"}, p);
        CHECK(r.outcome.status == SessionStatus::diagnosed);
        CHECK(r.outcome.label == std::optional<std::string>("Disorder one"));
        CHECK(r.outcome.turn_count == 3);
        CHECK(p.calls == 3);
        CHECK(r.outcome.assessed_nodes.empty());
        CHECK_THROWS_AS(run_kfp(*b, {}, p), ConfigError);
    }

    TEST_CASE("unknown decisions and turn caps are inconclusive") {
        Canned p;
        auto r = run_kfp(*decide_after(0, "Flu"), {"Disorder one"}, p);
        CHECK(r.outcome.status == SessionStatus::inconclusive);
        CHECK(r.raw_decision == "Flu");
        BaselineConfig cfg;
        cfg.max_turns = 4;
        auto capped = run_kfp(*decide_after(100, "Disorder one"), {"Disorder one"}, p, cfg);
        CHECK(capped.outcome.status == SessionStatus::inconclusive);
        CHECK(capped.outcome.turn_count == 4);
    }

    TEST_CASE("tkep variants record the knowledge they used") {
        auto g = testutil::tiny();
        Canned p;
        for (auto kind : {BaselineKind::tkep_icl, BaselineKind::tkep_rag}) {
            auto r = run_tkep(kind, *decide_after(1, "Disorder two", "<ROOT,1>,<A,0>"), *g, p);
            CHECK(r.outcome.label == std::optional<std::string>("Disorder two"));
            CHECK(r.outcome.assessed_nodes.size() == 2);
        }
        CHECK_THROWS_AS(run_tkep(BaselineKind::kfp, *decide_after(0, "x"), *g, p), ConfigError);
    }

    TEST_CASE("single agent walks the same nodes as the dual-agent session") {
        for (const char* d : {"depression", "bipolar"}) {
            auto g = testutil::graph(d);
            for (const auto& leaf : g->leaves()) {
                auto c = testutil::template_case(d, leaf);
                ScriptedPatient p1(c), p2(c);
                auto dual = run_interview(g, oracle::reasoning(c), oracle::empathy(g), p1);
                auto single = run_skep_single(*oracle::single_agent(c, g), g, p2);
                CHECK(node_sequence(single.history) == node_sequence(dual.state.history));
                CHECK(single.outcome.label == dual.outcome.label);
            }
        }
    }

    TEST_CASE("kind names round trip") {
        for (auto k : {BaselineKind::kfp, BaselineKind::tkep_icl, BaselineKind::tkep_rag, BaselineKind::skep_single})
            CHECK(baseline_from_string(to_string(k)) == k);
        CHECK_FALSE(baseline_from_string("gpt"));
    }
}
