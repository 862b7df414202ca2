#include "common.hpp"

#include "doctest.h"

#include "wisemind/error.hpp"
#include "wisemind/patient.hpp"
#include "wisemind/text.hpp"

using namespace wisemind;

namespace {

DialogueHistory asked(std::initializer_list<std::optional<NodeId>> doctor_nodes) {
    DialogueHistory h;
    h.append({Speaker::doctor, "Hello", std::nullopt});
    h.append({Speaker::patient, "hi"});
    for (const auto& n : doctor_nodes) {
        h.append({Speaker::doctor, "question", n});
        h.append({Speaker::patient, "answer"});
    }
    return h;
}

DialogueHistory ask(DialogueHistory h, std::optional<NodeId> node) {
    h.append({Speaker::doctor, "next question", node});
    return h;
}

}  // namespace

TEST_SUITE("patient") {
    TEST_CASE("generated MDD case follows the golden flags") {
        auto c = testutil::template_case("depression", "MDD");
        REQUIRE(c.path.size() == 4);
        CHECK(c.path[0].node == "MDDROOT");
        CHECK(c.path[0].met);
        CHECK(c.path[1].node == "DEPEPS");
        CHECK(c.path[1].met);
        CHECK(c.path[2].node == "DEPEPS_HALL");
        CHECK_FALSE(c.path[2].met);
        CHECK(c.path[3].node == "DEPEPS_HALL_DUR");
        CHECK_FALSE(c.path[3].met);
        CHECK(c.label == "Major depressive disorder");
        CHECK(c.critical_nodes() == std::set<NodeId>{"MDDROOT", "DEPEPS", "DEPEPS_HALL", "DEPEPS_HALL_DUR"});
        validate_case(*testutil::graph("depression"), c);
    }

    TEST_CASE("story prompts carry the met flag") {
        std::vector<bool> met_seen;
        CallbackBackend b(
            [&](const ChatRequest& r) {
                met_seen.push_back(r.human.find("You do not have this symptom") == std::string::npos);
                return std::string("A short story.");
            },
            "s");
        auto g = testutil::graph("depression");
        generate_case(*g, "MDD", b);
        CHECK(met_seen == std::vector<bool>{true, true, false, false});
    }

    TEST_CASE("over-long stories are regenerated and then truncated") {
        int calls = 0;
        CallbackBackend b(
            [&](const ChatRequest&) {
                ++calls;
                std::string s;
                for (int i = 0; i < 150; ++i) s += "word ";
                return s;
            },
            "long");
        auto g = testutil::tiny();
        CaseGenConfig cfg;
        cfg.regenerations = 2;
        auto c = generate_case(*g, "L1", b, cfg);
        CHECK(calls == 2 * 3);
        for (const auto& [n, s] : c.stories) CHECK(text::word_count(s) == kStoryWordCap);
    }

    TEST_CASE("generate_cases spreads over leaves round robin") {
        auto g = testutil::graph("bipolar");
        auto story = make_template_story_backend(g);
        auto cs = generate_cases({g}, 20, *story);
        REQUIRE(cs.size() == 20);
        std::set<std::string> labels;
        for (const auto& c : cs) labels.insert(c.label);
        CHECK(labels.size() == g->leaf_labels().size());
        CHECK(cs.front().case_id == "bipolar-001");
    }

    TEST_CASE("case files round trip and validate") {
        auto c = testutil::golden();
        c.overlays.push_back({"DEPEPS", "Actually no.", OverlayKind::contradiction, NodeId("MDDROOT")});
        const auto path = std::filesystem::temp_directory_path() / "wisemind-case.json";
        save_case_file(c, path);
        auto back = load_case_file(path);
        std::filesystem::remove(path);
        CHECK(to_json(back) == to_json(c));

        auto g = testutil::graph("depression");
        auto wrong = c;
        wrong.label = "Bipolar I disorder";
        CHECK_THROWS_WITH_AS(validate_case(*g, wrong), doctest::Contains("label"), GraphError);
        auto skip = c;
        skip.path.erase(skip.path.begin() + 1);
        CHECK_THROWS_AS(validate_case(*g, skip), GraphError);
        auto nostory = c;
        nostory.stories.erase("DEPEPS");
        CHECK_THROWS_AS(validate_case(*g, nostory), GraphError);
    }

    TEST_CASE("scripted patient answers on-path, off-path and the greeting") {
        auto c = testutil::golden();
        ScriptedPatient p(c);
        DialogueHistory h;
        h.append({Speaker::doctor, "Hello", std::nullopt});
        CHECK(p.respond("Hello", h) == c.stories.at("MDDROOT"));
        CHECK(p.respond("", ask(asked({}), NodeId("DEPEPS"))) == c.stories.at("DEPEPS"));
        CHECK(p.respond("", ask(asked({}), NodeId("MANHX"))) == kOffPathDenial);
    }

    TEST_CASE("overlays replace only the first answer at their node") {
        auto c = testutil::golden();
        c.overlays.push_back({"DEPEPS", "I don't know.", OverlayKind::under_talking, std::nullopt});
        ScriptedPatient p(c);
        auto h = ask(asked({}), NodeId("DEPEPS"));
        CHECK(p.respond("", h) == "I don't know.");
        CHECK(p.respond("", h) == c.stories.at("DEPEPS"));
        CHECK(p.overlays_served() == 1);
    }

    TEST_CASE("node-less questions get the remaining stories in order") {
        auto c = testutil::golden();
        ScriptedPatient p(c);
        DialogueHistory h;
        h.append({Speaker::doctor, "Hello", std::nullopt});
        CHECK(p.respond("Hello", h) == c.stories.at("MDDROOT"));
        h.append({Speaker::patient, "x"});
        h.append({Speaker::doctor, "Tell me more", std::nullopt});
        CHECK(p.respond("", h) == c.stories.at("DEPEPS"));
        CHECK(p.respond("", h) == c.stories.at("DEPEPS_HALL"));
        CHECK(p.respond("", h) == c.stories.at("DEPEPS_HALL_DUR"));
        CHECK(p.respond("", h) == std::string(kNothingToAdd));
    }

    TEST_CASE("generative patient uses the patient temperature") {
        double temp = -1;
        AgentRole role = AgentRole::reasoning;
        auto b = std::make_shared<CallbackBackend>(
            [&](const ChatRequest& r) {
                temp = r.config.temperature;
                role = r.role;
                return std::string("  I have been sleeping badly.  ");
            },
            "pt");
        GenerativePatient p(testutil::golden(), b);
        CHECK(p.respond("How do you sleep?", ask(asked({}), NodeId("DEPEPS"))) == "I have been sleeping badly.");
        CHECK(temp == doctest::Approx(0.2));
        CHECK(role == AgentRole::patient);
    }
}
