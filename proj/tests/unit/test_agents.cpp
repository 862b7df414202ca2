#include "common.hpp"

#include "doctest.h"

#include "wisemind/action.hpp"
#include "wisemind/backend.hpp"
#include "wisemind/error.hpp"
#include "wisemind/prompts.hpp"
#include "wisemind/tagged.hpp"

#include <random>

using namespace wisemind;

namespace {

std::shared_ptr<CallbackBackend> replies(std::vector<std::string> seq) {
    auto i = std::make_shared<std::size_t>(0);
    return std::make_shared<CallbackBackend>(
        [seq, i](const ChatRequest&) { return seq[std::min((*i)++, seq.size() - 1)]; },
        "seq");
}

}  // namespace

TEST_SUITE("agents") {
    TEST_CASE("actions parse canonical names and aliases") {
        CHECK(parse_action("met_criteria") == DiagnosticAction::met_criteria);
        CHECK(parse_action(" NOT_MET_CRITERIA ") == DiagnosticAction::not_met_criteria);
        CHECK(parse_action("ask_more_detail") == DiagnosticAction::needs_more_information);
        CHECK(parse_action("more_details") == DiagnosticAction::needs_more_information);
        CHECK(parse_action("Detect_Contradiction") == DiagnosticAction::contradiction);
        CHECK_FALSE(action_from_string("probably"));
        CHECK_THROWS_AS(parse_action("probably"), MalformedAction);
        for (auto a : kAllActions) {
            CHECK(parse_action(to_string(a)) == a);
            CHECK(parse_action(prompt_name(a)) == a);
        }
    }

    TEST_CASE("action space ablation") {
        const auto s = ActionSpace::full().without(DiagnosticAction::contradiction);
        CHECK_FALSE(s.allows(DiagnosticAction::contradiction));
        CHECK(s.allows(DiagnosticAction::met_criteria));
        CHECK(s.with(DiagnosticAction::contradiction).allows(DiagnosticAction::contradiction));
    }

    TEST_CASE("tagged parser tolerates prose, case and missing close tags") {
        auto f = parse_tagged("Sure!\n<action>Met_Criteria</action>\n<Reason_for_Action>clear</Reason_for_Action>",
                              {"Action"}, {"Reason_for_Action"});
        CHECK(f.at("Action") == "Met_Criteria");
        CHECK(f.at("Reason_for_Action") == "clear");

        auto open = parse_tagged("<Action>not_met_criteria\n<Response>How are you sleeping?", {"Action", "Response"});
        CHECK(open.at("Action") == "not_met_criteria");
        CHECK(open.at("Response") == "How are you sleeping?");

        auto nested = parse_tagged("<Response>outer <Response>inner</Response> tail</Response>", {"Response"});
        CHECK(nested.at("Response") == "inner");
    }

    TEST_CASE("tagged parser errors are typed") {
        CHECK_THROWS_AS(parse_tagged("no tags here", {"Action"}), MissingTag);
        CHECK_THROWS_AS(parse_tagged("<Action>guess</Action>", {"Action"}), MalformedAction);
        try {
            parse_tagged("<Response>x</Response>", {"Action", "Response"});
        } catch (const MissingTag& e) {
            CHECK(e.tag() == "Action");
            CHECK(e.kind() == "missing_tag");
        }
    }

    TEST_CASE("format and parse round trip on random maps") {
        std::mt19937 rng(11);
        const std::vector<std::string> words{"a", "b&c", "low mood", "x>y", "3", "\"q\""};
        for (int i = 0; i < 300; ++i) {
            FieldMap m;
            m["Response"] = words[rng() % words.size()] + " " + words[rng() % words.size()];
            m["Final_Decision"] = rng() % 2 ? "None" : "Major depressive disorder";
            CHECK(parse_tagged(format_tagged(m), {"Response", "Final_Decision"}) == m);
        }
    }

    TEST_CASE("complete_parsed retries with the corrective suffix") {
        std::vector<std::string> humans;
        int n = 0;
        CallbackBackend b(
            [&](const ChatRequest& r) {
                humans.push_back(r.human);
                return ++n < 3 ? std::string("I think so") : std::string("<Action>met_criteria</Action>");
            },
            "flaky");
        ChatRequest req;
        req.human = "question";
        auto out = complete_parsed(b, req, {"Action"});
        CHECK(out.calls == 3);
        CHECK(out.fields.at("Action") == "met_criteria");
        REQUIRE(humans.size() == 3);
        CHECK(humans[0] == "question");
        CHECK(humans[1].find(corrective_suffix({"Action"})) != std::string::npos);
    }

    TEST_CASE("complete_parsed gives up after the retry limit") {
        CallbackBackend b([](const ChatRequest&) { return std::string("nothing useful"); }, "bad");
        ChatRequest req;
        req.config.retry_limit = 2;
        try {
            complete_parsed(b, req, {"Action"});
            FAIL("expected ExhaustedRetries");
        } catch (const ExhaustedRetries& e) {
            CHECK(e.last_raw() == "nothing useful");
            CHECK(b.calls() == 3);
        }
    }

    TEST_CASE("complete_parsed re-prompts when the validator rejects") {
        auto b = replies({"<Action>contradiction</Action>", "<Action>met_criteria</Action>"});
        ChatRequest req;
        auto out = complete_parsed(*b, req, {"Action"}, {}, [](const FieldMap& f) {
            if (parse_action(f.at("Action")) == DiagnosticAction::contradiction)
                throw ParseError("disallowed_action", "not offered");
        });
        CHECK(out.calls == 2);
    }

    TEST_CASE("backend errors propagate without retry") {
        CallbackBackend b([](const ChatRequest&) -> std::string { throw BackendTimeout("slow"); }, "slow");
        CHECK_THROWS_AS(complete_parsed(b, ChatRequest{}, {"Action"}), BackendTimeout);
        CHECK(b.calls() == 1);
    }

    TEST_CASE("scripted backend matches filters in order") {
        ScriptedBackend b({{std::string("A"), AgentRole::reasoning, std::nullopt, "ra-A"},
                           {std::nullopt, AgentRole::empathy, std::nullopt, "ea-1"},
                           {std::nullopt, std::nullopt, std::nullopt, "any"}});
        ChatRequest r;
        r.role = AgentRole::empathy;
        CHECK(b.complete(r) == "ea-1");
        r.role = AgentRole::reasoning;
        r.node = "A";
        CHECK(b.complete(r) == "ra-A");
        CHECK(b.complete(r) == "any");
        CHECK_THROWS_AS(b.complete(r), BackendRefusal);
    }

    TEST_CASE("scripted entries load from json") {
        auto doc = nlohmann::json::parse(R"([{"match":"DEPEPS","role":"reasoning","reply":"x"},{"reply":"y"}])");
        auto entries = ScriptedBackend::load_entries(doc);
        REQUIRE(entries.size() == 2);
        CHECK(entries[0].match == std::optional<std::string>("DEPEPS"));
        CHECK(entries[0].role == AgentRole::reasoning);
        CHECK_THROWS_AS(ScriptedBackend::load_entries(nlohmann::json::parse(R"([{"role":"pilot","reply":"z"}])")),
                        ConfigError);
    }

    TEST_CASE("http backend body shape") {
        ChatRequest r;
        r.system = "sys";
        r.human = "hi";
        r.config.temperature = 0.2;
        auto body = HttpBackend::request_body("m", r);
        CHECK(body["model"] == "m");
        CHECK(body["messages"][0]["role"] == "system");
        CHECK(body["messages"][1]["content"] == "hi");
        CHECK(body["temperature"].get<double>() == doctest::Approx(0.2));

        auto ok = nlohmann::json::parse(R"({"choices":[{"message":{"content":"hello"}}]})");
        CHECK(HttpBackend::reply_from_body(ok) == "hello");
        auto filtered =
            nlohmann::json::parse(R"({"choices":[{"finish_reason":"content_filter","message":{"content":"x"}}]})");
        CHECK_THROWS_AS(HttpBackend::reply_from_body(filtered), BackendRefusal);
        CHECK_THROWS_AS(HttpBackend::reply_from_body(nlohmann::json::object()), BackendRefusal);
    }

    TEST_CASE("unreachable http backend raises a backend error") {
        HttpBackendOptions o;
        o.base_url = "http://127.0.0.1:9";
        o.model = "m";
        HttpBackend b(o);
        ChatRequest r;
        r.config.timeout = std::chrono::milliseconds(500);
        CHECK_THROWS_AS(b.complete(r), BackendError);
    }

    TEST_CASE("generation config validation") {
        CHECK(GenerationConfig::doctor().temperature == doctest::Approx(0.6));
        CHECK(GenerationConfig::patient().temperature == doctest::Approx(0.2));
        GenerationConfig g;
        g.temperature = 3.0;
        CHECK_THROWS_AS(g.validate(), ConfigError);
    }

    TEST_CASE("reasoning prompt carries memo, node and response") {
        auto g = testutil::graph("depression");
        DialogueHistory h;
        h.append({Speaker::doctor, "Hello", std::string("MDDROOT")});
        h.append({Speaker::patient, "I feel low"});
        auto p = render_ra_prompt(g->node("DEPEPS"), h, "I feel low");
        CHECK(p.human.find("[DEPEPS]") != std::string::npos);
        CHECK(p.human.find("I feel low") != std::string::npos);
        CHECK(p.human.find("ask_more_detail") != std::string::npos);
        CHECK(p.human.find("detect_contradiction") != std::string::npos);

        ReasoningPromptOptions forced;
        forced.force_decision = true;
        auto f = render_ra_prompt(g->node("DEPEPS"), h, "x", forced);
        CHECK(f.human.find("ask_more_detail") == std::string::npos);
        CHECK(f.human.find("best determination") != std::string::npos);

        ReasoningPromptOptions ablated;
        ablated.actions = ActionSpace::full().without(DiagnosticAction::contradiction);
        CHECK(render_ra_prompt(g->node("DEPEPS"), h, "x", ablated).human.find("detect_contradiction") ==
              std::string::npos);
    }

    TEST_CASE("empathy prompt switches to the closing variant at a leaf") {
        auto g = testutil::graph("depression");
        DialogueHistory h;
        auto q = render_ea_prompt(g->node("DEPEPS"), DiagnosticAction::met_criteria, h, "yes");
        CHECK(q.human.find("[DEPEPS]") != std::string::npos);
        auto c = render_ea_prompt(g->node("MDD"), DiagnosticAction::not_met_criteria, h, "no");
        CHECK(c.human.find("Major depressive disorder") != std::string::npos);
        EmpathyPromptOptions o;
        o.directive = "ask a closed-ended question";
        CHECK(render_ea_prompt(g->node("DEPEPS"), DiagnosticAction::met_criteria, h, "", o)
                  .human.find("closed-ended") != std::string::npos);
    }

    TEST_CASE("baseline prompts list the labels") {
        DialogueHistory h;
        const std::vector<std::string> labels{"Alpha", "Beta"};
        CHECK(render_kfp_prompt(labels, "hi", h).human.find("Alpha") != std::string::npos);
        CHECK(render_tkep_icl_prompt(labels, "hi", h, "[A] crit").human.find("[A] crit") != std::string::npos);
        auto rag = render_tkep_rag_prompt(labels, "hi", h, "A, B", "ctx text");
        CHECK(rag.human.find("ctx text") != std::string::npos);
        CHECK(rag.human.find("A, B") != std::string::npos);
    }
}
