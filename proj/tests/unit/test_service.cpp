#include "common.hpp"

#include "doctest.h"

#include "wisemind/error.hpp"
#include "wisemind/service.hpp"

#include "httplib.h"

#include <fstream>
#include <thread>

using namespace wisemind;
using nlohmann::json;

namespace {

json config_doc(const std::filesystem::path& sessions) {
    return {{"graphs",
             {{"depression", "graphs/depression.json"},
              {"bipolar", "graphs/bipolar.json"},
              {"anxiety", "graphs/anxiety.json"}}},
            {"cases_dir", "fixtures/cases"},
            {"session_dir", sessions.string()},
            {"backends", {{"reasoning", {{"kind", "oracle"}}}, {"empathy", {{"kind", "oracle"}}}}},
            {"safety", {{"enabled", true}, {"lexicon", "risk_lexicon.txt"}}}};
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

AppConfig config(const std::filesystem::path& sessions) {
    return AppConfig::from_json(config_doc(sessions), WISEMIND_DATA_DIR);
}

// Answers every question with the golden stories in order until the session ends.
json finish_golden(Service& svc, const std::string& id) {
    const auto c = testutil::golden();
    std::vector<std::string> answers;
    for (const auto& step : c.path) answers.push_back(c.stories.at(step.node));
    json last;
    for (std::size_t i = 0; i < 12; ++i) {
        auto r = svc.message(id, {{"text", answers[std::min(i, answers.size() - 1)]}});
        REQUIRE(r.status == 200);
        last = r.body;
        if (last["status"] != "active") break;
    }
    return last;
}

}  // namespace

TEST_SUITE("service") {
    TEST_CASE("config rejects inline keys and resolves paths") {
        auto doc = config_doc("s");
        auto c = AppConfig::from_json(doc, WISEMIND_DATA_DIR);
        CHECK(c.graphs.at("depression") == testutil::data("graphs/depression.json"));
        CHECK_NOTHROW(c.validate());

        auto leaky = doc;
        leaky["backends"]["reasoning"]["api_key"] = "sk-123";
        CHECK_THROWS_AS(AppConfig::from_json(leaky, WISEMIND_DATA_DIR), ConfigError);
        auto nested = doc;
        nested["apiKey"] = "x";
        CHECK_THROWS_AS(AppConfig::from_json(nested, WISEMIND_DATA_DIR), ConfigError);

        auto missing = doc;
        missing["graphs"]["depression"] = "graphs/nope.json";
        CHECK_THROWS_AS(AppConfig::from_json(missing, WISEMIND_DATA_DIR).validate(), ConfigError);
    }

    TEST_CASE("shipped example config loads") {
        auto c = AppConfig::load(testutil::data("config.example.json"));
        CHECK(c.patient.kind == "http");
        CHECK(c.graphs.size() == 3);
    }

    TEST_CASE("case lookup refuses path traversal") {
        Runtime rt(config(fresh_dir("wisemind-svc-rt")));
        CHECK(rt.load_case("mdd-golden").label == "Major depressive disorder");
        CHECK_THROWS_AS(rt.load_case("../config.example"), Error);
        CHECK_THROWS_AS(rt.load_case("missing"), Error);
        CHECK_THROWS_AS(rt.graph("flu"), Error);
        CHECK(rt.disorders() == std::vector<std::string>{"anxiety", "bipolar", "depression"});
    }

    TEST_CASE("golden interview through the handlers") {
        const auto dir = fresh_dir("wisemind-svc-golden");
        Service svc(config(dir));
        auto created = svc.create_session({{"disorder", "depression"}, {"case_id", "mdd-golden"}});
        REQUIRE(created.status == 201);
        const auto id = created.body["session_id"].get<std::string>();
        CHECK(created.body["greeting"] == std::string(kDefaultGreeting));

        auto last = finish_golden(svc, id);
        CHECK(last["status"] == "diagnosed");
        CHECK(last["outcome"]["label"] == "Major depressive disorder");

        auto again = svc.message(id, {{"text", "hello?"}});
        CHECK(again.status == 409);
        CHECK(again.body["error"] == "session_terminated");

        auto got = svc.get_session(id);
        REQUIRE(got.status == 200);
        CHECK(got.body["status"] == "diagnosed");
        CHECK(got.body["state"]["current"] == "MDD");
        CHECK(std::filesystem::exists(svc.store().path_for(id)));

        // A fresh service only sees the persisted copy.
        Service later(config(dir));
        auto persisted = later.get_session(id);
        REQUIRE(persisted.status == 200);
        CHECK(persisted.body["transcript"] == got.body["transcript"]);
        CHECK(later.message(id, {{"text", "hi"}}).status == 409);
    }

    TEST_CASE("request errors map to status codes") {
        Service svc(config(fresh_dir("wisemind-svc-errors")));
        CHECK(svc.create_session(json::object()).status == 400);
        CHECK(svc.create_session({{"disorder", "flu"}}).status == 404);
        // oracle reasoning has nothing to answer from without a case
        CHECK(svc.create_session({{"disorder", "depression"}}).status == 400);
        CHECK(svc.create_session({{"disorder", "depression"}, {"case_id", "nope"}}).status == 404);
        CHECK(svc.create_session({{"disorder", "bipolar"}, {"case_id", "mdd-golden"}}).status == 400);
        CHECK(svc.message("sdeadbeef", {{"text", "x"}}).status == 404);
        CHECK(svc.get_session("sdeadbeef").status == 404);

        auto created = svc.create_session({{"disorder", "depression"}, {"case_id", "mdd-golden"}});
        const auto id = created.body["session_id"].get<std::string>();
        CHECK(svc.message(id, {{"txt", "x"}}).status == 400);

        auto stored = svc.store().find(id);
        {
            std::lock_guard hold(stored->busy);
            auto busy = svc.message(id, {{"text", "x"}});
            CHECK(busy.status == 409);
            CHECK(busy.body["error"] == "session_busy");
        }
    }

    TEST_CASE("risk message escalates through the service") {
        Service svc(config(fresh_dir("wisemind-svc-risk")));
        auto id = svc.create_session({{"disorder", "depression"}, {"case_id", "mdd-golden"}})
                      .body["session_id"]
                      .get<std::string>();
        auto r = svc.message(id, {{"text", "Honestly I want to end my life."}});
        REQUIRE(r.status == 200);
        CHECK(r.body["status"] == "escalated");
        CHECK(r.body["escalated"] == true);
        CHECK(svc.get_session(id).body["state"]["escalations"].size() == 1);
    }

    TEST_CASE("questionnaires attach to a session") {
        Service svc(config(fresh_dir("wisemind-svc-q")));
        auto id = svc.create_session({{"disorder", "depression"}, {"case_id", "depression-001"}})
                      .body["session_id"]
                      .get<std::string>();
        auto ok = svc.questionnaire(id, {{"instrument", "precision"}, {"answers", {5, 5, 5, 5, 5, 5, 5}}});
        REQUIRE(ok.status == 200);
        CHECK(ok.body["score"].get<double>() == doctest::Approx(1.0));
        CHECK(svc.questionnaire(id, {{"instrument", "precision"}, {"answers", {5}}}).status == 422);
        CHECK(svc.questionnaire("sdeadbeef", {{"instrument", "precision"}, {"answers", {5}}}).status == 404);
        CHECK(svc.get_session(id).body["questionnaires"].size() == 1);
    }

    TEST_CASE("http routes") {
        Service svc(config(fresh_dir("wisemind-svc-http")));
        httplib::Server server;
        svc.mount(server);
        const int port = server.bind_to_any_port("127.0.0.1");
        std::thread t([&] { server.listen_after_bind(); });
        server.wait_until_ready();
        httplib::Client cli("127.0.0.1", port);

        auto health = cli.Get("/healthz");
        REQUIRE(health);
        CHECK(health->status == 200);
        auto qs = cli.Get("/questionnaires");
        REQUIRE(qs);
        CHECK(json::parse(qs->body).size() == 4);
        auto created = cli.Post("/sessions", R"({"disorder":"anxiety","case_id":"anxiety-001"})", "application/json");
        REQUIRE(created);
        CHECK(created->status == 201);
        auto bad = cli.Post("/sessions", "not json", "application/json");
        REQUIRE(bad);
        CHECK(bad->status == 400);
        auto missing = cli.Get("/sessions/snothere");
        REQUIRE(missing);
        CHECK(missing->status == 404);

        server.stop();
        t.join();
    }
}
