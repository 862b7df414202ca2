// One line per acceptance criterion; exit status 1 when any line fails.
#include "wisemind/error.hpp"
#include "wisemind/evaluation.hpp"
#include "wisemind/oracle.hpp"
#include "wisemind/service.hpp"
#include "wisemind/tagged.hpp"

#include "httplib.h"
#include "json.hpp"

#include <spdlog/spdlog.h>

#include <unistd.h>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

using namespace wisemind;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kClosureSeconds = 5.0;
constexpr double kAdversarialSeconds = 5.0;
constexpr std::size_t kGuessTrials = 10'000;
constexpr double kDepressionGuess = 0.040, kDepressionTol = 0.005;
constexpr double kBipolarGuess = 0.0625, kBipolarTol = 0.006;
constexpr std::size_t kMinCasesPerDisorder = 20;
constexpr std::size_t kMetricLogs = 100;
constexpr std::size_t kParserCases = 1000;
constexpr std::size_t kParityCases = 10;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

std::map<std::string, GraphPtr> load_graphs() {
    std::map<std::string, GraphPtr> out;
    for (const char* d : {"depression", "bipolar", "anxiety"})
        out[d] = std::make_shared<const KnowledgeGraph>(
            load_graph_file(fs::path(WISEMIND_DATA_DIR) / "graphs" / (std::string(d) + ".json")));
    return out;
}

std::vector<PatientCase> template_cases(const std::map<std::string, GraphPtr>& graphs) {
    std::vector<PatientCase> out;
    for (const auto& [d, g] : graphs) {
        auto story = make_template_story_backend(g);
        const auto n = std::max(kMinCasesPerDisorder, g->leaves().size());
        auto cs = generate_cases({g}, n, *story);
        out.insert(out.end(), cs.begin(), cs.end());
    }
    return out;
}

void oracle_closure(const std::map<std::string, GraphPtr>& graphs) {
    const auto t0 = Clock::now();
    BenchmarkInput in;
    in.graphs = graphs;
    in.cases = template_cases(graphs);
    in.systems = {oracle_wisemind()};
    auto report_rows = aggregate(in, run_matrix(in));
    const double secs = seconds_since(t0);

    bool ok = secs < kClosureSeconds;
    std::ostringstream detail;
    std::map<std::string, std::size_t> per;
    for (const auto& c : in.cases) ++per[c.disorder];
    for (const auto& [d, n] : per) ok = ok && n >= kMinCasesPerDisorder;
    for (const auto& row : report_rows.rows) {
        ok = ok && row.ddx_acc == 1.0 && row.cn_recall == 1.0;
        if (row.disorder != "average")
            detail << row.disorder << " n=" << row.n_cases << " ddx=" << fmt(row.ddx_acc, 3)
                   << " cnr=" << fmt(row.cn_recall, 3) << "; ";
    }
    detail << "time " << fmt(secs, 2) << "s (< " << kClosureSeconds << "s)";
    report(ok, "oracle closure", detail.str());
}

void random_guess(const std::map<std::string, GraphPtr>& graphs) {
    const auto& dep = *graphs.at("depression");
    const auto& bip = *graphs.at("bipolar");
    const double a = random_guess_accuracy(dep, kGuessTrials);
    const double b = random_guess_accuracy(bip, kGuessTrials);
    const bool ok = dep.leaves().size() == 25 && bip.leaves().size() == 16 &&
                    std::abs(a - kDepressionGuess) <= kDepressionTol && std::abs(b - kBipolarGuess) <= kBipolarTol;
    report(ok, "random guess baseline",
           "depression " + fmt(a) + " (" + std::to_string(dep.leaves().size()) + " leaves, target " +
               fmt(kDepressionGuess, 3) + " +/- " + fmt(kDepressionTol, 3) + "); bipolar " + fmt(b) + " (" +
               std::to_string(bip.leaves().size()) + " leaves, target " + fmt(kBipolarGuess) + " +/- " +
               fmt(kBipolarTol, 3) + ")");
}

void golden_path(const std::map<std::string, GraphPtr>& graphs) {
    const auto g = graphs.at("depression");
    const auto c = load_case_file(fs::path(WISEMIND_DATA_DIR) / "fixtures" / "cases" / "mdd-golden.json");
    ScriptedPatient patient(c);
    auto result = run_interview(g, oracle::reasoning(c), oracle::empathy(g), patient, {}, "golden");

    std::vector<NodeId> nodes;
    for (const auto& s : result.state.path) nodes.push_back(s.node);
    std::vector<bool> flags;
    for (const auto& a : result.state.assessed) flags.push_back(a.action == DiagnosticAction::met_criteria);

    const std::vector<NodeId> want_nodes{"MDDROOT", "DEPEPS", "DEPEPS_HALL", "DEPEPS_HALL_DUR", "MDD"};
    const std::vector<bool> want_flags{true, true, false, false};
    const auto generated = case_path_to(*g, "MDD");
    std::vector<bool> gen_flags;
    for (const auto& s : generated) gen_flags.push_back(s.met);

    std::string walk;
    for (const auto& n : nodes) walk += (walk.empty() ? "" : ">") + n;
    const bool ok = nodes == want_nodes && flags == want_flags && gen_flags == want_flags &&
                    result.outcome.label == std::optional<std::string>("Major depressive disorder");
    report(ok, "golden path", walk + " flags " + (flags == want_flags ? "T,T,F,F" : "mismatch") + " label '" +
                                  result.outcome.label.value_or("<none>") + "'");
}

// Brute force: critical nodes re-derived from the graph walk to the labelled leaf.
double brute_cn(const InteractionLog& log, const PatientCase& c, const KnowledgeGraph& g) {
    const auto path = g.path_to(*g.leaf_for_label(c.label));
    std::vector<NodeId> critical;
    for (const auto& s : path)
        if (!g.node(s.node).is_leaf()) critical.push_back(s.node);
    int hit = 0;
    for (const auto& n : critical)
        for (const auto& a : log.assessed_nodes)
            if (a == n) {
                ++hit;
                break;
            }
    return static_cast<double>(hit) / static_cast<double>(critical.size());
}

void metric_oracle(const std::map<std::string, GraphPtr>& graphs) {
    auto cases = template_cases(graphs);
    auto map = index_cases(cases);
    std::mt19937_64 rng(7);
    std::vector<InteractionLog> logs;
    for (std::size_t i = 0; i < kMetricLogs; ++i) {
        const auto& c = cases[rng() % cases.size()];
        const auto& g = *graphs.at(c.disorder);
        InteractionLog log;
        log.case_id = c.case_id;
        log.system = "random";
        for (const auto& [id, n] : g.nodes())
            if (!n.is_leaf() && rng() % 3 == 0) log.assessed_nodes.insert(id);
        for (const auto& s : c.path)
            if (rng() % 2 == 0) log.assessed_nodes.insert(s.node);
        const auto labels = g.leaf_labels();
        const int roll = static_cast<int>(rng() % 4);
        log.status = roll == 3 ? SessionStatus::inconclusive : SessionStatus::diagnosed;
        if (log.status == SessionStatus::diagnosed)
            log.predicted_label = roll == 0 ? labels[rng() % labels.size()] : c.label;
        logs.push_back(std::move(log));
    }

    double sum = 0.0;
    int correct = 0;
    for (const auto& log : logs) {
        const PatientCase* c = nullptr;
        for (const auto& k : cases)
            if (k.case_id == log.case_id) c = &k;
        sum += brute_cn(log, *c, *graphs.at(c->disorder));
        if (log.status == SessionStatus::diagnosed && log.predicted_label && *log.predicted_label == c->label) ++correct;
    }
    const double want_cn = sum / static_cast<double>(logs.size());
    const double want_ddx = static_cast<double>(correct) / static_cast<double>(logs.size());

    // Per-log comparison as well as the aggregates.
    bool per_log = true;
    for (const auto& log : logs) {
        const auto& c = map.at(log.case_id);
        per_log = per_log && cn_recall(log, c) == brute_cn(log, c, *graphs.at(c.disorder));
    }
    const double got_cn = cn_recall(logs, map);
    const double got_ddx = ddx_accuracy(logs, map);
    report(per_log && got_cn == want_cn && got_ddx == want_ddx, "metric oracle equivalence",
           std::to_string(logs.size()) + " logs; cn_recall " + fmt(got_cn, 6) + " vs " + fmt(want_cn, 6) +
               ", ddx " + fmt(got_ddx, 6) + " vs " + fmt(want_ddx, 6));
}

void adversarial(const std::map<std::string, GraphPtr>& graphs) {
    const auto t0 = Clock::now();
    auto lexicon =
        std::make_shared<const RiskLexicon>(RiskLexicon::load(fs::path(WISEMIND_DATA_DIR) / "risk_lexicon.txt"));
    auto suite = build_adversarial_suite(template_cases(graphs), 5);
    auto rep = run_adversarial_suite(suite, graphs, lexicon);
    const double secs = seconds_since(t0);

    auto row = [&](AdversarialCategory c) {
        for (const auto& r : rep.rows)
            if (r.category == c) return r;
        return AdversarialRow{c};
    };
    const auto risk = row(AdversarialCategory::risk);
    const auto contra = row(AdversarialCategory::contradiction);
    const auto under = row(AdversarialCategory::under_talking);
    const auto over = row(AdversarialCategory::over_talking);
    const bool ok = rep.rows.size() == 6 && risk.cases == 5 && risk.escalated == 5 && contra.cases == 5 &&
                    contra.resolved >= 4 && under.cases == 5 && under.directive_hits == 5 && over.cases == 5 &&
                    over.directive_hits == 5 && secs < kAdversarialSeconds;
    std::ostringstream d;
    d << "risk escalated " << risk.escalated << "/" << risk.cases << ", contradiction resolved " << contra.resolved
      << "/" << contra.cases << ", under-talking closed-ended " << under.directive_hits << "/" << under.cases
      << ", over-talking redirect " << over.directive_hits << "/" << over.cases << "; time " << fmt(secs, 2) << "s";
    report(ok, "adversarial table shape", d.str());
    std::cout << adversarial_csv(rep);
}

void ablation(const std::map<std::string, GraphPtr>& graphs) {
    auto suite = build_adversarial_suite(template_cases(graphs), 20);
    BenchmarkInput in;
    in.graphs = graphs;
    for (const auto& a : suite)
        if (a.category == AdversarialCategory::contradiction) in.cases.push_back(a.patient);
    in.systems = {oracle_wisemind("full"),
                  oracle_wisemind("no-contradict", ActionSpace::full().without(DiagnosticAction::contradiction))};
    auto records = run_matrix(in);
    auto map = index_cases(in.cases);
    std::vector<InteractionLog> full, ablated;
    for (const auto& r : records) (r.system_index == 0 ? full : ablated).push_back(r.log);
    const double a = ddx_accuracy(full, map), b = ddx_accuracy(ablated, map);
    report(a > b, "ablation direction",
           std::to_string(in.cases.size()) + " contradiction cases; full " + fmt(a, 3) + " > w/o-contradict " +
               fmt(b, 3));
}

std::string random_value(std::mt19937_64& rng) {
    static const std::vector<std::string> words{"the",   "patient", "reports", "low",  "mood",   "for",  "weeks",
                                                "sleep", "is",      "poor",    "&",    "'quote'", "ok.",  "no",
                                                "yes",   "MDD",     "3",       "x>y",  "a=b",    "(see)", "e/g"};
    std::string out;
    const auto n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += rng() % 5 == 0 ? "\n" : " ";
        out += words[rng() % words.size()];
    }
    return out;
}

void parser_property() {
    std::mt19937_64 rng(20240917);
    const std::vector<std::string> actions{"met_criteria", "not_met_criteria", "needs_more_information",
                                           "contradiction", "ask_more_detail", "detect_contradiction",
                                           "more_details"};
    const std::vector<std::pair<std::string, DiagnosticAction>> aliases{
        {"ask_more_detail", DiagnosticAction::needs_more_information},
        {"more_details", DiagnosticAction::needs_more_information},
        {"detect_contradiction", DiagnosticAction::contradiction},
        {"Met_Criteria", DiagnosticAction::met_criteria},
        {"NOT_MET_CRITERIA", DiagnosticAction::not_met_criteria},
        {"Needs_More_Information", DiagnosticAction::needs_more_information},
        {"Contradiction", DiagnosticAction::contradiction}};

    std::size_t roundtrip = 0, typed = 0, alias_ok = 0, total = 0;
    std::string first_failure;
    for (std::size_t i = 0; i < kParserCases; ++i) {
        ++total;
        FieldMap fields;
        fields["Action"] = actions[rng() % actions.size()];
        fields["Response"] = random_value(rng);
        if (rng() % 2) fields["Reason_for_Action"] = random_value(rng);
        std::string text = format_tagged(fields);
        if (rng() % 2) text = "Sure, here is my answer.\n" + text + "\nThanks.";
        std::vector<std::string> optional{"Reason_for_Action"};
        try {
            auto parsed = parse_tagged(text, {"Action", "Response"}, optional);
            if (parsed == fields)
                ++roundtrip;
            else if (first_failure.empty())
                first_failure = "round-trip mismatch on " + text;
        } catch (const std::exception& e) {
            if (first_failure.empty()) first_failure = std::string("round-trip threw ") + e.what();
        }

        // Malformed: drop a required tag, corrupt the action, or truncate a tag name.
        std::string bad;
        const int mode = static_cast<int>(rng() % 3);
        if (mode == 0) {
            FieldMap f = fields;
            f.erase("Response");
            bad = format_tagged(f);
        } else if (mode == 1) {
            FieldMap f = fields;
            f["Action"] = "maybe_" + std::to_string(rng() % 1000);
            bad = format_tagged(f);
        } else {
            bad = random_value(rng);
        }
        try {
            parse_tagged(bad, {"Action", "Response"}, optional);
            if (first_failure.empty()) first_failure = "malformed input parsed: " + bad;
        } catch (const MissingTag&) {
            ++typed;
        } catch (const MalformedAction&) {
            ++typed;
        } catch (const std::exception& e) {
            if (first_failure.empty()) first_failure = std::string("untyped error ") + e.what();
        }

        const auto& [alias, want] = aliases[i % aliases.size()];
        try {
            auto f = parse_tagged("<Action>" + alias + "</Action>", {"Action"});
            if (parse_action(f.at("Action")) == want) ++alias_ok;
        } catch (const std::exception&) {
        }
    }
    report(roundtrip == total && typed == total && alias_ok == total && first_failure.empty(), "parser robustness",
           std::to_string(total) + " cases; round-trip " + std::to_string(roundtrip) + ", typed errors " +
               std::to_string(typed) + ", aliases " + std::to_string(alias_ok) +
               (first_failure.empty() ? "" : "; first failure: " + first_failure));
}

void baseline_equivalence(const std::map<std::string, GraphPtr>& graphs) {
    BenchmarkInput in;
    in.graphs = graphs;
    in.cases = template_cases(graphs);
    for (const auto& a : build_adversarial_suite(in.cases, 5))
        if (a.category == AdversarialCategory::contradiction || a.category == AdversarialCategory::under_talking)
            in.cases.push_back(a.patient);
    in.systems = {oracle_wisemind(), oracle_single_agent()};
    auto records = run_matrix(in);
    const auto n = in.cases.size();
    std::size_t same = 0;
    std::string first;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = records[i];
        const auto& b = records[n + i];
        if (a.node_sequence == b.node_sequence && a.error.empty() && b.error.empty())
            ++same;
        else if (first.empty())
            first = in.cases[i].case_id;
    }
    report(same == n, "baseline equivalence",
           std::to_string(same) + "/" + std::to_string(n) + " cases with identical node sequences" +
               (first.empty() ? "" : "; first mismatch " + first));
}

struct ServerGuard {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    ~ServerGuard() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

void service_parity(const std::map<std::string, GraphPtr>& graphs) {
    const auto tmp = fs::temp_directory_path() / ("wisemind-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::create_directories(tmp / "sessions");

    AppConfig cfg;
    for (const char* d : {"depression", "bipolar", "anxiety"})
        cfg.graphs[d] = fs::path(WISEMIND_DATA_DIR) / "graphs" / (std::string(d) + ".json");
    cfg.cases_dir = fs::path(WISEMIND_DATA_DIR) / "fixtures" / "cases";
    cfg.session_dir = tmp / "sessions";
    cfg.lexicon = fs::path(WISEMIND_DATA_DIR) / "risk_lexicon.txt";
    cfg.alert_log = tmp / "alerts.jsonl";
    Service service(cfg);

    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(cfg.cases_dir)) ids.push_back(e.path().stem().string());
    std::sort(ids.begin(), ids.end());
    if (ids.size() > kParityCases) ids.resize(kParityCases);

    ServerGuard guard;
    service.mount(guard.server);
    guard.port = guard.server.bind_to_any_port("127.0.0.1");
    guard.thread = std::thread([&] { guard.server.listen_after_bind(); });
    httplib::Client cli("127.0.0.1", guard.port);
    cli.set_read_timeout(10, 0);

    std::size_t equal = 0;
    bool conflict_ok = true;
    std::string first;
    for (const auto& id : ids) {
        const auto c = service.runtime().load_case(id);
        const auto g = graphs.at(c.disorder);

        ScriptedPatient lib_patient(c);
        auto lib = run_interview(g, oracle::reasoning(c), oracle::empathy(g), lib_patient,
                                 service.runtime().interview_config(), id);

        auto created = cli.Post("/sessions", json{{"disorder", c.disorder}, {"case_id", id}}.dump(),
                                "application/json");
        if (!created || created->status != 201) {
            if (first.empty()) first = id + ": create failed";
            continue;
        }
        const auto sid = json::parse(created->body).at("session_id").get<std::string>();
        ScriptedPatient http_patient(c);
        std::string status = "active";
        for (int guard_turns = 0; status == "active" && guard_turns < 200; ++guard_turns) {
            auto got = cli.Get("/sessions/" + sid);
            const auto transcript = json::parse(got->body);
            const auto history = history_from_json(transcript);
            const auto& last = history.turns().back();
            const auto text = http_patient.respond(last.text, history);
            auto res = cli.Post("/sessions/" + sid + "/message", json{{"text", text}}.dump(), "application/json");
            if (!res || res->status != 200) {
                status = "error";
                break;
            }
            status = json::parse(res->body).at("status").get<std::string>();
        }
        const auto final_json = json::parse(cli.Get("/sessions/" + sid)->body);
        const auto http_outcome = outcome_from_json(final_json.at("outcome"));
        if (http_outcome == lib.outcome && history_from_json(final_json) == lib.state.history)
            ++equal;
        else if (first.empty())
            first = id;

        auto again = cli.Post("/sessions/" + sid + "/message", json{{"text", "hello?"}}.dump(), "application/json");
        conflict_ok = conflict_ok && again && again->status == 409;
    }
    fs::remove_all(tmp);
    report(ids.size() == kParityCases && equal == ids.size() && conflict_ok, "service parity",
           std::to_string(equal) + "/" + std::to_string(ids.size()) +
               " fixture cases with identical outcome and transcript; terminated-session message " +
               (conflict_ok ? "409" : "not 409") + (first.empty() ? "" : "; first mismatch " + first));
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::off);
    try {
        const auto graphs = load_graphs();
        oracle_closure(graphs);
        random_guess(graphs);
        golden_path(graphs);
        metric_oracle(graphs);
        adversarial(graphs);
        ablation(graphs);
        parser_property();
        baseline_equivalence(graphs);
        service_parity(graphs);
    } catch (const std::exception& e) {
        report(false, "acceptance harness", e.what());
    }
    std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed" : "acceptance: all passed")
              << std::endl;
    return failures ? 1 : 0;
}
