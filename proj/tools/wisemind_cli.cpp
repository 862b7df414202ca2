#include "wisemind/baselines.hpp"
#include "wisemind/error.hpp"
#include "wisemind/evaluation.hpp"
#include "wisemind/patient.hpp"
#include "wisemind/service.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace wisemind;
using nlohmann::json;

namespace {

struct GraphSource {
    std::string config;
    std::string graph_dir = "data/graphs";
};

std::map<std::string, GraphPtr> load_graphs(const GraphSource& src) {
    std::map<std::string, GraphPtr> out;
    if (!src.config.empty()) {
        Runtime rt(AppConfig::load(src.config));
        for (const auto& d : rt.disorders()) out[d] = rt.graph(d);
        return out;
    }
    if (!fs::is_directory(src.graph_dir)) throw ConfigError("graph directory not found: " + src.graph_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(src.graph_dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto g = std::make_shared<const KnowledgeGraph>(load_graph_file(f));
        out[g->disorder()] = g;
    }
    if (out.empty()) throw ConfigError("no graph files in " + src.graph_dir);
    return out;
}

void write_text(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-") {
        std::cout << contents;
        return;
    }
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot write " + path);
    out << contents;
}

std::vector<PatientCase> load_cases_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<PatientCase> out;
    for (const auto& f : files) out.push_back(load_case_file(f));
    return out;
}

std::vector<PatientCase> template_cases(const std::map<std::string, GraphPtr>& graphs, std::size_t per_disorder) {
    std::vector<PatientCase> out;
    for (const auto& [d, g] : graphs) {
        auto story = make_template_story_backend(g);
        auto cs = generate_cases({g}, per_disorder, *story);
        out.insert(out.end(), cs.begin(), cs.end());
    }
    return out;
}

// Systems that can run without a config: oracle rows.
std::optional<SystemConfig> oracle_system(const std::string& name) {
    if (name == "oracle-wisemind") return oracle_wisemind(name);
    if (name == "oracle-wisemind-no-contradict")
        return oracle_wisemind(name, ActionSpace::full().without(DiagnosticAction::contradiction));
    if (name == "oracle-wisemind-no-nmi")
        return oracle_wisemind(name, ActionSpace::full().without(DiagnosticAction::needs_more_information));
    if (name == "oracle-skep-single") return oracle_single_agent(name);
    return std::nullopt;
}

SystemConfig live_system(const std::string& name, const std::shared_ptr<Runtime>& rt) {
    SystemConfig s;
    s.name = name;
    auto ra = [rt](const PatientCase& c, const GraphPtr& g) {
        return rt->make_backend(rt->config().ra, AgentRole::reasoning, g, &c);
    };
    auto ea = [rt](const PatientCase& c, const GraphPtr& g) {
        return rt->make_backend(rt->config().ea, AgentRole::empathy, g, &c);
    };
    s.interview = rt->interview_config();
    s.interview.safety.enabled = false;
    s.baseline.max_turns = rt->config().max_turns;
    s.baseline.generation = rt->config().doctor_generation;
    if (name == "wisemind") {
        s.kind = SystemKind::wisemind;
        s.primary = ra;
        s.empathy = ea;
    } else if (name == "kfp" || name == "tkep-icl" || name == "tkep-rag" || name == "skep-single") {
        s.kind = name == "kfp"        ? SystemKind::kfp
                 : name == "tkep-icl" ? SystemKind::tkep_icl
                 : name == "tkep-rag" ? SystemKind::tkep_rag
                                      : SystemKind::skep_single;
        s.primary = [rt](const PatientCase& c, const GraphPtr& g) {
            return rt->make_backend(rt->config().ra, AgentRole::baseline, g, &c);
        };
    } else {
        throw ConfigError("unknown system '" + name + "'");
    }
    return s;
}

int run_validate_graph(const std::vector<std::string>& files, const std::string& report) {
    json out = json::array();
    for (const auto& f : files) {
        auto g = load_graph_file(f);
        const auto leaves = g.leaves().size();
        std::cout << f << ": " << g.disorder() << ", " << g.size() << " nodes, " << leaves << " leaves\n";
        out.push_back({{"file", f}, {"disorder", g.disorder()}, {"nodes", g.size()}, {"leaves", leaves}});
    }
    if (!report.empty()) write_text(report, out.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph guided diagnostic interview toolkit"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    // validate-graph
    auto* vg = app.add_subcommand("validate-graph", "Check graph files and print leaf counts");
    std::vector<std::string> vg_files;
    std::string vg_report;
    vg->add_option("files", vg_files, "Graph JSON files")->required()->check(CLI::ExistingFile);
    vg->add_option("--report", vg_report, "Write a JSON validation report");

    // gen-cases
    auto* gc = app.add_subcommand("gen-cases", "Generate synthetic patient case files");
    GraphSource gc_src;
    std::size_t gc_total = 20;
    std::string gc_out = "cases", gc_backend = "template", gc_disorder;
    gc->add_option("--config", gc_src.config, "Config file");
    gc->add_option("--graph-dir", gc_src.graph_dir, "Directory of graph files when no config is given");
    gc->add_option("--total", gc_total, "Number of cases, round-robin over disorders and leaves");
    gc->add_option("--disorder", gc_disorder, "Restrict to one disorder");
    gc->add_option("--out", gc_out, "Output directory");
    gc->add_option("--story-backend", gc_backend, "template (offline) or config (patient backend from config)")
        ->check(CLI::IsMember({"template", "config"}));

    // interview
    auto* iv = app.add_subcommand("interview", "Run one interview and write its transcript");
    std::string iv_config, iv_case, iv_case_file, iv_patient = "scripted", iv_out, iv_system = "wisemind";
    iv->add_option("--config", iv_config, "Config file")->required()->check(CLI::ExistingFile);
    iv->add_option("--case", iv_case, "Case id under cases_dir");
    iv->add_option("--case-file", iv_case_file, "Case file path")->check(CLI::ExistingFile);
    iv->add_option("--patient", iv_patient, "scripted or llm")->check(CLI::IsMember({"scripted", "llm"}));
    iv->add_option("--system", iv_system, "wisemind, kfp, tkep-icl, tkep-rag or skep-single");
    iv->add_option("--out", iv_out, "Transcript path (stdout when omitted)");

    // bench
    auto* bn = app.add_subcommand("bench", "Run the system x case matrix and report metrics");
    GraphSource bn_src;
    std::vector<std::string> bn_systems{"oracle-wisemind"};
    std::vector<std::string> bn_disorders;
    std::string bn_cases_dir, bn_out, bn_patient = "scripted";
    std::size_t bn_per = 20;
    bool bn_table = false, bn_serial = false;
    bn->add_option("--config", bn_src.config, "Config file (needed for live systems)");
    bn->add_option("--graph-dir", bn_src.graph_dir, "Directory of graph files when no config is given");
    bn->add_option("--systems", bn_systems, "Systems in report order")->delimiter(',');
    bn->add_option("--disorder", bn_disorders, "Restrict to these disorders")->delimiter(',');
    bn->add_option("--cases-dir", bn_cases_dir, "Case files; template cases are generated when omitted");
    bn->add_option("--per-disorder", bn_per, "Generated cases per disorder");
    bn->add_option("--patient", bn_patient, "scripted or llm")->check(CLI::IsMember({"scripted", "llm"}));
    bn->add_option("--out", bn_out, "CSV path (stdout when omitted)");
    bn->add_flag("--table", bn_table, "Also print an aligned table to stderr");
    bn->add_flag("--serial", bn_serial, "Run without OpenMP");

    // adversarial
    auto* ad = app.add_subcommand("adversarial", "Run the adversarial robustness suite");
    GraphSource ad_src;
    std::string ad_lexicon = "data/risk_lexicon.txt", ad_out, ad_detail;
    std::size_t ad_per = 5;
    ad->add_option("--config", ad_src.config, "Config file");
    ad->add_option("--graph-dir", ad_src.graph_dir, "Directory of graph files when no config is given");
    ad->add_option("--lexicon", ad_lexicon, "Risk lexicon")->check(CLI::ExistingFile);
    ad->add_option("--per-category", ad_per, "Cases per category");
    ad->add_option("--out", ad_out, "CSV path (stdout when omitted)");
    ad->add_option("--details", ad_detail, "JSON-lines file with one outcome per case");

    // serve
    auto* sv = app.add_subcommand("serve", "Serve the HTTP interview API");
    std::string sv_config, sv_host;
    int sv_port = 0;
    sv->add_option("--config", sv_config, "Config file")->required()->check(CLI::ExistingFile);
    sv->add_option("--host", sv_host, "Override the bind address");
    sv->add_option("--port", sv_port, "Override the port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_default_logger(spdlog::default_logger()->clone("wisemind"));

    try {
        if (*vg) return run_validate_graph(vg_files, vg_report);

        if (*gc) {
            auto graphs = load_graphs(gc_src);
            std::vector<GraphPtr> gs;
            for (const auto& [d, g] : graphs)
                if (gc_disorder.empty() || d == gc_disorder) gs.push_back(g);
            if (gs.empty()) throw ConfigError("no graph for disorder '" + gc_disorder + "'");
            std::vector<PatientCase> cases;
            if (gc_backend == "template") {
                for (std::size_t i = 0; i < gs.size(); ++i) {
                    const auto share = gc_total / gs.size() + (i < gc_total % gs.size() ? 1 : 0);
                    auto story = make_template_story_backend(gs[i]);
                    auto cs = generate_cases({gs[i]}, share, *story);
                    cases.insert(cases.end(), cs.begin(), cs.end());
                }
            } else {
                if (gc_src.config.empty()) throw ConfigError("--story-backend config needs --config");
                Runtime rt(AppConfig::load(gc_src.config));
                auto backend = rt.make_backend(rt.config().patient, AgentRole::story, gs.front(), nullptr);
                CaseGenConfig cfg;
                cfg.generation = rt.config().patient_generation;
                cases = generate_cases(gs, gc_total, *backend, cfg);
            }
            fs::create_directories(gc_out);
            for (const auto& c : cases) save_case_file(c, fs::path(gc_out) / (c.case_id + ".json"));
            std::cout << cases.size() << " cases written to " << gc_out << "\n";
            return 0;
        }

        if (*iv) {
            auto rt = std::make_shared<Runtime>(AppConfig::load(iv_config));
            if (iv_case.empty() == iv_case_file.empty()) throw ConfigError("give exactly one of --case or --case-file");
            const auto c = iv_case.empty() ? load_case_file(iv_case_file) : rt->load_case(iv_case);
            auto g = rt->graph(c.disorder);
            validate_case(*g, c);
            std::unique_ptr<PatientResponder> patient;
            if (iv_patient == "scripted")
                patient = std::make_unique<ScriptedPatient>(c);
            else
                patient = std::make_unique<GenerativePatient>(
                    c, rt->make_backend(rt->config().patient, AgentRole::patient, g, &c), kDefaultHistoryWindow,
                    rt->config().patient_generation);
            BenchmarkInput input;
            input.systems.push_back(live_system(iv_system, rt));
            input.systems.front().interview.safety.enabled = rt->config().safety_enabled;
            input.graphs[c.disorder] = g;
            input.cases = {c};
            PatientResponder* raw = patient.release();
            input.patient = [raw](const PatientCase&) { return std::unique_ptr<PatientResponder>(raw); };
            auto rec = run_case(input, 0, c);
            if (!rec.error.empty()) throw Error("interview_failed", rec.error);
            DiagnosisOutcome outcome{rec.log.predicted_label, rec.log.status, {}, interview_turns(rec.history)};
            if (iv_system == "wisemind") outcome = outcome_of(rec.state);
            auto j = transcript_json(c.case_id, c.disorder, rec.history, outcome,
                                     iv_system == "wisemind" ? std::string{} : iv_system);
            write_text(iv_out, j.dump(2) + "\n");
            return 0;
        }

        if (*bn) {
            auto graphs = load_graphs(bn_src);
            if (!bn_disorders.empty()) {
                std::map<std::string, GraphPtr> kept;
                for (const auto& d : bn_disorders) {
                    auto it = graphs.find(d);
                    if (it == graphs.end()) throw ConfigError("no graph for disorder '" + d + "'");
                    kept.insert(*it);
                }
                graphs = std::move(kept);
            }
            BenchmarkInput input;
            input.graphs = graphs;
            if (!bn_cases_dir.empty()) {
                for (auto& c : load_cases_dir(bn_cases_dir))
                    if (graphs.count(c.disorder)) input.cases.push_back(std::move(c));
            } else {
                input.cases = template_cases(graphs, bn_per);
            }
            std::shared_ptr<Runtime> rt;
            if (!bn_src.config.empty()) rt = std::make_shared<Runtime>(AppConfig::load(bn_src.config));
            for (const auto& name : bn_systems) {
                if (auto s = oracle_system(name)) {
                    input.systems.push_back(std::move(*s));
                } else {
                    if (!rt) throw ConfigError("system '" + name + "' needs --config");
                    input.systems.push_back(live_system(name, rt));
                }
            }
            if (bn_patient == "llm") {
                if (!rt) throw ConfigError("--patient llm needs --config");
                input.patient = [rt, &graphs](const PatientCase& c) -> std::unique_ptr<PatientResponder> {
                    auto b = rt->make_backend(rt->config().patient, AgentRole::patient, graphs.at(c.disorder), &c);
                    return std::make_unique<GenerativePatient>(c, b, kDefaultHistoryWindow,
                                                               rt->config().patient_generation);
                };
            }
            auto records = bn_serial ? run_matrix_serial(input) : run_matrix(input);
            for (const auto& r : records)
                if (!r.error.empty()) spdlog::warn("{}: {}", r.log.session_id, r.error);
            auto report = aggregate(input, records);
            write_text(bn_out, report_csv(report));
            if (bn_table) std::cerr << report_table(report);
            return 0;
        }

        if (*ad) {
            auto graphs = load_graphs(ad_src);
            auto lexicon = std::make_shared<const RiskLexicon>(RiskLexicon::load(ad_lexicon));
            auto base = template_cases(graphs, 20);
            auto suite = build_adversarial_suite(base, ad_per);
            auto report = run_adversarial_suite(suite, graphs, lexicon);
            write_text(ad_out, adversarial_csv(report));
            if (!ad_detail.empty()) {
                std::string lines;
                for (const auto& o : report.outcomes) {
                    json j{{"case_id", o.adv.patient.case_id},
                           {"category", to_string(o.adv.category)},
                           {"resolved", o.resolved},
                           {"escalated", o.escalated},
                           {"directive_hit", o.directive_hit},
                           {"outcome", to_json(o.outcome)}};
                    if (!o.error.empty()) j["error"] = o.error;
                    lines += j.dump() + "\n";
                }
                write_text(ad_detail, lines);
            }
            return 0;
        }

        if (*sv) {
            auto cfg = AppConfig::load(sv_config);
            if (!sv_host.empty()) cfg.host = sv_host;
            if (sv_port) cfg.port = sv_port;
            if (spdlog::get_level() > spdlog::level::info) spdlog::set_level(spdlog::level::info);
            Service service(std::move(cfg));
            return service.listen() ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
