#include "wisemind/evaluation.hpp"

#include <benchmark/benchmark.h>

#include <spdlog/spdlog.h>

#include <filesystem>

using namespace wisemind;

namespace {

#ifndef WISEMIND_DATA_DIR
#define WISEMIND_DATA_DIR "data"
#endif

const BenchmarkInput& matrix_input() {
    static const BenchmarkInput input = [] {
        spdlog::set_level(spdlog::level::err);
        BenchmarkInput in;
        for (const char* d : {"depression", "bipolar", "anxiety"}) {
            auto g = std::make_shared<const KnowledgeGraph>(
                load_graph_file(std::filesystem::path(WISEMIND_DATA_DIR) / "graphs" / (std::string(d) + ".json")));
            auto story = make_template_story_backend(g);
            auto cs = generate_cases({g}, 40, *story);
            in.cases.insert(in.cases.end(), cs.begin(), cs.end());
            in.graphs[d] = g;
        }
        in.systems = {oracle_wisemind(), oracle_single_agent(),
                      oracle_wisemind("no-contradict", ActionSpace::full().without(DiagnosticAction::contradiction))};
        return in;
    }();
    return input;
}

void BM_MatrixParallel(benchmark::State& state) {
    const auto& in = matrix_input();
    for (auto _ : state) benchmark::DoNotOptimize(run_matrix(in));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(in.cases.size() * in.systems.size()));
}

void BM_MatrixSerial(benchmark::State& state) {
    const auto& in = matrix_input();
    for (auto _ : state) benchmark::DoNotOptimize(run_matrix_serial(in));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(in.cases.size() * in.systems.size()));
}

void BM_RandomGuessParallel(benchmark::State& state) {
    const auto& g = *matrix_input().graphs.at("depression");
    for (auto _ : state) benchmark::DoNotOptimize(random_guess_accuracy(g, static_cast<std::size_t>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RandomGuessSerial(benchmark::State& state) {
    const auto& g = *matrix_input().graphs.at("depression");
    for (auto _ : state)
        benchmark::DoNotOptimize(random_guess_accuracy_serial(g, static_cast<std::size_t>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_MatrixParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MatrixSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RandomGuessParallel)->Arg(10'000)->Arg(1'000'000)->UseRealTime();
BENCHMARK(BM_RandomGuessSerial)->Arg(10'000)->Arg(1'000'000)->UseRealTime();

BENCHMARK_MAIN();
