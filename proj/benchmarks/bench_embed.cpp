#include <benchmark/benchmark.h>

#include <random>

#include "clonegraph/embed.hpp"
#include "clonegraph/log.hpp"
#include "oracles.hpp"

namespace {

void BM_EmbedGraph(benchmark::State& state) {
    clonegraph::log::set_level(clonegraph::log::Level::error);
    std::mt19937_64 rng(3);
    const auto g = oracle::random_graph(rng, static_cast<int>(state.range(0)), 55).graph;
    clonegraph::embed::EmbedConfig cfg;
    cfg.dim = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(clonegraph::embed::embed_graph(g, cfg));
    state.counters["nodes"] = static_cast<double>(g.node_count());
}
BENCHMARK(BM_EmbedGraph)->Args({1000, 64})->Args({10000, 64})->Args({10000, 128})->Unit(benchmark::kMillisecond);

}  // namespace
