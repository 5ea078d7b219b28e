#include <benchmark/benchmark.h>

#include <random>

#include "clonegraph/detect.hpp"
#include "clonegraph/log.hpp"
#include "oracles.hpp"

namespace {

void BM_AllPairsCount(benchmark::State& state) {
    clonegraph::log::set_level(clonegraph::log::Level::error);
    std::mt19937_64 rng(5);
    const auto v = oracle::clustered_unit_vectors(rng, static_cast<int>(state.range(0)), 64);
    clonegraph::embed::EmbeddingMatrix m;
    for (const auto& id : v.ids) m.node_index.push_back(clonegraph::graph::NodeId::sample(id));
    m.vectors = v.x;
    const auto block = clonegraph::detect::sample_block(m);
    clonegraph::detect::SimilarityQuery q;
    q.tile_size = static_cast<std::size_t>(state.range(1));
    std::size_t pairs = 0;
    for (auto _ : state) pairs = clonegraph::detect::for_each_clone_pair(block, q, [](const auto&, auto) {});
    const double n = static_cast<double>(state.range(0));
    state.counters["pairs"] = static_cast<double>(pairs);
    state.counters["dots/s"] = benchmark::Counter(n * (n - 1) / 2, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_AllPairsCount)->Args({2000, 4096})->Args({10000, 4096})->Args({10000, 256})->Unit(benchmark::kMillisecond);

}  // namespace
