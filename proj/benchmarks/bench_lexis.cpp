#include <benchmark/benchmark.h>

#include <random>

#include "clonegraph/lexis.hpp"
#include "java_synth.hpp"

namespace {

// `methods` generated methods back to back.
std::string sample_text(int methods) {
    std::mt19937_64 rng(1);
    std::string out;
    for (int i = 0; i < methods; ++i) {
        const auto m = synth::random_method(rng, 20);
        out += synth::render(m, synth::Naming::words, synth::random_style(rng), rng, 0);
    }
    return out;
}

void BM_Tokenize(benchmark::State& state) {
    const std::string text = sample_text(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(clonegraph::lexis::tokenize(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(1)->Arg(16)->Arg(256);

void BM_IndividualInfo(benchmark::State& state) {
    const std::string text = sample_text(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(clonegraph::lexis::individual_info(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_IndividualInfo)->Arg(1)->Arg(16)->Arg(256);

}  // namespace
