// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "clonegraph/detect.hpp"
#include "clonegraph/embed.hpp"
#include "clonegraph/eval.hpp"
#include "clonegraph/lexis.hpp"
#include "clonegraph/log.hpp"
#include "clonegraph/parallel.hpp"
#include "clonegraph/pipeline.hpp"
#include "java_synth.hpp"
#include "fib_family.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace clonegraph;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::set<std::pair<std::string, std::string>> pair_set(const std::vector<detect::ClonePair>& v) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& p : v) out.emplace(p.id_a, p.id_b);
    return out;
}

double sample_cosine(const embed::EmbeddingMatrix& m, const std::string& a, const std::string& b) {
    Eigen::Index ra = -1, rb = -1;
    for (std::size_t i = 0; i < m.node_index.size(); ++i) {
        if (m.node_index[i] == graph::NodeId::sample(a)) ra = static_cast<Eigen::Index>(i);
        if (m.node_index[i] == graph::NodeId::sample(b)) rb = static_cast<Eigen::Index>(i);
    }
    const auto x = m.vectors.row(ra), y = m.vectors.row(rb);
    return x.dot(y) / (x.norm() * y.norm());
}

Outcome worked_example() {
    const auto info = lexis::individual_info(fib_family::kFib);
    const std::map<std::string, int> want = {{"public", 1}, {"static", 1}, {"int", 4}, {"if", 1}, {"return", 2}, {"for", 1}};
    const bool ok = info.keyword_counts == want && info.mndcb == 2 && info.mnpcb == 1 && info.lri == 1 && info.fci == 1 &&
                    info.ndi == 4;
    return {ok, fmt("keywords=%zu entries, MNDCB=%d MNPCB=%d LRI=%d FCI=%d NDI=%d", info.keyword_counts.size(), info.mndcb,
                    info.mnpcb, info.lri, info.fci, info.ndi)};
}

Outcome t1_t2_recall() {
    TempDir dir;
    const auto corpus = synth::clone_corpus(50, 2024);
    synth::write_corpus(corpus, dir / "src");
    eval::write_labels(corpus.labels, dir / "labels.csv");
    pipeline::RunConfig c;
    c.root = dir / "src";
    c.out_dir = dir / "out";
    c.labels = dir / "labels.csv";
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = pipeline::run(c);
    const double secs = seconds_since(t0);
    const double r1 = report.metrics->recall_by_type.at(eval::CloneType::T1);
    const double r2 = report.metrics->recall_by_type.at(eval::CloneType::T2);
    return {r1 == 1.0 && r2 == 1.0 && secs < 10.0,
            fmt("%zu samples, recall T1=%.4f T2=%.4f, %.2f s", report.samples, r1, r2, secs)};
}

Outcome motivation_ordering() {
    graph::InfoMap infos;
    infos["f0"] = lexis::individual_info(fib_family::kFib);
    infos["f3"] = lexis::individual_info(fib_family::kFibType3);
    infos["f4"] = lexis::individual_info(fib_family::kFibType4);
    const auto e = embed::embed_graph(graph::build_keyword_graph(infos), {});
    const double c03 = sample_cosine(e, "f0", "f3");
    const double c04 = sample_cosine(e, "f0", "f4");
    const auto base = detect::overlap_baseline(lexis::tokenize(fib_family::kFib), lexis::tokenize(fib_family::kFibType3), 0.7);
    return {c03 > c04 && c03 >= 0.9 && base.ratio < 0.7,
            fmt("cos(fib,type-3)=%.4f cos(fib,type-4)=%.4f baseline(fib,type-3)=%zu/%zu=%.3f", c03, c04, base.shared, base.t_max, base.ratio)};
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(404);
    std::size_t compared = 0;
    double worst = 0.0;
    bool ok = true;
    for (int inst = 0; inst < 20; ++inst) {
        const int n = 200 + static_cast<int>(rng() % 301);
        const int d = 8 + static_cast<int>(rng() % 57);
        const double theta = 0.5 + 0.45 * std::uniform_real_distribution<double>()(rng);
        const auto v = oracle::clustered_unit_vectors(rng, n, d);
        embed::EmbeddingMatrix m;
        for (const auto& id : v.ids) m.node_index.push_back(graph::NodeId::sample(id));
        m.vectors = v.x;
        const auto want = oracle::brute_force_pairs(v.ids, v.x, theta);
        for (std::size_t tile : {1, 7, 4096}) {
            detect::SimilarityQuery q;
            q.threshold = theta;
            q.tile_size = tile;
            const auto got = detect::detect_all_pairs(m, q);
            if (got.size() != want.size()) {
                ok = false;
                continue;
            }
            for (std::size_t i = 0; i < got.size(); ++i) {
                if (got[i].id_a != want[i].id_a || got[i].id_b != want[i].id_b) ok = false;
                worst = std::max(worst, std::abs(got[i].similarity - want[i].similarity));
            }
            compared += got.size();
        }
    }
    return {ok && worst <= 1e-9, fmt("60 runs, %zu pairs compared, max |dsim|=%.2e", compared, worst)};
}

Outcome factorization_accuracy() {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int g = 0; g < 20; ++g) {
        const int samples = 12 + static_cast<int>(rng() % 24);
        const auto r = oracle::random_graph(rng, samples, 50 - samples);
        const auto ops = embed::symmetrize_normalize(r.graph);
        const auto m = embed::proximity_matrix(ops);
        const auto exact = oracle::dense_singular_values(m.to_dense());
        const auto f = embed::randomized_svd(m, 8, 10, 5, 42, sha256(graph::serialize_edge_list(r.graph)));
        for (int j = 0; j < 8; ++j) worst = std::max(worst, std::abs(f.singular_values(j) - exact(j)) / exact(j));
    }
    return {worst <= 1e-3, fmt("20 graphs, max relative error %.2e", worst)};
}

Outcome twin_nodes() {
    std::mt19937_64 rng(606);
    double worst = 1.0;
    std::size_t twins = 0;
    for (int g = 0; g < 100; ++g) {
        const auto r = oracle::random_graph(rng, 8 + static_cast<int>(rng() % 60), 6 + static_cast<int>(rng() % 50),
                                            1 + static_cast<int>(rng() % 4));
        embed::EmbedConfig cfg;
        cfg.dim = std::array{8, 16, 32, 64}[g % 4];
        const auto e = embed::embed_graph(r.graph, cfg);
        for (const auto& [a, b] : r.twins) {
            worst = std::min(worst, sample_cosine(e, a, b));
            ++twins;
        }
    }
    return {twins > 0 && worst >= 0.999, fmt("%zu twin pairs, min cosine %.12f", twins, worst)};
}

Outcome threshold_monotonicity() {
    TempDir dir;
    synth::write_corpus(synth::clone_corpus_with_negatives(40, 10, 77), dir / "src");
    const auto corp = corpus::ingest_directory(dir / "src", {});
    const auto e = embed::embed_graph(graph::build_graph(pipeline::extract_infos(corp.samples), graph::FeatureSet::both), {});
    std::vector<std::set<std::pair<std::string, std::string>>> sets;
    for (double theta : {0.8, 0.7, 0.6}) {
        detect::SimilarityQuery q;
        q.threshold = theta;
        sets.push_back(pair_set(detect::detect_all_pairs(e, q)));
    }
    const bool ok = std::includes(sets[1].begin(), sets[1].end(), sets[0].begin(), sets[0].end()) &&
                    std::includes(sets[2].begin(), sets[2].end(), sets[1].begin(), sets[1].end());
    return {ok, fmt("|0.8|=%zu |0.7|=%zu |0.6|=%zu", sets[0].size(), sets[1].size(), sets[2].size())};
}

Outcome determinism() {
    TempDir dir;
    synth::write_corpus(synth::clone_corpus_with_negatives(30, 5, 88), dir / "src");
    pipeline::RunConfig c;
    c.root = dir / "src";
    c.out_dir = dir / "a";
    pipeline::run(c);
    c.out_dir = dir / "b";
    pipeline::run(c);
    bool ok = true;
    std::string detail;
    for (const char* f : {"graph.tsv", "vectors.gemb", "clones.csv"}) {
        const bool same = slurp(dir / "a" / f) == slurp(dir / "b" / f);
        ok = ok && same;
        detail += std::string(detail.empty() ? "" : ", ") + f + (same ? " identical" : " DIFFERS");
    }
    return {ok, detail};
}

// ingest -> detect wall time from the run's stage clock; clones.csv is removed afterwards.
double ingest_to_detect(const std::filesystem::path& root, const std::filesystem::path& out, pipeline::RunReport* keep) {
    pipeline::RunConfig c;
    c.root = root;
    c.out_dir = out;
    auto report = pipeline::run(c);
    double secs = 0;
    for (const auto& s : report.stages) secs += s.seconds;
    std::filesystem::remove_all(out);
    *keep = report;
    return secs;
}

Outcome scalability() {
    TempDir dir;
    // The generator counts class scaffolding and blank lines; sample LOC is about
    // 89% of its figure, so it is asked for 15% more than the target.
    synth::write_corpus(synth::scale_corpus(115'000, 9), dir / "k100");
    synth::write_corpus(synth::scale_corpus(1'150'000, 10), dir / "m1");
    pipeline::RunReport small, large;
    const double t_small = ingest_to_detect(dir / "k100", dir / "out", &small);
    const double t_large = ingest_to_detect(dir / "m1", dir / "out", &large);
    const bool sized = small.loc >= 100'000 && large.loc >= 1'000'000;
    return {sized && t_small <= 30.0 && t_large <= 300.0,
            fmt("100 KLOC (%lld LOC, %zu samples) %.1f s; 1 MLOC (%lld LOC, %zu samples, %zu pairs) %.1f s; %u worker threads",
                static_cast<long long>(small.loc), small.samples, t_small, static_cast<long long>(large.loc), large.samples,
                large.pairs, t_large, max_threads())};
}

Outcome combination() {
    TempDir dir;
    const auto corpus = synth::clone_corpus_with_negatives(30, 10, 99);
    synth::write_corpus(corpus, dir / "src");
    const auto corp = corpus::ingest_directory(dir / "src", {});
    const auto global = embed::embed_graph(graph::build_graph(pipeline::extract_infos(corp.samples), graph::FeatureSet::both), {});
    detect::SimilarityQuery q;

    auto individual = global;
    individual.vectors.setZero();
    const auto zero_sum = detect::combine_vectors(global, individual, detect::CombineMode::sum);
    const auto global_pairs = detect::detect_all_pairs(global, q);
    const bool identity = pair_set(detect::detect_all_pairs(zero_sum, q)) == pair_set(global_pairs);

    // One direction per clone group; near-duplicates get a direction of their own.
    std::map<std::string, int> slot;
    embed::EmbeddingMatrix ind;
    std::vector<Eigen::Index> hot;
    for (const auto& s : corp.samples) {
        const std::string& id = s.meta.id;
        std::string key = id.substr(0, id.find('/'));
        if (id.find("Near.java") != std::string::npos) key += "/near";
        hot.push_back(slot.emplace(key, static_cast<int>(slot.size())).first->second);
        ind.node_index.push_back(graph::NodeId::sample(id));
    }
    ind.vectors = DenseRows::Zero(static_cast<Eigen::Index>(hot.size()), static_cast<Eigen::Index>(slot.size()));
    for (std::size_t r = 0; r < hot.size(); ++r) ind.vectors(static_cast<Eigen::Index>(r), hot[r]) = 1.0;
    const auto combined = detect::combine_vectors(global, ind, detect::CombineMode::concat);

    const auto f_global = eval::score(global_pairs, corpus.labels);
    const auto f_combined = eval::score(detect::detect_all_pairs(combined, q), corpus.labels);
    return {identity && f_combined.f1 >= f_global.f1,
            fmt("zero-sum identity %s; F1 global=%.4f (fp=%zu) combined=%.4f (fp=%zu)", identity ? "holds" : "BROKEN",
                f_global.f1, f_global.fp, f_combined.f1, f_combined.fp)};
}

}  // namespace

int main() {
    log::set_level(log::Level::error);
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"worked-example fidelity", worked_example},
        {"type-1/type-2 recall", t1_t2_recall},
        {"motivation ordering", motivation_ordering},
        {"oracle equivalence", oracle_equivalence},
        {"factorization accuracy", factorization_accuracy},
        {"twin-node property", twin_nodes},
        {"threshold monotonicity", threshold_monotonicity},
        {"determinism", determinism},
        {"scalability", scalability},
        {"combination mode", combination},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %2d %-26s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
