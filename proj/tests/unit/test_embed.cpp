#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "clonegraph/error.hpp"
#include "clonegraph/embed.hpp"
#include "clonegraph/lexis.hpp"
#include "clonegraph/parallel.hpp"
#include "fib_family.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace clonegraph;
using graph::LabeledEdge;
using graph::NodeId;

namespace {

graph::GlobalGraph fib_graph(graph::FeatureSet features, std::initializer_list<int> funcs = {0, 3, 4}) {
    graph::InfoMap infos;
    for (int f : funcs) infos["f" + std::to_string(f)] = lexis::individual_info(fib_family::kAll[static_cast<std::size_t>(f)]);
    return graph::build_graph(infos, features);
}

std::size_t row_of(const embed::EmbeddingMatrix& m, const NodeId& id) {
    for (std::size_t i = 0; i < m.node_index.size(); ++i)
        if (m.node_index[i] == id) return i;
    throw std::runtime_error("missing row");
}

double row_cosine(const embed::EmbeddingMatrix& m, const std::string& a, const std::string& b) {
    const auto ra = m.vectors.row(static_cast<Eigen::Index>(row_of(m, NodeId::sample(a))));
    const auto rb = m.vectors.row(static_cast<Eigen::Index>(row_of(m, NodeId::sample(b))));
    return ra.dot(rb) / (ra.norm() * rb.norm());
}

bool bit_equal(const DenseRows& a, const DenseRows& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TEST_CASE("EmbedConfig validation") {
    embed::EmbedConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.dim = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.chebyshev_order = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.mu = std::nan("");
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.power_iters = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("normalized adjacency examples") {
    SUBCASE("single edge") {
        const auto g = graph::GlobalGraph::from_edges({LabeledEdge{NodeId::sample("a"), NodeId::keyword("int"), 7.5}});
        const auto a = embed::symmetrize_normalize(g).normalized.to_dense();
        Eigen::MatrixXd expected(2, 2);
        expected << 0, 1, 1, 0;
        CHECK((a - expected).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("two samples sharing one node") {
        const auto g = graph::GlobalGraph::from_edges({LabeledEdge{NodeId::sample("a"), NodeId::keyword("int"), 1},
                                                       LabeledEdge{NodeId::sample("b"), NodeId::keyword("int"), 1}});
        const auto ops = embed::symmetrize_normalize(g);
        const auto a = ops.normalized.to_dense();
        CHECK(a(0, 2) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-15));
        CHECK(a(2, 1) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-15));
        CHECK(a(0, 1) == 0.0);
        CHECK(ops.degree == std::vector<double>{1, 1, 2});
    }
}

TEST_CASE("normalized adjacency matches the dense oracle and has spectral radius <= 1") {
    std::vector<graph::GlobalGraph> graphs = {fib_graph(graph::FeatureSet::keywords),
                                              fib_graph(graph::FeatureSet::both)};
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) graphs.push_back(oracle::random_graph(rng, 5 + i * 3, 20).graph);
    for (const auto& g : graphs) {
        const auto ops = embed::symmetrize_normalize(g);
        const Eigen::MatrixXd a = oracle::dense_adjacency(g);
        CHECK((ops.adjacency.to_dense() - a).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::MatrixXd ahat = oracle::dense_normalized(a);
        CHECK((ops.normalized.to_dense() - ahat).cwiseAbs().maxCoeff() < 1e-14);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.normalized.to_dense());
        CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
        CHECK((embed::proximity_matrix(ops).to_dense() - oracle::dense_proximity(a)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("randomized SVD against a dense SVD") {
    std::mt19937_64 rng(40);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = oracle::random_graph(rng, 25, 15).graph;
        const auto ops = embed::symmetrize_normalize(g);
        const auto m = embed::proximity_matrix(ops);
        const auto exact = oracle::dense_singular_values(m.to_dense());
        const auto f = embed::randomized_svd(m, 8, 10, 5, 42, sha256(graph::serialize_edge_list(g)));
        REQUIRE(f.singular_values.size() == 8);
        for (int j = 0; j < 8; ++j) CHECK(std::abs(f.singular_values(j) - exact(j)) <= 1e-3 * exact(j));
        for (int j = 0; j < f.rank; ++j) {
            const double norm = f.embedding.col(j).norm();
            CHECK(std::isfinite(norm));
            CHECK(norm > 0);
        }
    }
}

TEST_CASE("randomized SVD rank collapse pads with zeros") {
    // Two disconnected sample/keyword pairs: n = 4, so at most 4 columns are real.
    const auto g = graph::GlobalGraph::from_edges({LabeledEdge{NodeId::sample("a"), NodeId::keyword("int"), 1},
                                                   LabeledEdge{NodeId::sample("b"), NodeId::keyword("for"), 1}});
    embed::EmbedConfig cfg;
    cfg.dim = 16;
    const auto f = embed::factorize(embed::symmetrize_normalize(g), cfg, {});
    CHECK(f.embedding.rows() == 4);
    CHECK(f.embedding.cols() == 16);
    CHECK(f.rank == 4);
    CHECK(f.embedding.rightCols(12).cwiseAbs().maxCoeff() == 0.0);
    // The components are mirror images; with a degenerate spectrum the basis is
    // arbitrary, but the Gram matrix of R is not.
    const Eigen::MatrixXd gram = f.embedding * f.embedding.transpose();
    CHECK(gram(0, 0) == doctest::Approx(gram(1, 1)).epsilon(1e-12));
    CHECK(gram(2, 2) == doctest::Approx(gram(3, 3)).epsilon(1e-12));
    CHECK(gram(0, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("Chebyshev coefficients") {
    const auto c = embed::chebyshev_coefficients(3, 0.5);
    REQUIRE(c.size() == 4);
    // Modified Bessel values from their power series.
    auto bessel = [](int nu, double x) {
        double sum = 0, term = std::pow(x / 2, nu) / std::tgamma(nu + 1.0);
        for (int m = 0; m < 30; ++m) {
            sum += term;
            term *= (x * x / 4) / ((m + 1.0) * (m + 1.0 + nu));
        }
        return sum;
    };
    CHECK(c[0] == doctest::Approx(bessel(0, 0.5)).epsilon(1e-14));
    CHECK(c[1] == doctest::Approx(-2 * bessel(1, 0.5)).epsilon(1e-14));
    CHECK(c[2] == doctest::Approx(2 * bessel(2, 0.5)).epsilon(1e-14));
    CHECK(c[3] == doctest::Approx(-2 * bessel(3, 0.5)).epsilon(1e-14));
    CHECK(embed::chebyshev_coefficients(0, 0.5).size() == 1);
}

TEST_CASE("order-0 propagation is one-hop smoothing") {
    const auto g = fib_graph(graph::FeatureSet::both);
    embed::EmbedConfig cfg;
    cfg.dim = 8;
    cfg.chebyshev_order = 0;
    const auto ops = embed::symmetrize_normalize(g);
    const auto f = embed::factorize(ops, cfg, {});
    const auto e = embed::propagate(f.embedding, ops, g, cfg, {});
    const Eigen::MatrixXd a = oracle::dense_adjacency(g);
    Eigen::MatrixXd expected = a.rowwise().sum().cwiseInverse().asDiagonal() * a * f.embedding;
    for (Eigen::Index i = 0; i < expected.rows(); ++i) expected.row(i).normalize();
    CHECK((e.vectors - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("full embedding Gram matrix matches the dense pipeline") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 8; ++trial) {
        const auto g = oracle::random_graph(rng, 6 + trial, 10).graph;
        embed::EmbedConfig cfg;
        cfg.dim = 32;  // >= node count, so the factorization is complete
        REQUIRE(g.node_count() <= 32);
        const auto e = embed::embed_graph(g, cfg);
        const Eigen::MatrixXd dense = oracle::dense_embedding(g, cfg);
        const Eigen::MatrixXd got = e.vectors * e.vectors.transpose();
        const Eigen::MatrixXd want = dense * dense.transpose();
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("motivation ordering") {
    for (auto features : {graph::FeatureSet::keywords, graph::FeatureSet::both}) {
        const auto e = embed::embed_graph(fib_graph(features), {});
        const double c03 = row_cosine(e, "f0", "f3");
        const double c04 = row_cosine(e, "f0", "f4");
        CHECK(c03 > c04);
        if (features == graph::FeatureSet::keywords) CHECK(c03 >= 0.9);
    }
}

TEST_CASE("twin samples embed identically") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const auto r = oracle::random_graph(rng, 10 + trial, 8 + trial % 20, 1 + trial % 3);
        embed::EmbedConfig cfg;
        cfg.dim = trial % 2 ? 8 : 16;
        const auto e = embed::embed_graph(r.graph, cfg);
        for (const auto& [a, b] : r.twins) CHECK(row_cosine(e, a, b) >= 1 - 1e-9);
    }
}

TEST_CASE("embedding invariants and determinism") {
    std::mt19937_64 rng(12);
    const auto g = oracle::random_graph(rng, 120, 55, 4).graph;
    embed::EmbedConfig cfg;
    cfg.dim = 16;

    const unsigned saved = max_threads();
    set_max_threads(1);
    const auto one = embed::embed_graph(g, cfg);
    set_max_threads(4);
    const auto four = embed::embed_graph(g, cfg);
    set_max_threads(saved);

    CHECK(bit_equal(one.vectors, four.vectors));
    CHECK(one.node_index == g.nodes());
    CHECK(one.vectors.rows() == static_cast<Eigen::Index>(g.node_count()));
    CHECK(one.vectors.allFinite());
    for (Eigen::Index i = 0; i < one.vectors.rows(); ++i) CHECK(std::abs(one.vectors.row(i).norm() - 1.0) < 1e-9);

    // Edge input order does not matter: the graph is canonicalized before embedding.
    auto edges = g.labeled_edges();
    std::shuffle(edges.begin(), edges.end(), rng);
    const auto shuffled = embed::embed_graph(graph::GlobalGraph::from_edges(edges), cfg);
    CHECK(bit_equal(one.vectors, shuffled.vectors));

    cfg.seed = 43;
    const auto other = embed::embed_graph(g, cfg);
    CHECK_FALSE(bit_equal(one.vectors, other.vectors));
}

TEST_CASE("GEMB and TSV round trips") {
    const auto g = fib_graph(graph::FeatureSet::both);
    embed::EmbedConfig cfg;
    cfg.dim = 16;
    cfg.seed = 7;
    const auto e = embed::embed_graph(g, cfg);
    const DenseRows rounded = e.vectors.cast<float>().cast<double>();

    TempDir dir;
    embed::write_gemb(e, dir / "v.gemb");
    const auto back = embed::read_gemb(dir / "v.gemb");
    CHECK(back.node_index == e.node_index);
    CHECK(bit_equal(back.vectors, rounded));
    CHECK(back.graph_digest == sha256(graph::serialize_edge_list(g)));
    CHECK(back.config.seed == 7);
    CHECK(back.config.dim == 16);

    const std::string bytes = slurp(dir / "v.gemb");
    CHECK(bytes.substr(0, 4) == "GEMB");
    std::size_t header = 4 + 4 + 8 + 4 + 8 + 32;
    for (const auto& id : e.node_index) header += 4 + id.serialize().size();
    CHECK(bytes.size() == header + e.rows() * 16 * 4);

    embed::write_tsv(e, dir / "v.tsv");
    const auto text = embed::read_vectors(dir / "v.tsv");
    CHECK(text.node_index == e.node_index);
    // Shortest float32 decimals: exact again once narrowed back to float.
    CHECK(bit_equal(text.vectors.cast<float>().cast<double>(), rounded));
    CHECK(bit_equal(embed::read_vectors(dir / "v.gemb").vectors, rounded));

    dir.write("plain.tsv", "x\t1\t0\ny\t0\t1\n");
    const auto plain = embed::read_vectors(dir / "plain.tsv");
    CHECK(plain.node_index[0] == NodeId::sample("x"));
    dir.write("ragged.tsv", "x\t1\t0\ny\t0\n");
    CHECK_THROWS_AS(embed::read_vectors(dir / "ragged.tsv"), Error);
    dir.write("bad.gemb", "GEMB\x01");
    CHECK_THROWS_AS(embed::read_vectors(dir / "bad.gemb"), Error);
}
