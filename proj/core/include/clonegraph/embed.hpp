#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clonegraph/digest.hpp"
#include "clonegraph/graph.hpp"
#include "clonegraph/sparse.hpp"

namespace clonegraph::embed {

/// Spectral embedding parameters. Defaults follow the reference two-stage method:
/// order-10 Chebyshev expansion, mu = 0.2, theta = 0.5, 10 oversampling columns
/// and 5 power iterations in the randomized SVD.
struct EmbedConfig {
    int dim = 64;
    std::uint64_t seed = 42;
    int chebyshev_order = 10;
    double mu = 0.2;
    double theta_filter = 0.5;
    int oversampling = 10;
    int power_iters = 5;

    /// Throws Error for dim < 2, negative order/oversampling/power iterations or
    /// non-finite mu/theta.
    void validate() const;

    bool operator==(const EmbedConfig&) const = default;
};

/// The operators derived from a graph: A = W + W^T over the canonical node order,
/// its weighted degrees and A_hat = D^-1/2 A D^-1/2.
struct SpectralOperators {
    CsrMatrix adjacency;
    std::vector<double> degree;
    CsrMatrix normalized;
};

/// Throws Error naming the first node whose symmetrized degree is zero.
SpectralOperators symmetrize_normalize(const graph::GlobalGraph& graph);

/// Log-shifted proximity matrix: for every stored entry r_ij of the random-walk
/// matrix D^-1 A, M_ij = max(0, ln(max(eps, r_ij)) - ln(lambda / n)).
CsrMatrix proximity_matrix(const SpectralOperators& ops, double negative_ratio = 1.0, double eps = 1e-9);

struct Factorization {
    DenseRows embedding;               // n x dim, U_d * diag(sqrt(sigma_d)), zero-padded past the rank
    Eigen::VectorXd singular_values;   // the leading min(dim, sketch width) estimates
    int rank = 0;                      // columns kept before zero padding
};

/// Randomized truncated SVD of a sparse matrix (Gaussian sketch of width
/// min(dim + oversampling, n), power_iters rounds of subspace iteration).
/// The Gaussian test matrix entry (i, j) is a pure function of (seed, key, i, j).
Factorization randomized_svd(const CsrMatrix& m, int dim, int oversampling, int power_iters, std::uint64_t seed,
                             const Digest& key);

/// First stage: rank-dim factorization of proximity_matrix(ops).
Factorization factorize(const SpectralOperators& ops, const EmbedConfig& cfg, const Digest& graph_digest);

/// Chebyshev coefficients c_0 = I_0(theta), c_j = 2 (-1)^j I_j(theta) for j = 1..order.
std::vector<double> chebyshev_coefficients(int order, double theta);

struct EmbeddingMatrix {
    std::vector<graph::NodeId> node_index;  // row order
    DenseRows vectors;                      // n x d
    EmbedConfig config;
    Digest graph_digest{};

    /// Set when the matrix came out of combine_vectors.
    std::optional<std::string> combine_mode;
    std::vector<Digest> source_digests;

    std::size_t rows() const noexcept { return node_index.size(); }
    int dim() const noexcept { return static_cast<int>(vectors.cols()); }
};

/// Second stage: S = sum_j c_j T_j(L - mu I) R via the Chebyshev recursion, then
/// E = rownorm(D^-1 A S). Throws Error if an iterate goes non-finite or an output
/// row vanishes.
EmbeddingMatrix propagate(const DenseRows& initial, const SpectralOperators& ops, const graph::GlobalGraph& graph,
                          const EmbedConfig& cfg, const Digest& graph_digest);

/// symmetrize_normalize -> factorize -> propagate, keyed by the digest of the
/// graph's serialized edge list.
EmbeddingMatrix embed_graph(const graph::GlobalGraph& graph, const EmbedConfig& cfg);

/// Binary GEMB file: "GEMB", u32 version, u64 n, u32 d, u64 seed, 32-byte digest,
/// n length-prefixed (u32) node ids, then n*d little-endian float32 row-major.
void write_gemb(const EmbeddingMatrix& m, const std::filesystem::path& out);
EmbeddingMatrix read_gemb(const std::filesystem::path& path);

/// TSV: serialized node id followed by d decimals per line.
void write_tsv(const EmbeddingMatrix& m, const std::filesystem::path& out);
EmbeddingMatrix read_tsv(const std::filesystem::path& path);

/// Reads GEMB or TSV, sniffing the magic. TSV ids without a `s:`/`k:`/`i:` prefix
/// are taken as sample ids.
EmbeddingMatrix read_vectors(const std::filesystem::path& path);

}  // namespace clonegraph::embed
