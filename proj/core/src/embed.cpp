#include "clonegraph/embed.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "clonegraph/error.hpp"
#include "clonegraph/log.hpp"

namespace clonegraph::embed {

using graph::GlobalGraph;
using graph::NodeId;

namespace {

constexpr char kMagic[4] = {'G', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, const Digest& digest) {
    std::uint64_t key = mix64(seed);
    for (std::size_t i = 0; i < digest.size(); i += 8) {
        std::uint64_t word = 0;
        for (std::size_t b = 0; b < 8; ++b) word |= static_cast<std::uint64_t>(digest[i + b]) << (8 * b);
        key = mix64(key ^ word);
    }
    return key;
}

// Standard normal draw for cell (row, col), independent of evaluation order.
double gaussian_cell(std::uint64_t key, std::uint64_t row, std::uint64_t col) {
    const std::uint64_t h1 = mix64(mix64(key ^ mix64(row)) ^ (col * 0xd1b54a32d192ed03ULL));
    const std::uint64_t h2 = mix64(h1 ^ 0x8cb92ba72f3d8dd7ULL);
    const double u1 = (static_cast<double>(h1 >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

DenseRows orthonormal_basis(const DenseRows& y) {
    Eigen::HouseholderQR<DenseRows> qr(y);
    DenseRows q = DenseRows::Identity(y.rows(), y.cols());
    q.applyOnTheLeft(qr.householderQ());
    return q;
}

void require_finite(const DenseRows& m, int iteration) {
    if (!m.allFinite()) {
        throw Error("spectral propagation produced a non-finite value at Chebyshev iteration " + std::to_string(iteration));
    }
}

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("truncated GEMB file " + path.string());
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

NodeId parse_vector_id(std::string_view id) {
    if (id.size() >= 2 && id[1] == ':' && (id[0] == 's' || id[0] == 'k' || id[0] == 'i')) return NodeId::parse(id);
    return NodeId::sample(std::string(id));
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void EmbedConfig::validate() const {
    if (dim < 2) throw Error("embedding dimension must be >= 2 (got " + std::to_string(dim) + ")");
    if (chebyshev_order < 0) throw Error("chebyshev order must be >= 0");
    if (oversampling < 0) throw Error("oversampling must be >= 0");
    if (power_iters < 0) throw Error("power iterations must be >= 0");
    if (!std::isfinite(mu) || !std::isfinite(theta_filter)) throw Error("mu and theta must be finite");
}

SpectralOperators symmetrize_normalize(const GlobalGraph& graph) {
    const std::size_t n = graph.node_count();
    if (n == 0) throw Error("cannot embed an empty graph");
    std::vector<Triplet> t;
    t.reserve(graph.edges().size() * 2);
    for (const auto& e : graph.edges()) {
        t.push_back({e.src, e.dst, e.weight});
        t.push_back({e.dst, e.src, e.weight});
    }
    SpectralOperators ops;
    ops.adjacency = CsrMatrix::from_triplets(n, n, std::move(t));

    const auto& rp = ops.adjacency.row_ptr();
    const auto& ci = ops.adjacency.col_idx();
    const auto& av = ops.adjacency.values();
    ops.degree.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) ops.degree[r] += av[k];
        if (ops.degree[r] <= 0.0) throw Error("node " + graph.nodes()[r].serialize() + " has zero degree");
    }
    ops.normalized = ops.adjacency;
    auto& nv = ops.normalized.values();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) nv[k] = av[k] / std::sqrt(ops.degree[r] * ops.degree[ci[k]]);
    }
    return ops;
}

CsrMatrix proximity_matrix(const SpectralOperators& ops, double negative_ratio, double eps) {
    CsrMatrix m = ops.adjacency.row_normalized();
    const double shift = std::log(negative_ratio / static_cast<double>(m.rows()));
    for (double& v : m.values()) v = std::max(0.0, std::log(std::max(eps, v)) - shift);
    return m;
}

Factorization randomized_svd(const CsrMatrix& m, int dim, int oversampling, int power_iters, std::uint64_t seed,
                             const Digest& key) {
    const auto rows = static_cast<Eigen::Index>(m.rows());
    const auto cols = static_cast<Eigen::Index>(m.cols());
    const Eigen::Index width = std::min<Eigen::Index>(dim + oversampling, std::min(rows, cols));
    if (width < 1) throw Error("randomized SVD of an empty matrix");

    const std::uint64_t k = stream_key(seed, key);
    DenseRows omega(cols, width);
    for (Eigen::Index i = 0; i < cols; ++i) {
        for (Eigen::Index j = 0; j < width; ++j) {
            omega(i, j) = gaussian_cell(k, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
        }
    }

    const CsrMatrix mt = m.transpose();
    DenseRows q = orthonormal_basis(m.multiply(omega));
    for (int it = 0; it < power_iters; ++it) {
        q = orthonormal_basis(m.multiply(orthonormal_basis(mt.multiply(q))));
    }

    // B = Q^T M is width x cols. With B^T = Q2 R2, B = R2^T Q2^T, so the left singular
    // vectors and values of B are those of the small matrix R2^T.
    const DenseRows bt = mt.multiply(q);
    Eigen::HouseholderQR<DenseRows> qr(bt);
    const Eigen::MatrixXd r2t =
        qr.matrixQR().topRows(width).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r2t, Eigen::ComputeFullU);
    const DenseRows u = q * svd.matrixU();
    const Eigen::VectorXd& sigma = svd.singularValues();

    Factorization f;
    const Eigen::Index keep = std::min<Eigen::Index>(dim, width);
    f.singular_values = sigma.head(keep);
    const double top = sigma.size() > 0 ? sigma(0) : 0.0;
    for (Eigen::Index j = 0; j < keep && top > 0.0 && sigma(j) >= 1e-12 * top; ++j) f.rank = static_cast<int>(j + 1);

    f.embedding = DenseRows::Zero(rows, dim);
    for (int j = 0; j < f.rank; ++j) f.embedding.col(j) = u.col(j) * std::sqrt(sigma(j));
    if (f.rank < dim) {
        log::warn("embed.rank_collapse").kv("requested", dim).kv("kept", f.rank).kv("sketch", width);
    }
    return f;
}

Factorization factorize(const SpectralOperators& ops, const EmbedConfig& cfg, const Digest& graph_digest) {
    cfg.validate();
    return randomized_svd(proximity_matrix(ops), cfg.dim, cfg.oversampling, cfg.power_iters, cfg.seed, graph_digest);
}

std::vector<double> chebyshev_coefficients(int order, double theta) {
    std::vector<double> c(static_cast<std::size_t>(order) + 1);
    c[0] = std::cyl_bessel_i(0.0, theta);
    for (int j = 1; j <= order; ++j) {
        c[static_cast<std::size_t>(j)] = 2.0 * (j % 2 == 0 ? 1.0 : -1.0) * std::cyl_bessel_i(static_cast<double>(j), theta);
    }
    return c;
}

EmbeddingMatrix propagate(const DenseRows& initial, const SpectralOperators& ops, const GlobalGraph& graph,
                          const EmbedConfig& cfg, const Digest& graph_digest) {
    cfg.validate();
    if (static_cast<std::size_t>(initial.rows()) != ops.adjacency.rows()) {
        throw Error("initial embedding rows do not match the operator");
    }
    const auto coeffs = chebyshev_coefficients(cfg.chebyshev_order, cfg.theta_filter);

    // (L - mu I) X with L = I - A_hat.
    auto modulated = [&](const DenseRows& x) -> DenseRows {
        DenseRows y = ops.normalized.multiply(x);
        y = (1.0 - cfg.mu) * x - y;
        return y;
    };

    DenseRows prev = initial;
    DenseRows sum = coeffs[0] * prev;
    if (cfg.chebyshev_order >= 1) {
        DenseRows cur = modulated(prev);
        require_finite(cur, 1);
        sum += coeffs[1] * cur;
        for (int j = 2; j <= cfg.chebyshev_order; ++j) {
            DenseRows next = 2.0 * modulated(cur) - prev;
            require_finite(next, j);
            sum += coeffs[static_cast<std::size_t>(j)] * next;
            prev = std::move(cur);
            cur = std::move(next);
        }
    }

    EmbeddingMatrix out;
    out.node_index = graph.nodes();
    out.vectors = ops.adjacency.row_normalized().multiply(sum);
    require_finite(out.vectors, cfg.chebyshev_order);
    for (Eigen::Index r = 0; r < out.vectors.rows(); ++r) {
        const double norm = out.vectors.row(r).norm();
        if (!(norm > 0.0)) {
            throw Error("embedding row for " + out.node_index[static_cast<std::size_t>(r)].serialize() + " is all zero");
        }
        out.vectors.row(r) /= norm;
    }
    out.config = cfg;
    out.graph_digest = graph_digest;
    return out;
}

EmbeddingMatrix embed_graph(const GlobalGraph& graph, const EmbedConfig& cfg) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const Digest digest = sha256(graph::serialize_edge_list(graph));
    const auto ops = symmetrize_normalize(graph);
    const auto t1 = clock::now();
    const auto fact = factorize(ops, cfg, digest);
    const auto t2 = clock::now();
    auto out = propagate(fact.embedding, ops, graph, cfg, digest);
    const auto t3 = clock::now();
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    log::info("embed.done")
        .kv("nodes", graph.node_count())
        .kv("dim", cfg.dim)
        .kv("rank", fact.rank)
        .kv("normalize_s", secs(t0, t1))
        .kv("factorize_s", secs(t1, t2))
        .kv("propagate_s", secs(t2, t3));
    return out;
}

void write_gemb(const EmbeddingMatrix& m, const std::filesystem::path& out) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out.string());
    f.write(kMagic, 4);
    put<std::uint32_t>(f, kVersion);
    put<std::uint64_t>(f, m.rows());
    put<std::uint32_t>(f, static_cast<std::uint32_t>(m.dim()));
    put<std::uint64_t>(f, m.config.seed);
    f.write(reinterpret_cast<const char*>(m.graph_digest.data()), static_cast<std::streamsize>(m.graph_digest.size()));
    for (const auto& id : m.node_index) {
        const std::string s = id.serialize();
        put<std::uint32_t>(f, static_cast<std::uint32_t>(s.size()));
        f.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    for (Eigen::Index r = 0; r < m.vectors.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.vectors.cols(); ++c) put<float>(f, static_cast<float>(m.vectors(r, c)));
    }
    if (!f) throw Error("write failed for " + out.string());
}

EmbeddingMatrix read_gemb(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error(path.string() + " is not a GEMB file");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion) throw Error("unsupported GEMB version " + std::to_string(version));
    const auto n = get<std::uint64_t>(in, path);
    const auto d = get<std::uint32_t>(in, path);
    EmbeddingMatrix m;
    m.config.dim = static_cast<int>(d);
    m.config.seed = get<std::uint64_t>(in, path);
    if (!in.read(reinterpret_cast<char*>(m.graph_digest.data()), static_cast<std::streamsize>(m.graph_digest.size()))) {
        throw Error("truncated GEMB file " + path.string());
    }
    m.node_index.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto len = get<std::uint32_t>(in, path);
        std::string s(len, '\0');
        if (!in.read(s.data(), len)) throw Error("truncated GEMB file " + path.string());
        m.node_index.push_back(NodeId::parse(s));
    }
    m.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::uint64_t r = 0; r < n; ++r) {
        for (std::uint32_t c = 0; c < d; ++c) {
            m.vectors(static_cast<Eigen::Index>(r), c) = static_cast<double>(get<float>(in, path));
        }
    }
    return m;
}

void write_tsv(const EmbeddingMatrix& m, const std::filesystem::path& out) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out.string());
    char buf[64];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        f << m.node_index[r].serialize();
        for (Eigen::Index c = 0; c < m.vectors.cols(); ++c) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<float>(m.vectors(static_cast<Eigen::Index>(r), c)));
            f << '\t' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        f << '\n';
    }
}

EmbeddingMatrix read_tsv(const std::filesystem::path& path) {
    const std::string content = slurp(path);
    EmbeddingMatrix m;
    m.graph_digest = sha256(content);
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos < content.size()) {
        auto eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string_view line(content.data() + pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        for (std::size_t start = 0;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        m.node_index.push_back(parse_vector_id(fields.front()));
        std::vector<double> values;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v = 0.0;
            const auto field = fields[i];
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size()) {
                throw Error(path.string() + ":" + std::to_string(lineno) + ": bad value '" + std::string(field) + "'");
            }
            values.push_back(v);
        }
        if (!rows.empty() && values.size() != rows.front().size()) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": inconsistent vector dimension");
        }
        rows.push_back(std::move(values));
    }
    const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
    m.vectors.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (Eigen::Index c = 0; c < d; ++c) m.vectors(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
    m.config.dim = static_cast<int>(d);
    return m;
}

EmbeddingMatrix read_vectors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) return read_gemb(path);
    return read_tsv(path);
}

}  // namespace clonegraph::embed
