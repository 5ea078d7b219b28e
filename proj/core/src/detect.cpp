#include "clonegraph/detect.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "clonegraph/error.hpp"
#include "clonegraph/log.hpp"
#include "clonegraph/parallel.hpp"
#include "csv.hpp"

namespace clonegraph::detect {

using embed::EmbeddingMatrix;
using graph::NodeId;
using graph::NodeKind;

namespace {

double ordered_dot(const DenseRows& rows, Eigen::Index i, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < rows.cols(); ++k) s += rows(i, k) * rows(j, k);
    return s;
}

// Column-major copy (d x n) so the inner loop of a tile product runs over
// contiguous candidates for a fixed dimension.
std::vector<double> transposed(const DenseRows& rows) {
    const auto n = rows.rows();
    const auto d = rows.cols();
    std::vector<double> t(static_cast<std::size_t>(n * d));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) t[static_cast<std::size_t>(k * n + i)] = rows(i, k);
    }
    return t;
}

// acc[j - j0] = <row i, row j> for j in [j0, j1), accumulated over k in order.
void row_against_range(const DenseRows& rows, const std::vector<double>& cols_major, Eigen::Index i,
                       Eigen::Index j0, Eigen::Index j1, std::vector<double>& acc) {
    const auto n = rows.rows();
    const auto width = static_cast<std::size_t>(j1 - j0);
    acc.assign(width, 0.0);
    double* out = acc.data();
    for (Eigen::Index k = 0; k < rows.cols(); ++k) {
        const double a = rows(i, k);
        const double* col = cols_major.data() + k * n + j0;
        for (std::size_t j = 0; j < width; ++j) out[j] += a * col[j];
    }
}

std::vector<ClonePair> to_clone_pairs(const SampleBlock& block, std::span<const IndexedPair> found) {
    std::vector<ClonePair> out;
    out.reserve(found.size());
    for (const auto& p : found) out.push_back({block.ids[p.a], block.ids[p.b], p.similarity});
    return out;
}

IndexedPair ordered(std::uint32_t i, std::uint32_t j, double s) {
    return i < j ? IndexedPair{i, j, s} : IndexedPair{j, i, s};
}

bool pair_less(const IndexedPair& x, const IndexedPair& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; }
bool pair_same(const IndexedPair& x, const IndexedPair& y) { return x.a == y.a && x.b == y.b; }

std::vector<ClonePair> detect_top_k(const SampleBlock& block, const SimilarityQuery& q) {
    const auto n = static_cast<std::size_t>(block.unit_rows.rows());
    const auto cols_major = transposed(block.unit_rows);
    const std::size_t k = std::min<std::size_t>(q.top_k, n > 0 ? n - 1 : 0);
    const std::size_t tile = q.tile_size;

    std::vector<std::vector<IndexedPair>> per_row(n);
    parallel_for(0, n, 64, [&](std::size_t b, std::size_t e) {
        std::vector<double> acc;
        std::vector<std::pair<double, std::uint32_t>> cand;
        for (std::size_t i = b; i < e; ++i) {
            cand.clear();
            for (std::size_t j0 = 0; j0 < n; j0 += tile) {
                const std::size_t j1 = std::min(j0 + tile, n);
                row_against_range(block.unit_rows, cols_major, static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(j0), static_cast<Eigen::Index>(j1), acc);
                for (std::size_t j = j0; j < j1; ++j) {
                    if (j != i) cand.emplace_back(acc[j - j0], static_cast<std::uint32_t>(j));
                }
            }
            auto better = [](const auto& x, const auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; };
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), better);
            for (std::size_t c = 0; c < k; ++c) {
                if (cand[c].first >= q.threshold) {
                    per_row[i].push_back(ordered(static_cast<std::uint32_t>(i), cand[c].second, cand[c].first));
                }
            }
        }
    });

    std::vector<IndexedPair> found;
    for (auto& v : per_row) found.insert(found.end(), v.begin(), v.end());
    std::sort(found.begin(), found.end(), pair_less);
    found.erase(std::unique(found.begin(), found.end(), pair_same), found.end());
    return to_clone_pairs(block, found);
}

std::vector<ClonePair> detect_listed(const SampleBlock& block, const SimilarityQuery& q) {
    std::unordered_map<std::string, std::uint32_t> row_of;
    for (std::uint32_t i = 0; i < block.ids.size(); ++i) row_of.emplace(block.ids[i], i);

    std::set<std::string> missing;
    std::vector<IndexedPair> found;
    for (const auto& [a, b] : q.pairs) {
        auto ia = row_of.find(a);
        auto ib = row_of.find(b);
        if (ia == row_of.end()) missing.insert(a);
        if (ib == row_of.end()) missing.insert(b);
        if (ia == row_of.end() || ib == row_of.end() || ia->second == ib->second) continue;
        const double s = ordered_dot(block.unit_rows, ia->second, ib->second);
        if (s >= q.threshold) found.push_back(ordered(ia->second, ib->second, s));
    }
    if (!missing.empty()) {
        std::string listed;
        for (const auto& id : missing) listed += (listed.empty() ? "" : ", ") + id;
        throw Error("pair list references unknown sample ids: " + listed);
    }
    std::sort(found.begin(), found.end(), pair_less);
    found.erase(std::unique(found.begin(), found.end(), pair_same), found.end());
    return to_clone_pairs(block, found);
}

std::string format_similarity(double s) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, s, std::chars_format::fixed, 6);
    return {buf, r.ptr};
}

}  // namespace

CosineResult cosine(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("cosine of vectors with different dimensions");
    double dot = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    if (xx == 0.0 && yy == 0.0) return {0.0, true};
    if (xx == 0.0 || yy == 0.0) return {0.0, false};
    return {dot / (std::sqrt(xx) * std::sqrt(yy)), false};
}

void SimilarityQuery::validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw Error("similarity threshold must be in (0, 1] (got " + std::to_string(threshold) + ")");
    }
    if (tile_size < 1) throw Error("tile size must be >= 1");
    if (scope == Scope::top_k && top_k < 1) throw Error("top-k scope needs k >= 1");
}


SampleBlock sample_block(const EmbeddingMatrix& m) {
    std::vector<std::pair<std::string_view, Eigen::Index>> rows;
    for (std::size_t r = 0; r < m.node_index.size(); ++r) {
        if (m.node_index[r].kind == NodeKind::sample) rows.emplace_back(m.node_index[r].label, static_cast<Eigen::Index>(r));
    }
    std::sort(rows.begin(), rows.end());
    if (auto dup = std::adjacent_find(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first == y.first; });
        dup != rows.end()) {
        throw Error("embedding has duplicate sample id " + std::string(dup->first));
    }
    SampleBlock block;
    block.ids.reserve(rows.size());
    block.unit_rows.resize(static_cast<Eigen::Index>(rows.size()), m.vectors.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        block.ids.emplace_back(rows[i].first);
        auto row = block.unit_rows.row(static_cast<Eigen::Index>(i));
        row = m.vectors.row(rows[i].second);
        const double norm = row.norm();
        if (norm > 0.0) row /= norm;
    }
    return block;
}

std::size_t for_each_clone_pair(const SampleBlock& block, const SimilarityQuery& q, const PairSink& sink) {
    q.validate();
    const auto n = static_cast<std::size_t>(block.unit_rows.rows());
    if (n < 2) return 0;
    const auto cols_major = transposed(block.unit_rows);
    const std::size_t tile = q.tile_size;
    // Rows are released to the sink one band at a time; within a band every worker
    // walks the column tiles outermost so a tile stays cached across its rows.
    const std::size_t band = 256;
    const std::size_t grain = std::max<std::size_t>(8, band / std::max(1u, max_threads()));

    std::vector<std::vector<IndexedPair>> rows_out(band);
    std::vector<IndexedPair> merged;
    std::size_t total = 0;
    for (std::size_t b0 = 0; b0 < n; b0 += band) {
        const std::size_t b1 = std::min(n, b0 + band);
        parallel_for(b0, b1, grain, [&](std::size_t b, std::size_t e) {
            std::vector<double> acc;
            for (std::size_t i = b; i < e; ++i) rows_out[i - b0].clear();
            for (std::size_t j0 = (b + 1) / tile * tile; j0 < n; j0 += tile) {
                const std::size_t j1 = std::min(n, j0 + tile);
                for (std::size_t i = b; i < e; ++i) {
                    const std::size_t from = std::max(j0, i + 1);
                    if (from >= j1) continue;
                    row_against_range(block.unit_rows, cols_major, static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(j1), acc);
                    auto& out = rows_out[i - b0];
                    for (std::size_t j = from; j < j1; ++j) {
                        if (acc[j - from] >= q.threshold) {
                            out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), acc[j - from]});
                        }
                    }
                }
            }
        });
        merged.clear();
        for (std::size_t i = b0; i < b1; ++i) merged.insert(merged.end(), rows_out[i - b0].begin(), rows_out[i - b0].end());
        total += merged.size();
        if (!merged.empty()) sink(block, merged);
    }
    log::debug("detect.all_pairs").kv("samples", n).kv("tile", tile).kv("pairs", total);
    return total;
}

std::vector<ClonePair> detect_all_pairs(const EmbeddingMatrix& m, const SimilarityQuery& q) {
    std::vector<ClonePair> out;
    for_each_clone_pair(sample_block(m), q, [&](const SampleBlock& block, std::span<const IndexedPair> pairs) {
        for (const auto& p : pairs) out.push_back({block.ids[p.a], block.ids[p.b], p.similarity});
    });
    return out;
}

std::vector<ClonePair> detect(const EmbeddingMatrix& m, const SimilarityQuery& q) {
    q.validate();
    switch (q.scope) {
        case Scope::all_pairs: return detect_all_pairs(m, q);
        case Scope::top_k: return detect_top_k(sample_block(m), q);
        case Scope::pairs_from_file: return detect_listed(sample_block(m), q);
    }
    throw Error("unreachable scope");
}

CombineMode parse_combine_mode(std::string_view name) {
    if (name == "sum") return CombineMode::sum;
    if (name == "concat") return CombineMode::concat;
    throw Error("unknown combine mode '" + std::string(name) + "' (expected sum or concat)");
}

std::string_view to_string(CombineMode mode) { return mode == CombineMode::sum ? "sum" : "concat"; }

EmbeddingMatrix combine_vectors(const EmbeddingMatrix& global, const EmbeddingMatrix& individual, CombineMode mode) {
    std::map<std::string, Eigen::Index> global_rows, individual_rows;
    for (std::size_t r = 0; r < global.node_index.size(); ++r) {
        if (global.node_index[r].kind == NodeKind::sample) global_rows.emplace(global.node_index[r].label, r);
    }
    for (std::size_t r = 0; r < individual.node_index.size(); ++r) {
        if (individual.node_index[r].kind == NodeKind::sample) individual_rows.emplace(individual.node_index[r].label, r);
    }

    std::vector<std::string> missing;
    for (const auto& [id, r] : global_rows) {
        if (!individual_rows.contains(id)) missing.push_back(id + " (no individual vector)");
    }
    for (const auto& [id, r] : individual_rows) {
        if (!global_rows.contains(id)) missing.push_back(id + " (no global vector)");
    }
    if (!missing.empty()) {
        std::string listed;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) listed += "\n  " + missing[i];
        if (missing.size() > 20) listed += "\n  ... " + std::to_string(missing.size() - 20) + " more";
        throw Error("global and individual vectors cover different samples:" + listed);
    }

    const Eigen::Index dg = global.vectors.cols();
    const Eigen::Index di = individual.vectors.cols();
    if (mode == CombineMode::sum && dg != di) {
        throw Error("sum mode needs equal dimensions (global " + std::to_string(dg) + ", individual " +
                    std::to_string(di) + "); use concat mode instead");
    }

    EmbeddingMatrix out;
    const Eigen::Index dim = mode == CombineMode::sum ? dg : dg + di;
    out.vectors.resize(static_cast<Eigen::Index>(global_rows.size()), dim);
    Eigen::Index r = 0;
    for (const auto& node : global.node_index) {
        if (node.kind != NodeKind::sample) continue;
        auto row = out.vectors.row(r++);
        const auto g = global.vectors.row(global_rows.at(node.label));
        const auto ind = individual.vectors.row(individual_rows.at(node.label));
        if (mode == CombineMode::sum) {
            row = g + ind;
        } else {
            row.head(dg) = g;
            row.tail(di) = ind;
        }
        const double norm = row.norm();
        if (norm > 0.0) row /= norm;
        out.node_index.push_back(node);
    }
    out.config = global.config;
    out.config.dim = static_cast<int>(dim);
    out.combine_mode = std::string(to_string(mode));
    out.source_digests = {global.graph_digest, individual.graph_digest};
    std::string key(reinterpret_cast<const char*>(global.graph_digest.data()), global.graph_digest.size());
    key.append(reinterpret_cast<const char*>(individual.graph_digest.data()), individual.graph_digest.size());
    key += to_string(mode);
    out.graph_digest = sha256(key);
    log::info("combine.done")
        .kv("mode", to_string(mode))
        .kv("samples", out.rows())
        .kv("dim", dim)
        .kv("global_digest", to_hex(global.graph_digest))
        .kv("individual_digest", to_hex(individual.graph_digest));
    return out;
}

OverlapBaselineResult overlap_baseline(const lexis::TokenStream& a, const lexis::TokenStream& b, double theta) {
    auto bag = [](const lexis::TokenStream& s) {
        std::map<std::string_view, std::size_t> counts;
        std::size_t size = 0;
        for (const auto& t : s.tokens) {
            if (t.kind == lexis::TokenKind::op || t.kind == lexis::TokenKind::separator) continue;
            ++counts[t.lexeme];
            ++size;
        }
        return std::pair{std::move(counts), size};
    };
    const auto [ca, na] = bag(a);
    const auto [cb, nb] = bag(b);
    if (na == 0 || nb == 0) throw Error("overlap baseline needs two non-empty token streams");

    OverlapBaselineResult r;
    for (const auto& [lexeme, count] : ca) {
        if (auto it = cb.find(lexeme); it != cb.end()) r.shared += std::min(count, it->second);
    }
    r.t_max = std::max(na, nb);
    r.ratio = static_cast<double>(r.shared) / static_cast<double>(r.t_max);
    r.is_clone = r.ratio >= theta;
    return r;
}

std::string format_clone_report(const std::vector<ClonePair>& pairs) {
    std::string out = "id_a,id_b,similarity\n";
    for (const auto& p : pairs) {
        out += csv::field(p.id_a);
        out += ',';
        out += csv::field(p.id_b);
        out += ',';
        out += format_similarity(p.similarity);
        out += '\n';
    }
    return out;
}

void write_clone_report(const std::vector<ClonePair>& pairs, const std::filesystem::path& out) {
    CloneReportWriter w(out);
    for (const auto& p : pairs) w.write(p.id_a, p.id_b, p.similarity);
    w.close();
}

CloneReportWriter::CloneReportWriter(const std::filesystem::path& out) : path_(out), file_(out, std::ios::binary) {
    if (!file_) throw Error("cannot write " + out.string());
    buffer_ = "id_a,id_b,similarity\n";
}

void CloneReportWriter::write(std::string_view id_a, std::string_view id_b, double similarity) {
    csv::append_field(buffer_, id_a);
    buffer_ += ',';
    csv::append_field(buffer_, id_b);
    buffer_ += ',';
    char buf[32];
    buffer_.append(buf, std::to_chars(buf, buf + sizeof buf, similarity, std::chars_format::fixed, 6).ptr);
    buffer_ += '\n';
    if (buffer_.size() >= (1u << 20)) flush();
}

void CloneReportWriter::flush() {
    file_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    buffer_.clear();
    if (!file_) throw Error("write failed: " + path_.string());
}

void CloneReportWriter::close() {
    flush();
    file_.close();
    if (!file_) throw Error("write failed: " + path_.string());
}

std::vector<ClonePair> read_clone_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open clone report " + path.string());
    std::vector<ClonePair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.starts_with("id_a"))) continue;
        auto f = csv::split(line);
        if (f.size() < 3) throw Error(path.string() + ":" + std::to_string(lineno) + ": expected id_a,id_b,similarity");
        ClonePair p{f[0], f[1], std::stod(f[2])};
        if (p.id_b < p.id_a) std::swap(p.id_a, p.id_b);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> read_pair_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open pair list " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.starts_with("id_a"))) continue;
        auto f = csv::split(line);
        if (f.size() < 2) throw Error(path.string() + ":" + std::to_string(lineno) + ": expected at least two columns");
        if (f[1] < f[0]) std::swap(f[0], f[1]);
        out.emplace_back(std::move(f[0]), std::move(f[1]));
    }
    return out;
}

}  // namespace clonegraph::detect
