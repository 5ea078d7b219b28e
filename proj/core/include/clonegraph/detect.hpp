#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clonegraph/embed.hpp"
#include "clonegraph/lexis.hpp"

namespace clonegraph::detect {

struct CosineResult {
    double value = 0.0;
    bool degenerate = false;  // both inputs were zero vectors; value is 0
};

/// sum(x_i y_i) / (|x| |y|) in double precision. A zero vector against a nonzero
/// one gives 0 without the degenerate flag.
CosineResult cosine(std::span<const double> x, std::span<const double> y);

enum class Scope { all_pairs, pairs_from_file, top_k };

struct SimilarityQuery {
    double threshold = 0.7;  // inclusive: pairs with similarity >= threshold are reported
    Scope scope = Scope::all_pairs;
    std::size_t top_k = 0;
    std::vector<std::pair<std::string, std::string>> pairs;  // for Scope::pairs_from_file
    std::size_t tile_size = 4096;

    void validate() const;
};

struct ClonePair {
    std::string id_a;  // id_a < id_b
    std::string id_b;
    double similarity = 0.0;

    bool operator==(const ClonePair&) const = default;
};

/// The sample rows of an embedding, L2-normalized and sorted by (unprefixed) id.
/// Zero rows stay zero.
struct SampleBlock {
    std::vector<std::string> ids;
    DenseRows unit_rows;
};

SampleBlock sample_block(const embed::EmbeddingMatrix& m);

/// A detected pair as rows of a SampleBlock; a < b, hence ids[a] < ids[b].
struct IndexedPair {
    std::uint32_t a;
    std::uint32_t b;
    double similarity;
};

using PairSink = std::function<void(const SampleBlock&, std::span<const IndexedPair>)>;

/// Streaming all-pairs search. Pairs reach `sink` in (id_a, id_b) order, one band
/// of rows at a time, so memory stays bounded by the band rather than the result.
/// Returns the number of pairs emitted.
std::size_t for_each_clone_pair(const SampleBlock& block, const SimilarityQuery& q, const PairSink& sink);

/// Every sample pair with cosine >= threshold, collected from for_each_clone_pair.
/// Candidates are scanned in column tiles of q.tile_size; every dot product is
/// accumulated in dimension order, so results are independent of the tile size
/// and the worker count. Output sorted by (id_a, id_b).
std::vector<ClonePair> detect_all_pairs(const embed::EmbeddingMatrix& m, const SimilarityQuery& q);

/// Dispatches on q.scope.
std::vector<ClonePair> detect(const embed::EmbeddingMatrix& m, const SimilarityQuery& q);

enum class CombineMode { sum, concat };
CombineMode parse_combine_mode(std::string_view name);
std::string_view to_string(CombineMode mode);

/// Fuses global sample vectors with externally produced individual vectors
/// (sum: add then renormalize; concat: append then renormalize). Only sample rows
/// are kept. Throws if the sample id sets differ or, in sum mode, the dims differ.
embed::EmbeddingMatrix combine_vectors(const embed::EmbeddingMatrix& global, const embed::EmbeddingMatrix& individual,
                                       CombineMode mode);

struct OverlapBaselineResult {
    std::string id_a;
    std::string id_b;
    std::size_t shared = 0;
    std::size_t t_max = 0;
    double ratio = 0.0;
    bool is_clone = false;
};

/// Token-bag overlap: shared = multiset intersection of lexemes, t_max = the larger
/// bag, clone iff shared / t_max >= theta. The bag holds keyword, identifier and
/// literal tokens; operators and separators are delimiters, not tokens.
OverlapBaselineResult overlap_baseline(const lexis::TokenStream& a, const lexis::TokenStream& b, double theta);

/// CSV `id_a,id_b,similarity` with a header row and 6-decimal similarities.
std::string format_clone_report(const std::vector<ClonePair>& pairs);
void write_clone_report(const std::vector<ClonePair>& pairs, const std::filesystem::path& out);

/// Incremental form of write_clone_report for streamed results.
class CloneReportWriter {
public:
    explicit CloneReportWriter(const std::filesystem::path& out);
    void write(std::string_view id_a, std::string_view id_b, double similarity);
    void close();  // flushes; throws on I/O failure

private:
    void flush();

    std::filesystem::path path_;
    std::ofstream file_;
    std::string buffer_;
};
std::vector<ClonePair> read_clone_report(const std::filesystem::path& path);

/// First two columns of a CSV (header optional), canonicalized so first < second.
std::vector<std::pair<std::string, std::string>> read_pair_list(const std::filesystem::path& path);

}  // namespace clonegraph::detect
