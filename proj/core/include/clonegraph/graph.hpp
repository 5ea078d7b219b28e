#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clonegraph/lexis.hpp"

namespace clonegraph::graph {

enum class NodeKind : std::uint8_t { sample = 0, keyword = 1, sideinfo = 2 };

/// Side-information node labels in canonical order. "EMPTY" is the self-anchor
/// target for samples that would otherwise have no out-edge.
inline constexpr std::string_view kSideInfoLabels[] = {"MNDCB", "MNPCB", "LRI", "FCI", "NDI", "EMPTY"};
inline constexpr std::string_view kEmptyAnchor = "EMPTY";

struct NodeId {
    NodeKind kind = NodeKind::sample;
    std::string label;

    /// `s:<id>`, `k:<word>` or `i:<metric>`.
    std::string serialize() const;
    static NodeId parse(std::string_view text);

    static NodeId sample(std::string id) { return {NodeKind::sample, std::move(id)}; }
    static NodeId keyword(std::string word) { return {NodeKind::keyword, std::move(word)}; }
    static NodeId sideinfo(std::string metric) { return {NodeKind::sideinfo, std::move(metric)}; }

    bool operator==(const NodeId&) const = default;
};

/// Canonical node order: samples by id, then keywords by word, then side-info nodes
/// in kSideInfoLabels order.
bool canonical_less(const NodeId& a, const NodeId& b);

struct Edge {
    std::uint32_t src;  // node index, always a sample
    std::uint32_t dst;  // node index, always a keyword or side-info node
    double weight;      // > 0

    bool operator==(const Edge&) const = default;
};

struct LabeledEdge {
    NodeId src;
    NodeId dst;
    double weight;
};

/// Weighted directed bipartite graph from samples to keyword/side-info nodes.
/// Nodes are held in canonical order and edges sorted by (src, dst) index, so two
/// graphs with the same content are identical member-for-member.
class GlobalGraph {
public:
    GlobalGraph() = default;

    /// Validates the bipartite/weight/duplicate invariants and puts nodes and edges
    /// into canonical order. The node set is exactly the set of edge endpoints.
    static GlobalGraph from_edges(const std::vector<LabeledEdge>& edges);

    const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t n_samples() const noexcept { return n_samples_; }
    std::size_t n_info() const noexcept { return nodes_.size() - n_samples_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }

    std::size_t index_of(const NodeId& node) const;  // throws if absent
    bool contains(const NodeId& node) const;

    std::vector<LabeledEdge> labeled_edges() const;

    bool operator==(const GlobalGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_;
    }

private:
    std::vector<NodeId> nodes_;
    std::vector<Edge> edges_;
    std::size_t n_samples_ = 0;
    std::unordered_map<std::string, std::uint32_t> index_;
};

using InfoMap = std::map<std::string, lexis::IndividualInfo>;

enum class WeightTransform { raw, log1p };
enum class FeatureSet { keywords, sideinfo, both };

WeightTransform parse_weight_transform(std::string_view name);
std::string_view to_string(WeightTransform transform);
FeatureSet parse_feature_set(std::string_view name);
std::string_view to_string(FeatureSet features);

/// One edge per (sample, keyword) with the keyword frequency as weight. Samples
/// without any keyword get the `i:EMPTY` self-anchor. Throws on empty input.
GlobalGraph build_keyword_graph(const InfoMap& infos, WeightTransform transform = WeightTransform::raw);

/// One edge per nonzero side-information metric; samples with all metrics zero
/// get the `i:EMPTY` self-anchor.
GlobalGraph build_sideinfo_graph(const InfoMap& infos, WeightTransform transform = WeightTransform::raw);

/// Unifies sample nodes and takes the disjoint union of edges. A self-anchor edge
/// survives only if the sample has no other edge in the union. Throws if the sample
/// sets differ.
GlobalGraph merge_graphs(const GlobalGraph& g1, const GlobalGraph& g2);

GlobalGraph build_graph(const InfoMap& infos, FeatureSet features, WeightTransform transform = WeightTransform::raw);

/// Edge-list text: `#nodes=<n> samples=<k>` header, then `src\tdst\tweight` lines
/// with shortest round-trip decimal weights.
std::string serialize_edge_list(const GlobalGraph& graph);
GlobalGraph parse_edge_list(std::string_view text);
void write_edge_list(const GlobalGraph& graph, const std::filesystem::path& out);
GlobalGraph read_edge_list(const std::filesystem::path& path);

}  // namespace clonegraph::graph
