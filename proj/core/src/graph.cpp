#include "clonegraph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "clonegraph/error.hpp"

namespace clonegraph::graph {
namespace {

int sideinfo_rank(std::string_view label) {
    for (std::size_t i = 0; i < std::size(kSideInfoLabels); ++i) {
        if (kSideInfoLabels[i] == label) return static_cast<int>(i);
    }
    return -1;
}

double transformed(int count, WeightTransform transform) {
    return transform == WeightTransform::log1p ? std::log1p(static_cast<double>(count)) : static_cast<double>(count);
}

std::string format_weight(double w) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, w);
    return std::string(buf, ptr);
}

bool is_anchor(const LabeledEdge& e) {
    return e.dst.kind == NodeKind::sideinfo && e.dst.label == kEmptyAnchor;
}

void require_nonempty(const InfoMap& infos) {
    if (infos.empty()) throw Error("cannot build a graph from zero samples");
}

}  // namespace

std::string NodeId::serialize() const {
    switch (kind) {
        case NodeKind::sample: return "s:" + label;
        case NodeKind::keyword: return "k:" + label;
        case NodeKind::sideinfo: return "i:" + label;
    }
    return label;
}

NodeId NodeId::parse(std::string_view text) {
    if (text.size() < 3 || text[1] != ':') throw Error("malformed node id '" + std::string(text) + "'");
    std::string label(text.substr(2));
    switch (text[0]) {
        case 's': return sample(std::move(label));
        case 'k': return keyword(std::move(label));
        case 'i': return sideinfo(std::move(label));
        default: throw Error("unknown node kind in '" + std::string(text) + "'");
    }
}

bool canonical_less(const NodeId& a, const NodeId& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.kind == NodeKind::sideinfo) return sideinfo_rank(a.label) < sideinfo_rank(b.label);
    return a.label < b.label;
}

GlobalGraph GlobalGraph::from_edges(const std::vector<LabeledEdge>& edges) {
    GlobalGraph g;
    std::unordered_map<std::string, NodeId> unique;
    for (const auto& e : edges) {
        if (e.src.kind != NodeKind::sample) throw Error("edge source must be a sample node: " + e.src.serialize());
        if (e.dst.kind == NodeKind::sample) throw Error("edge target must be an info node: " + e.dst.serialize());
        if (e.dst.kind == NodeKind::sideinfo && sideinfo_rank(e.dst.label) < 0) {
            throw Error("unknown side-information node " + e.dst.serialize());
        }
        if (e.dst.kind == NodeKind::keyword && !lexis::is_reserved_word(e.dst.label)) {
            throw Error("keyword node is not a reserved word: " + e.dst.serialize());
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw Error("edge " + e.src.serialize() + " -> " + e.dst.serialize() + " has non-positive weight");
        }
        unique.try_emplace(e.src.serialize(), e.src);
        unique.try_emplace(e.dst.serialize(), e.dst);
    }
    g.nodes_.reserve(unique.size());
    for (auto& [key, node] : unique) g.nodes_.push_back(node);
    std::sort(g.nodes_.begin(), g.nodes_.end(), canonical_less);
    g.index_.reserve(g.nodes_.size());
    for (std::uint32_t i = 0; i < g.nodes_.size(); ++i) {
        g.index_.emplace(g.nodes_[i].serialize(), i);
        if (g.nodes_[i].kind == NodeKind::sample) ++g.n_samples_;
    }

    g.edges_.reserve(edges.size());
    for (const auto& e : edges) {
        g.edges_.push_back({g.index_.at(e.src.serialize()), g.index_.at(e.dst.serialize()), e.weight});
    }
    std::sort(g.edges_.begin(), g.edges_.end(),
              [](const Edge& a, const Edge& b) { return a.src != b.src ? a.src < b.src : a.dst < b.dst; });
    for (std::size_t i = 1; i < g.edges_.size(); ++i) {
        if (g.edges_[i].src == g.edges_[i - 1].src && g.edges_[i].dst == g.edges_[i - 1].dst) {
            throw Error("duplicate edge " + g.nodes_[g.edges_[i].src].serialize() + " -> " +
                        g.nodes_[g.edges_[i].dst].serialize());
        }
    }
    return g;
}

std::size_t GlobalGraph::index_of(const NodeId& node) const {
    auto it = index_.find(node.serialize());
    if (it == index_.end()) throw Error("node not in graph: " + node.serialize());
    return it->second;
}

bool GlobalGraph::contains(const NodeId& node) const { return index_.contains(node.serialize()); }

std::vector<LabeledEdge> GlobalGraph::labeled_edges() const {
    std::vector<LabeledEdge> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.push_back({nodes_[e.src], nodes_[e.dst], e.weight});
    return out;
}

WeightTransform parse_weight_transform(std::string_view name) {
    if (name == "none" || name == "raw") return WeightTransform::raw;
    if (name == "log1p") return WeightTransform::log1p;
    throw Error("unknown weight transform '" + std::string(name) + "' (expected none or log1p)");
}

std::string_view to_string(WeightTransform transform) {
    return transform == WeightTransform::log1p ? "log1p" : "none";
}

FeatureSet parse_feature_set(std::string_view name) {
    if (name == "keywords") return FeatureSet::keywords;
    if (name == "sideinfo") return FeatureSet::sideinfo;
    if (name == "both") return FeatureSet::both;
    throw Error("unknown feature set '" + std::string(name) + "' (expected keywords, sideinfo or both)");
}

std::string_view to_string(FeatureSet features) {
    switch (features) {
        case FeatureSet::keywords: return "keywords";
        case FeatureSet::sideinfo: return "sideinfo";
        case FeatureSet::both: return "both";
    }
    return "both";
}

GlobalGraph build_keyword_graph(const InfoMap& infos, WeightTransform transform) {
    require_nonempty(infos);
    std::vector<LabeledEdge> edges;
    for (const auto& [id, info] : infos) {
        const auto src = NodeId::sample(id);
        for (const auto& [word, count] : info.keyword_counts) {
            if (count > 0) edges.push_back({src, NodeId::keyword(word), transformed(count, transform)});
        }
        if (info.keyword_counts.empty()) edges.push_back({src, NodeId::sideinfo(std::string(kEmptyAnchor)), 1.0});
    }
    return GlobalGraph::from_edges(edges);
}

GlobalGraph build_sideinfo_graph(const InfoMap& infos, WeightTransform transform) {
    require_nonempty(infos);
    std::vector<LabeledEdge> edges;
    for (const auto& [id, info] : infos) {
        const auto src = NodeId::sample(id);
        const int metrics[] = {info.mndcb, info.mnpcb, info.lri, info.fci, info.ndi};
        bool any = false;
        for (std::size_t m = 0; m < std::size(metrics); ++m) {
            if (metrics[m] <= 0) continue;
            edges.push_back({src, NodeId::sideinfo(std::string(kSideInfoLabels[m])), transformed(metrics[m], transform)});
            any = true;
        }
        if (!any) edges.push_back({src, NodeId::sideinfo(std::string(kEmptyAnchor)), 1.0});
    }
    return GlobalGraph::from_edges(edges);
}

GlobalGraph merge_graphs(const GlobalGraph& g1, const GlobalGraph& g2) {
    auto samples_of = [](const GlobalGraph& g) {
        return std::vector<NodeId>(g.nodes().begin(), g.nodes().begin() + static_cast<std::ptrdiff_t>(g.n_samples()));
    };
    const auto s1 = samples_of(g1);
    const auto s2 = samples_of(g2);
    if (s1 != s2) {
        std::set<std::string> a, b;
        for (const auto& n : s1) a.insert(n.label);
        for (const auto& n : s2) b.insert(n.label);
        std::vector<std::string> diff;
        std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
        std::string listed;
        for (std::size_t i = 0; i < diff.size() && i < 10; ++i) listed += (i ? ", " : "") + diff[i];
        throw Error("cannot merge graphs over different sample sets (" + std::to_string(diff.size()) +
                    " differ: " + listed + ")");
    }

    auto all = g1.labeled_edges();
    auto more = g2.labeled_edges();
    all.insert(all.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));

    std::set<std::string> has_real_edge;
    for (const auto& e : all) {
        if (!is_anchor(e)) has_real_edge.insert(e.src.label);
    }
    std::set<std::string> anchored;
    std::vector<LabeledEdge> merged;
    merged.reserve(all.size());
    for (auto& e : all) {
        if (is_anchor(e)) {
            if (has_real_edge.contains(e.src.label) || !anchored.insert(e.src.label).second) continue;
        }
        merged.push_back(std::move(e));
    }
    return GlobalGraph::from_edges(merged);
}

GlobalGraph build_graph(const InfoMap& infos, FeatureSet features, WeightTransform transform) {
    switch (features) {
        case FeatureSet::keywords: return build_keyword_graph(infos, transform);
        case FeatureSet::sideinfo: return build_sideinfo_graph(infos, transform);
        case FeatureSet::both:
            return merge_graphs(build_keyword_graph(infos, transform), build_sideinfo_graph(infos, transform));
    }
    throw Error("unreachable feature set");
}

std::string serialize_edge_list(const GlobalGraph& graph) {
    std::vector<std::string> names;
    names.reserve(graph.node_count());
    for (const auto& n : graph.nodes()) names.push_back(n.serialize());

    std::string out = "#nodes=" + std::to_string(graph.node_count()) + " samples=" + std::to_string(graph.n_samples()) + "\n";
    for (const auto& e : graph.edges()) {
        out += names[e.src];
        out += '\t';
        out += names[e.dst];
        out += '\t';
        out += format_weight(e.weight);
        out += '\n';
    }
    return out;
}

GlobalGraph parse_edge_list(std::string_view text) {
    auto next_line = [&text]() -> std::string_view {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return line;
    };

    const std::string header(next_line());
    std::size_t declared_nodes = 0, declared_samples = 0;
    if (std::sscanf(header.c_str(), "#nodes=%zu samples=%zu", &declared_nodes, &declared_samples) != 2) {
        throw Error("edge list is missing the '#nodes=<n> samples=<k>' header");
    }

    std::vector<LabeledEdge> edges;
    std::size_t lineno = 1;
    while (!text.empty()) {
        const auto line = next_line();
        ++lineno;
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string_view::npos) throw Error("edge list line " + std::to_string(lineno) + ": expected 3 fields");
        const auto wtext = line.substr(t2 + 1);
        double w = 0.0;
        auto [ptr, ec] = std::from_chars(wtext.data(), wtext.data() + wtext.size(), w);
        if (ec != std::errc() || ptr != wtext.data() + wtext.size()) {
            throw Error("edge list line " + std::to_string(lineno) + ": bad weight '" + std::string(wtext) + "'");
        }
        edges.push_back({NodeId::parse(line.substr(0, t1)), NodeId::parse(line.substr(t1 + 1, t2 - t1 - 1)), w});
    }
    auto g = GlobalGraph::from_edges(edges);
    if (g.node_count() != declared_nodes || g.n_samples() != declared_samples) {
        throw Error("edge list header disagrees with its edges (nodes " + std::to_string(g.node_count()) +
                    ", samples " + std::to_string(g.n_samples()) + ")");
    }
    return g;
}

void write_edge_list(const GlobalGraph& graph, const std::filesystem::path& out) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out.string());
    f << serialize_edge_list(graph);
}

GlobalGraph read_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open edge list " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_edge_list(ss.str());
}

}  // namespace clonegraph::graph
