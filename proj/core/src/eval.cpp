#include "clonegraph/eval.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "clonegraph/error.hpp"
#include "clonegraph/log.hpp"
#include "csv.hpp"

namespace clonegraph::eval {
namespace {

constexpr std::pair<CloneType, std::string_view> kTypeNames[] = {
    {CloneType::T1, "T1"},   {CloneType::T2, "T2"}, {CloneType::VST3, "VST3"}, {CloneType::ST3, "ST3"},
    {CloneType::MT3, "MT3"}, {CloneType::T4, "T4"}, {CloneType::NEG, "NEG"},
};

}  // namespace

CloneType parse_clone_type(std::string_view name) {
    for (const auto& [type, text] : kTypeNames) {
        if (text == name) return type;
    }
    throw Error("unknown clone type '" + std::string(name) + "' (expected T1, T2, VST3, ST3, MT3, T4 or NEG)");
}

std::string_view to_string(CloneType type) {
    for (const auto& [t, text] : kTypeNames) {
        if (t == type) return text;
    }
    return "NEG";
}

Scorer::Scorer(std::span<const LabeledPair> labels, const std::set<std::string>* known_ids) {
    if (known_ids) {
        std::set<std::string> unknown;
        for (const auto& l : labels) {
            if (!known_ids->contains(l.id_a)) unknown.insert(l.id_a);
            if (!known_ids->contains(l.id_b)) unknown.insert(l.id_b);
        }
        if (!unknown.empty()) {
            std::string listed;
            for (const auto& id : unknown) listed += (listed.empty() ? "" : ", ") + id;
            throw Error("labels reference ids missing from the manifest: " + listed);
        }
    }
    for (const auto& l : labels) {
        const auto& [lo, hi] = std::minmax(l.id_a, l.id_b);
        auto [it, inserted] = labels_[lo].emplace(hi, Entry{l.type});
        if (!inserted && it->second.type != l.type) {
            throw Error("conflicting labels for pair " + lo + "," + hi);
        }
    }
}

void Scorer::add(std::string_view id_a, std::string_view id_b) {
    if (id_b < id_a) std::swap(id_a, id_b);
    if (auto outer = labels_.find(id_a); outer != labels_.end()) {
        if (auto inner = outer->second.find(id_b); inner != outer->second.end()) {
            inner->second.detected = true;
            return;
        }
    }
    ++unlabeled_;
}

EvalMetrics Scorer::finish() const {
    EvalMetrics m;
    m.unlabeled = unlabeled_;
    std::map<CloneType, std::size_t> detected_by_type;
    for (const auto& [a, row] : labels_) {
        for (const auto& [b, e] : row) {
            if (e.type == CloneType::NEG) {
                if (e.detected) ++m.fp;
                continue;
            }
            ++m.labeled_by_type[e.type];
            if (e.detected) {
                ++m.tp;
                ++detected_by_type[e.type];
            }
        }
    }
    std::size_t positives = 0;
    for (const auto& [type, count] : m.labeled_by_type) {
        positives += count;
        m.recall_by_type[type] = static_cast<double>(detected_by_type[type]) / static_cast<double>(count);
    }
    m.fn = positives - m.tp;
    m.recall = positives ? static_cast<double>(m.tp) / static_cast<double>(positives) : 0.0;
    if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    const double p = m.precision.value_or(0.0);
    m.f1 = (p + m.recall) > 0.0 ? 2.0 * p * m.recall / (p + m.recall) : 0.0;
    return m;
}

EvalMetrics score(std::span<const detect::ClonePair> report, std::span<const LabeledPair> labels,
                  const std::set<std::string>* known_ids) {
    Scorer scorer(labels, known_ids);
    std::vector<std::pair<std::string_view, std::string_view>> distinct;
    distinct.reserve(report.size());
    for (const auto& p : report) {
        std::string_view a = p.id_a, b = p.id_b;
        if (b < a) std::swap(a, b);
        distinct.emplace_back(a, b);
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (const auto& [a, b] : distinct) scorer.add(a, b);
    return scorer.finish();
}

std::vector<LabeledPair> read_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open labels " + path.string());
    std::vector<LabeledPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.starts_with("id_a"))) continue;
        auto f = csv::split(line);
        if (f.size() != 3) throw Error(path.string() + ":" + std::to_string(lineno) + ": expected id_a,id_b,type");
        if (f[1] < f[0]) std::swap(f[0], f[1]);
        out.push_back({std::move(f[0]), std::move(f[1]), parse_clone_type(f[2])});
    }
    return out;
}

void write_labels(std::span<const LabeledPair> labels, const std::filesystem::path& out) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out.string());
    f << "id_a,id_b,type\n";
    for (const auto& l : labels) f << csv::field(l.id_a) << ',' << csv::field(l.id_b) << ',' << to_string(l.type) << '\n';
}

std::string metrics_json(const EvalMetrics& m) {
    nlohmann::ordered_json j;
    j["recall_by_type"] = nlohmann::ordered_json::object();
    for (const auto& [type, r] : m.recall_by_type) j["recall_by_type"][std::string(to_string(type))] = r;
    j["labeled_by_type"] = nlohmann::ordered_json::object();
    for (const auto& [type, n] : m.labeled_by_type) j["labeled_by_type"][std::string(to_string(type))] = n;
    j["precision"] = m.precision ? nlohmann::ordered_json(*m.precision) : nlohmann::ordered_json(nullptr);
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["unlabeled"] = m.unlabeled;
    return j.dump(2);
}

void write_metrics(const EvalMetrics& m, const std::filesystem::path& out) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out.string());
    f << metrics_json(m) << '\n';
}

std::vector<detect::ClonePair> audit_sample(std::span<const detect::ClonePair> report, std::size_t k,
                                            std::uint64_t seed) {
    if (k > report.size()) {
        log::warn("audit.clamp").kv("requested", k).kv("available", report.size());
        k = report.size();
    }
    std::vector<detect::ClonePair> out;
    out.reserve(k);
    std::mt19937_64 rng(seed);
    std::sample(report.begin(), report.end(), std::back_inserter(out), k, rng);
    return out;
}

void export_audit_sample(std::span<const detect::ClonePair> report, std::size_t k, std::uint64_t seed,
                         const corpus::CorpusManifest* manifest, const std::filesystem::path& out) {
    const auto rows = audit_sample(report, k, seed);
    std::unordered_map<std::string, const corpus::SampleRecord*> by_id;
    if (manifest) {
        for (const auto& r : manifest->samples) by_id.emplace(r.id, &r);
    }
    auto location = [&](const std::string& id) -> std::string {
        auto it = by_id.find(id);
        if (it == by_id.end()) return ",,";
        const auto& r = *it->second;
        return csv::field(r.source_path.generic_string()) + ',' + std::to_string(r.lines.start) + ',' +
               std::to_string(r.lines.end);
    };

    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out.string());
    f << "id_a,id_b,similarity,path_a,start_a,end_a,path_b,start_b,end_b\n";
    char sim[32];
    for (const auto& p : rows) {
        std::snprintf(sim, sizeof sim, "%.6f", p.similarity);
        f << csv::field(p.id_a) << ',' << csv::field(p.id_b) << ',' << sim << ',' << location(p.id_a) << ','
          << location(p.id_b) << '\n';
    }
}

}  // namespace clonegraph::eval
