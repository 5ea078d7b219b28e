#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clonegraph/corpus.hpp"
#include "clonegraph/detect.hpp"

namespace clonegraph::eval {

/// Benchmark clone categories; NEG marks a labeled non-clone.
enum class CloneType { T1, T2, VST3, ST3, MT3, T4, NEG };

CloneType parse_clone_type(std::string_view name);
std::string_view to_string(CloneType type);

struct LabeledPair {
    std::string id_a;  // id_a < id_b after canonicalize()
    std::string id_b;
    CloneType type = CloneType::NEG;
};

struct EvalMetrics {
    std::map<CloneType, double> recall_by_type;       // every non-NEG type present in the labels
    std::map<CloneType, std::size_t> labeled_by_type;
    std::optional<double> precision;                  // unset when nothing labeled was detected
    double recall = 0.0;                              // pooled over all non-NEG labels
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t unlabeled = 0;  // detected pairs that carry no label
};

/// Scores a clone report against labeled pairs. Detected pairs without a label count
/// toward neither tp nor fp. If `known_ids` is given, every labeled id must be in it.
EvalMetrics score(std::span<const detect::ClonePair> report, std::span<const LabeledPair> labels,
                  const std::set<std::string>* known_ids = nullptr);

/// Streaming form of score(). Detected pairs may arrive in any orientation; a
/// labeled pair counts once however often it is added, unlabeled pairs are
/// counted per call, so feed distinct pairs.
class Scorer {
public:
    explicit Scorer(std::span<const LabeledPair> labels, const std::set<std::string>* known_ids = nullptr);
    void add(std::string_view id_a, std::string_view id_b);
    EvalMetrics finish() const;

private:
    struct Entry {
        CloneType type;
        bool detected = false;
    };
    std::map<std::string, std::map<std::string, Entry, std::less<>>, std::less<>> labels_;
    std::size_t unlabeled_ = 0;
};

/// CSV `id_a,id_b,type` (header optional).
std::vector<LabeledPair> read_labels(const std::filesystem::path& path);
void write_labels(std::span<const LabeledPair> labels, const std::filesystem::path& out);

/// JSON object with recall_by_type, precision (null when undefined), recall, f1,
/// tp, fp, fn and unlabeled.
std::string metrics_json(const EvalMetrics& m);
void write_metrics(const EvalMetrics& m, const std::filesystem::path& out);

/// Seeded uniform sample of k report rows without replacement, kept in report
/// order; k larger than the report is clamped with a warning.
std::vector<detect::ClonePair> audit_sample(std::span<const detect::ClonePair> report, std::size_t k,
                                            std::uint64_t seed);

/// Writes the audit CSV. With a manifest, each row carries both samples' source
/// paths and line spans; without one those columns are empty.
void export_audit_sample(std::span<const detect::ClonePair> report, std::size_t k, std::uint64_t seed,
                         const corpus::CorpusManifest* manifest, const std::filesystem::path& out);

}  // namespace clonegraph::eval
