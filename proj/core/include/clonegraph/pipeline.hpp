#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clonegraph/corpus.hpp"
#include "clonegraph/error.hpp"
#include "clonegraph/detect.hpp"
#include "clonegraph/embed.hpp"
#include "clonegraph/eval.hpp"
#include "clonegraph/graph.hpp"

namespace clonegraph::pipeline {

/// Every stage parameter in one flat document. Defaults: both feature kinds,
/// 64 dimensions, threshold 0.7.
struct RunConfig {
    std::filesystem::path root;
    corpus::IngestMode mode = corpus::IngestMode::split_methods;
    std::string extension = ".java";
    graph::FeatureSet features = graph::FeatureSet::both;
    graph::WeightTransform weight_transform = graph::WeightTransform::raw;
    embed::EmbedConfig embed;
    double threshold = 0.7;
    std::size_t tile_size = 4096;
    std::size_t top_k = 0;  // 0 = all pairs
    std::filesystem::path out_dir = "clonegraph-out";
    std::optional<std::filesystem::path> labels;
    unsigned threads = 0;  // 0 = hardware concurrency

    // Grid for `sweep`.
    std::vector<double> sweep_thresholds{0.6, 0.7, 0.8};
    std::vector<int> sweep_dims{16, 32, 64, 128};
    std::vector<graph::FeatureSet> sweep_features{graph::FeatureSet::keywords, graph::FeatureSet::sideinfo,
                                                  graph::FeatureSet::both};

    /// Sets one key (e.g. "dim", "threshold", "sweep.dims"). Throws on unknown keys
    /// or malformed values.
    void set(std::string_view key, std::string_view value);

    /// Range checks for every field; throws Error before any stage runs.
    void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunReport {
    std::vector<StageTiming> stages;
    double total_seconds = 0.0;
    std::size_t samples = 0;
    std::int64_t loc = 0;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t pairs = 0;
    std::map<std::string, std::string> output_digests;  // file name -> sha256 hex
    std::optional<eval::EvalMetrics> metrics;
};

/// ingest -> lexis -> graph -> embed -> detect (-> eval when labels are set).
/// Writes manifest.jsonl, graph.tsv, vectors.gemb, clones.csv, metrics.json and
/// run_report.json into out_dir. Stage failures are rethrown as StageError.
RunReport run(const RunConfig& config);

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage " + stage + " failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

std::string run_report_json(const RunReport& report);

/// Grid over sweep_features x sweep_dims x sweep_thresholds. Ingest and lexis run
/// once, the graph once per feature set, the embedding once per (features, dim).
/// Writes CSV blocks per feature set: rows are (threshold, metric), columns dims.
void sweep(const RunConfig& config, const std::filesystem::path& out_csv);

/// Per-sample IndividualInfo, computed in parallel.
graph::InfoMap extract_infos(const std::vector<corpus::CodeSample>& samples);

}  // namespace clonegraph::pipeline
