#include "clonegraph/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clonegraph/digest.hpp"
#include "clonegraph/error.hpp"
#include "clonegraph/lexis.hpp"
#include "clonegraph/log.hpp"
#include "clonegraph/parallel.hpp"

namespace clonegraph::pipeline {
namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw Error("config key '" + std::string(key) + "': not a number: '" + std::string(value) + "'");
    return out;
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view value, F&& item) {
    std::vector<T> out;
    while (!value.empty()) {
        const auto comma = value.find(',');
        const auto part = trim(value.substr(0, comma));
        if (!part.empty()) out.push_back(item(part));
        if (comma == std::string_view::npos) break;
        value.remove_prefix(comma + 1);
    }
    return out;
}

void write_text(const std::filesystem::path& out, std::string_view text) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out.string());
    f << text;
}

class StageClock {
public:
    explicit StageClock(RunReport& report) : report_(report) {}

    template <typename F>
    auto operator()(const std::string& stage, F&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        struct Record {
            RunReport& report;
            const std::string& stage;
            std::chrono::steady_clock::time_point t0;
            ~Record() {
                const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                report.stages.push_back({stage, s});
                log::info("stage.done").kv("stage", stage).kv("seconds", s);
            }
        } rec{report_, stage, t0};
        try {
            return body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
    }

private:
    RunReport& report_;
};

// The detect stage sees exactly what a later `detect` over vectors.gemb would see.
void round_to_float(embed::EmbeddingMatrix& m) {
    m.vectors = m.vectors.cast<float>().cast<double>();
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "root") root = std::string(value);
    else if (key == "mode") mode = corpus::parse_ingest_mode(value);
    else if (key == "ext" || key == "extension") extension = std::string(value);
    else if (key == "features") features = graph::parse_feature_set(value);
    else if (key == "weight_transform") weight_transform = graph::parse_weight_transform(value);
    else if (key == "dim") embed.dim = parse_number<int>(key, value);
    else if (key == "seed") embed.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "chebyshev_order") embed.chebyshev_order = parse_number<int>(key, value);
    else if (key == "mu") embed.mu = parse_number<double>(key, value);
    else if (key == "theta_filter") embed.theta_filter = parse_number<double>(key, value);
    else if (key == "oversampling") embed.oversampling = parse_number<int>(key, value);
    else if (key == "power_iters") embed.power_iters = parse_number<int>(key, value);
    else if (key == "threshold") threshold = parse_number<double>(key, value);
    else if (key == "tile_size") tile_size = parse_number<std::size_t>(key, value);
    else if (key == "top_k") top_k = parse_number<std::size_t>(key, value);
    else if (key == "out_dir") out_dir = std::string(value);
    else if (key == "labels") {
        if (value.empty()) labels.reset();
        else labels = std::filesystem::path(std::string(value));
    } else if (key == "threads") threads = parse_number<unsigned>(key, value);
    else if (key == "sweep.thresholds")
        sweep_thresholds = parse_list<double>(value, [&](std::string_view v) { return parse_number<double>(key, v); });
    else if (key == "sweep.dims")
        sweep_dims = parse_list<int>(value, [&](std::string_view v) { return parse_number<int>(key, v); });
    else if (key == "sweep.features")
        sweep_features = parse_list<graph::FeatureSet>(value, [](std::string_view v) { return graph::parse_feature_set(v); });
    else
        throw Error("unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
    if (root.empty()) throw Error("config: root is not set");
    if (extension.empty()) throw Error("config: ext must not be empty");
    embed.validate();
    detect::SimilarityQuery q;
    q.threshold = threshold;
    q.tile_size = tile_size;
    q.validate();
    if (out_dir.empty()) throw Error("config: out_dir is not set");
    for (double t : sweep_thresholds)
        if (!(t > 0.0 && t <= 1.0)) throw Error("config: sweep threshold " + std::to_string(t) + " outside (0, 1]");
    for (int d : sweep_dims)
        if (d < 2) throw Error("config: sweep dim " + std::to_string(d) + " below 2");
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error("config line " + std::to_string(line_no) + ": expected key=value");
        base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read config " + path.string());
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_run_config(text, std::move(base));
}

graph::InfoMap extract_infos(const std::vector<corpus::CodeSample>& samples) {
    std::vector<lexis::IndividualInfo> infos(samples.size());
    parallel_for(0, samples.size(), 64, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            try {
                infos[i] = lexis::individual_info(samples[i].text);
            } catch (const std::exception& ex) {
                throw Error("sample " + samples[i].meta.id + ": " + ex.what());
            }
        }
    });
    graph::InfoMap out;
    for (std::size_t i = 0; i < samples.size(); ++i) out.emplace_hint(out.end(), samples[i].meta.id, std::move(infos[i]));
    return out;
}

RunReport run(const RunConfig& config) {
    config.validate();
    if (config.threads) set_max_threads(config.threads);

    RunReport report;
    StageClock stage(report);
    const auto& out = config.out_dir;
    const auto t0 = std::chrono::steady_clock::now();

    std::filesystem::create_directories(out);

    auto corp = stage("ingest", [&] {
        auto c = corpus::ingest_directory(config.root, {.mode = config.mode, .extension = config.extension});
        corpus::write_manifest(c.manifest, out / "manifest.jsonl");
        return c;
    });
    report.samples = corp.samples.size();
    report.loc = corp.manifest.total_loc;

    std::optional<eval::Scorer> scorer;
    if (config.labels) {
        stage("labels", [&] {
            std::set<std::string> known_ids;
            for (const auto& s : corp.samples) known_ids.insert(s.meta.id);
            scorer.emplace(eval::read_labels(*config.labels), &known_ids);
        });
    }

    const auto infos = stage("lexis", [&] { return extract_infos(corp.samples); });
    corp.samples.clear();
    corp.samples.shrink_to_fit();

    const auto g = stage("graph", [&] {
        auto gr = graph::build_graph(infos, config.features, config.weight_transform);
        graph::write_edge_list(gr, out / "graph.tsv");
        return gr;
    });
    report.nodes = g.node_count();
    report.edges = g.edges().size();

    auto vectors = stage("embed", [&] {
        auto m = embed::embed_graph(g, config.embed);
        embed::write_gemb(m, out / "vectors.gemb");
        round_to_float(m);
        return m;
    });

    report.pairs = stage("detect", [&] {
        detect::SimilarityQuery q;
        q.threshold = config.threshold;
        q.tile_size = config.tile_size;
        detect::CloneReportWriter writer(out / "clones.csv");
        std::size_t count = 0;
        if (config.top_k > 0) {
            q.scope = detect::Scope::top_k;
            q.top_k = config.top_k;
            for (const auto& p : detect::detect(vectors, q)) {
                writer.write(p.id_a, p.id_b, p.similarity);
                if (scorer) scorer->add(p.id_a, p.id_b);
                ++count;
            }
        } else {
            const auto block = detect::sample_block(vectors);
            count = detect::for_each_clone_pair(block, q, [&](const detect::SampleBlock& b, std::span<const detect::IndexedPair> pairs) {
                for (const auto& p : pairs) {
                    writer.write(b.ids[p.a], b.ids[p.b], p.similarity);
                    if (scorer) scorer->add(b.ids[p.a], b.ids[p.b]);
                }
            });
        }
        writer.close();
        return count;
    });

    if (scorer) {
        report.metrics = stage("eval", [&] {
            auto m = scorer->finish();
            eval::write_metrics(m, out / "metrics.json");
            return m;
        });
    }

    report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const char* name : {"manifest.jsonl", "graph.tsv", "vectors.gemb", "clones.csv", "metrics.json"}) {
        if (std::filesystem::exists(out / name)) report.output_digests[name] = to_hex(sha256_file(out / name));
    }
    write_text(out / "run_report.json", run_report_json(report) + "\n");
    log::info("run.done")
        .kv("samples", report.samples)
        .kv("loc", report.loc)
        .kv("edges", report.edges)
        .kv("pairs", report.pairs)
        .kv("seconds", report.total_seconds);
    return report;
}

std::string run_report_json(const RunReport& report) {
    nlohmann::ordered_json j;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : report.stages) j["stages"].push_back({{"stage", s.stage}, {"seconds", s.seconds}});
    j["total_seconds"] = report.total_seconds;
    j["samples"] = report.samples;
    j["loc"] = report.loc;
    j["nodes"] = report.nodes;
    j["edges"] = report.edges;
    j["pairs"] = report.pairs;
    j["outputs"] = report.output_digests;
    if (report.metrics) j["metrics"] = nlohmann::ordered_json::parse(eval::metrics_json(*report.metrics));
    return j.dump(2);
}

void sweep(const RunConfig& config, const std::filesystem::path& out_csv) {
    config.validate();
    if (config.sweep_thresholds.empty() || config.sweep_dims.empty() || config.sweep_features.empty())
        throw Error("sweep: empty grid");
    if (config.threads) set_max_threads(config.threads);

    RunReport scratch;
    StageClock stage(scratch);
    std::vector<eval::LabeledPair> labels;
    if (config.labels) labels = stage("labels", [&] { return eval::read_labels(*config.labels); });

    auto corp = stage("ingest", [&] {
        return corpus::ingest_directory(config.root, {.mode = config.mode, .extension = config.extension});
    });
    const auto infos = stage("lexis", [&] { return extract_infos(corp.samples); });
    std::set<std::string> known_ids;
    for (const auto& s : corp.samples) known_ids.insert(s.meta.id);

    // Row order inside a block: thresholds, then metrics; one column per dim.
    std::vector<std::string> metric_names{"pairs"};
    if (config.labels) {
        std::set<eval::CloneType> types;
        for (const auto& l : labels)
            if (l.type != eval::CloneType::NEG) types.insert(l.type);
        for (auto t : types) metric_names.push_back("recall_" + std::string(eval::to_string(t)));
        for (const char* m : {"precision", "recall", "f1"}) metric_names.emplace_back(m);
    }

    std::ostringstream csv;
    csv << "features,threshold,metric";
    for (int d : config.sweep_dims) csv << ",d" << d;
    csv << '\n';

    for (auto features : config.sweep_features) {
        const auto g = stage("graph", [&] { return graph::build_graph(infos, features, config.weight_transform); });
        // cells[threshold][metric][dim]
        std::vector<std::vector<std::vector<std::string>>> cells(
            config.sweep_thresholds.size(),
            std::vector<std::vector<std::string>>(metric_names.size(), std::vector<std::string>(config.sweep_dims.size())));
        for (std::size_t di = 0; di < config.sweep_dims.size(); ++di) {
            auto ecfg = config.embed;
            ecfg.dim = config.sweep_dims[di];
            auto m = stage("embed", [&] { return embed::embed_graph(g, ecfg); });
            round_to_float(m);
            const auto block = detect::sample_block(m);
            for (std::size_t ti = 0; ti < config.sweep_thresholds.size(); ++ti) {
                detect::SimilarityQuery q;
                q.threshold = config.sweep_thresholds[ti];
                q.tile_size = config.tile_size;
                std::optional<eval::Scorer> scorer;
                if (config.labels) scorer.emplace(labels, &known_ids);
                const auto count = stage("detect", [&] {
                    return detect::for_each_clone_pair(block, q, [&](const detect::SampleBlock& b, std::span<const detect::IndexedPair> pairs) {
                        if (!scorer) return;
                        for (const auto& p : pairs) scorer->add(b.ids[p.a], b.ids[p.b]);
                    });
                });
                auto& col = cells[ti];
                col[0][di] = std::to_string(count);
                if (!scorer) continue;
                const auto met = scorer->finish();
                std::size_t r = 1;
                for (const auto& [type, rec] : met.recall_by_type) {
                    while (r < metric_names.size() && metric_names[r] != "recall_" + std::string(eval::to_string(type))) ++r;
                    if (r < metric_names.size()) col[r][di] = std::to_string(rec);
                }
                const auto n = metric_names.size();
                col[n - 3][di] = met.precision ? std::to_string(*met.precision) : "";
                col[n - 2][di] = std::to_string(met.recall);
                col[n - 1][di] = std::to_string(met.f1);
            }
        }
        for (std::size_t ti = 0; ti < config.sweep_thresholds.size(); ++ti) {
            for (std::size_t mi = 0; mi < metric_names.size(); ++mi) {
                csv << graph::to_string(features) << ',' << config.sweep_thresholds[ti] << ',' << metric_names[mi];
                for (const auto& v : cells[ti][mi]) csv << ',' << v;
                csv << '\n';
            }
        }
    }
    if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
    write_text(out_csv, csv.str());
    log::info("sweep.done").kv("out", out_csv.string());
}

}  // namespace clonegraph::pipeline
