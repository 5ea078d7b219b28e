// clonegraph: every pipeline stage as a subcommand, plus `run` and `sweep`.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>

#include "clonegraph/corpus.hpp"
#include "clonegraph/detect.hpp"
#include "clonegraph/embed.hpp"
#include "clonegraph/error.hpp"
#include "clonegraph/eval.hpp"
#include "clonegraph/graph.hpp"
#include "clonegraph/lexis.hpp"
#include "clonegraph/log.hpp"
#include "clonegraph/parallel.hpp"
#include "clonegraph/pipeline.hpp"

namespace cg = clonegraph;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw cg::Error("cannot read " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

cg::graph::InfoMap infos_from_manifest(const std::string& manifest_path) {
    const auto manifest = cg::corpus::read_manifest(manifest_path);
    return cg::pipeline::extract_infos(cg::corpus::load_samples(manifest));
}

void write_baseline(const std::vector<cg::detect::OverlapBaselineResult>& rows, const std::string& out) {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw cg::Error("cannot write " + out);
    f << "id_a,id_b,shared,t_max,ratio,is_clone\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6f", r.ratio);
        f << r.id_a << ',' << r.id_b << ',' << r.shared << ',' << r.t_max << ',' << buf << ','
          << (r.is_clone ? 1 : 0) << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-embedding code clone detector"};
    app.require_subcommand(1);

    unsigned threads = 0;
    std::string log_level = "info";
    app.add_option("--threads", threads, "Worker cap for every stage (0 = all cores)");
    app.add_option("--log-level", log_level, "debug|info|warn|error|off");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Walk a source tree and write a sample manifest");
    std::string ingest_root, ingest_mode = "split", ingest_out, ingest_ext = ".java";
    ingest->add_option("--root", ingest_root)->required();
    ingest->add_option("--mode", ingest_mode, "one-per-file|split");
    ingest->add_option("--out", ingest_out)->required();
    ingest->add_option("--ext", ingest_ext);

    // lexis
    auto* lexis = app.add_subcommand("lexis", "Dump the keyword and side-information counts of one file");
    std::string lexis_dump;
    lexis->add_option("--dump", lexis_dump)->required();

    // graph
    auto* graph = app.add_subcommand("graph", "Build the sample graph from a manifest");
    std::string graph_manifest, graph_features = "both", graph_out, graph_weights = "none";
    graph->add_option("--manifest", graph_manifest)->required();
    graph->add_option("--features", graph_features, "keywords|sideinfo|both");
    graph->add_option("--weights", graph_weights, "none|log1p");
    graph->add_option("--out", graph_out)->required();

    // embed
    auto* embed = app.add_subcommand("embed", "Embed every graph node");
    std::string embed_graph, embed_out;
    cg::embed::EmbedConfig ecfg;
    bool embed_text = false;
    embed->add_option("--graph", embed_graph)->required();
    embed->add_option("--dim", ecfg.dim);
    embed->add_option("--seed", ecfg.seed);
    embed->add_option("--order", ecfg.chebyshev_order, "Chebyshev expansion order");
    embed->add_option("--mu", ecfg.mu);
    embed->add_option("--theta", ecfg.theta_filter, "Band-pass filter width");
    embed->add_option("--oversampling", ecfg.oversampling);
    embed->add_option("--power-iters", ecfg.power_iters);
    embed->add_flag("--text", embed_text, "Write TSV instead of GEMB");
    embed->add_option("--out", embed_out)->required();

    // detect
    auto* detect = app.add_subcommand("detect", "Report sample pairs above a cosine threshold");
    std::string detect_vectors, detect_pairs, detect_out;
    cg::detect::SimilarityQuery query;
    detect->add_option("--vectors", detect_vectors)->required();
    detect->add_option("--threshold", query.threshold);
    auto* pairs_opt = detect->add_option("--pairs", detect_pairs, "Only score the listed pairs");
    detect->add_option("--topk", query.top_k, "Nearest k neighbours per sample")->excludes(pairs_opt);
    detect->add_option("--tile", query.tile_size);
    detect->add_option("--out", detect_out)->required();

    // combine
    auto* combine = app.add_subcommand("combine", "Fuse global vectors with individual vectors");
    std::string comb_global, comb_individual, comb_mode = "sum", comb_out;
    bool comb_text = false;
    combine->add_option("--global", comb_global)->required();
    combine->add_option("--individual", comb_individual)->required();
    combine->add_option("--mode", comb_mode, "sum|concat");
    combine->add_flag("--text", comb_text);
    combine->add_option("--out", comb_out)->required();

    // baseline
    auto* baseline = app.add_subcommand("baseline", "Token-overlap baseline over listed pairs");
    std::string base_manifest, base_pairs, base_out;
    double base_theta = 0.7;
    baseline->add_option("--manifest", base_manifest)->required();
    baseline->add_option("--theta", base_theta);
    baseline->add_option("--pairs", base_pairs)->required();
    baseline->add_option("--out", base_out)->required();

    // eval
    auto* evalc = app.add_subcommand("eval", "Score a clone report against labels");
    std::string eval_report, eval_labels, eval_out, eval_manifest;
    evalc->add_option("--report", eval_report)->required();
    evalc->add_option("--labels", eval_labels)->required();
    evalc->add_option("--manifest", eval_manifest, "Reject labels naming unknown samples");
    evalc->add_option("--out", eval_out)->required();

    // audit
    auto* audit = app.add_subcommand("audit", "Export a seeded sample of reported pairs");
    std::string audit_report, audit_out, audit_manifest;
    std::size_t audit_k = 400;
    std::uint64_t audit_seed = 7;
    audit->add_option("--report", audit_report)->required();
    audit->add_option("-k", audit_k);
    audit->add_option("--seed", audit_seed);
    audit->add_option("--manifest", audit_manifest, "Attach source paths and line spans");
    audit->add_option("--out", audit_out)->required();

    // run / sweep share the config overrides
    auto* run = app.add_subcommand("run", "ingest -> lexis -> graph -> embed -> detect (-> eval)");
    auto* sweepc = app.add_subcommand("sweep", "Metrics over a features x dims x thresholds grid");
    std::string config_path, sweep_out;
    std::map<std::string, std::string> overrides;
    std::vector<std::string> sets;
    const std::vector<std::pair<std::string, std::string>> keys = {
        {"--root", "root"},         {"--mode", "mode"},       {"--ext", "ext"},
        {"--features", "features"}, {"--dim", "dim"},         {"--seed", "seed"},
        {"--threshold", "threshold"}, {"--tile", "tile_size"}, {"--topk", "top_k"},
        {"--out-dir", "out_dir"},   {"--labels", "labels"},
    };
    for (auto* sub : {run, sweepc}) {
        sub->add_option("--config", config_path, "Flat key=value file");
        for (const auto& [flag, key] : keys) {
            sub->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides[key] = v; });
        }
        sub->add_option("--set", sets, "Override any config key (key=value)");
    }
    sweepc->add_option("--out", sweep_out)->required();

    CLI11_PARSE(app, argc, argv);

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        cg::log::set_level(cg::log::parse_level(log_level));
        cg::set_max_threads(threads);

        if (*ingest) {
            const auto c = cg::corpus::ingest_directory(
                ingest_root, {.mode = cg::corpus::parse_ingest_mode(ingest_mode), .extension = ingest_ext});
            cg::corpus::write_manifest(c.manifest, ingest_out);
        } else if (*lexis) {
            std::cout << cg::lexis::to_json(cg::lexis::individual_info(read_file(lexis_dump))) << '\n';
        } else if (*graph) {
            const auto g = cg::graph::build_graph(infos_from_manifest(graph_manifest),
                                                  cg::graph::parse_feature_set(graph_features),
                                                  cg::graph::parse_weight_transform(graph_weights));
            cg::graph::write_edge_list(g, graph_out);
        } else if (*embed) {
            const auto m = cg::embed::embed_graph(cg::graph::read_edge_list(embed_graph), ecfg);
            if (embed_text) cg::embed::write_tsv(m, embed_out);
            else cg::embed::write_gemb(m, embed_out);
        } else if (*detect) {
            if (!detect_pairs.empty()) {
                query.scope = cg::detect::Scope::pairs_from_file;
                query.pairs = cg::detect::read_pair_list(detect_pairs);
            } else if (query.top_k > 0) {
                query.scope = cg::detect::Scope::top_k;
            }
            cg::detect::write_clone_report(cg::detect::detect(cg::embed::read_vectors(detect_vectors), query),
                                           detect_out);
        } else if (*combine) {
            const auto m = cg::detect::combine_vectors(cg::embed::read_vectors(comb_global),
                                                       cg::embed::read_vectors(comb_individual),
                                                       cg::detect::parse_combine_mode(comb_mode));
            if (comb_text) cg::embed::write_tsv(m, comb_out);
            else cg::embed::write_gemb(m, comb_out);
        } else if (*baseline) {
            const auto manifest = cg::corpus::read_manifest(base_manifest);
            const auto samples = cg::corpus::load_samples(manifest);
            std::unordered_map<std::string, cg::lexis::TokenStream> tokens;
            for (const auto& s : samples) tokens.emplace(s.meta.id, cg::lexis::tokenize(s.text));
            std::vector<cg::detect::OverlapBaselineResult> rows;
            for (const auto& [a, b] : cg::detect::read_pair_list(base_pairs)) {
                const auto ia = tokens.find(a), ib = tokens.find(b);
                if (ia == tokens.end() || ib == tokens.end())
                    throw cg::Error("pair (" + a + ", " + b + ") names a sample missing from the manifest");
                auto r = cg::detect::overlap_baseline(ia->second, ib->second, base_theta);
                r.id_a = a;
                r.id_b = b;
                rows.push_back(std::move(r));
            }
            write_baseline(rows, base_out);
        } else if (*evalc) {
            std::set<std::string> known;
            if (!eval_manifest.empty())
                for (const auto& s : cg::corpus::read_manifest(eval_manifest).samples) known.insert(s.id);
            const auto m = cg::eval::score(cg::detect::read_clone_report(eval_report),
                                           cg::eval::read_labels(eval_labels), eval_manifest.empty() ? nullptr : &known);
            cg::eval::write_metrics(m, eval_out);
        } else if (*audit) {
            std::optional<cg::corpus::CorpusManifest> manifest;
            if (!audit_manifest.empty()) manifest = cg::corpus::read_manifest(audit_manifest);
            cg::eval::export_audit_sample(cg::detect::read_clone_report(audit_report), audit_k, audit_seed,
                                          manifest ? &*manifest : nullptr, audit_out);
        } else {
            stage = "config";
            cg::pipeline::RunConfig cfg;
            if (!config_path.empty()) cfg = cg::pipeline::load_run_config(config_path);
            for (const auto& [k, v] : overrides) cfg.set(k, v);
            for (const auto& kv : sets) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw cg::Error("--set expects key=value, got '" + kv + "'");
                cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (threads) cfg.threads = threads;
            cfg.validate();
            stage = (*run) ? "run" : "sweep";
            if (*run) cg::pipeline::run(cfg);
            else cg::pipeline::sweep(cfg, sweep_out);
        }
    } catch (const cg::pipeline::StageError& e) {
        cg::log::error("failed").kv("stage", e.stage()).kv("message", e.what());
        std::cerr << "clonegraph: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        cg::log::error("failed").kv("stage", stage).kv("message", e.what());
        std::cerr << "clonegraph: stage " << stage << " failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
