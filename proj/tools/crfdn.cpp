// crfdn: config-driven command-line front end for the similarity-graph
// denoising and diffusion re-ranking library. Every command is a pure
// function of (config, input files); each run writes its artifacts plus a
// manifest into paths.output.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crfdn/ccrf.hpp"
#include "crfdn/config.hpp"
#include "crfdn/descriptors.hpp"
#include "crfdn/diffusion.hpp"
#include "crfdn/eval.hpp"
#include "crfdn/graph.hpp"
#include "crfdn/threads.hpp"

namespace fs = std::filesystem;
using namespace crfdn;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output) / name).string();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void finish(const RunConfig& cfg, const std::string& command,
            const std::vector<std::string>& input_files,
            const std::vector<std::string>& output_files, const std::vector<std::string>& stats) {
    std::vector<std::pair<std::string, std::string>> ins, outs;
    for (const auto& p : input_files) ins.emplace_back(p, file_checksum(p));
    for (const auto& p : output_files) outs.emplace_back(p, file_checksum(p));
    write_manifest(out_path(cfg, command + ".manifest"), command, cfg, ins, outs, stats);
}

// ---------------------------------------------------------------- build-graph

int cmd_build_graph(const RunConfig& cfg) {
    Timer timer;
    const DescriptorSet X = load_descriptors(cfg.descriptors, cfg.normalize);
    if (cfg.k >= X.n)
        throw std::invalid_argument("graph.k = " + std::to_string(cfg.k) +
                                    " must be smaller than the database size " +
                                    std::to_string(X.n));
    const KnnLists knn = build_knn(X, cfg.k, cfg.gamma, cfg.threads);
    const SparseAffinity A = reciprocity_affinity(knn);

    fs::create_directories(cfg.output);
    const std::string graph_file = out_path(cfg, "graph.gra1");
    save_affinity(graph_file, A);
    finish(cfg, "build-graph", {cfg.descriptors}, {graph_file},
           {"n " + std::to_string(X.n), "dim " + std::to_string(X.dim),
            "nnz " + std::to_string(A.nnz())});
    std::cout << "build-graph: n=" << X.n << " nnz=" << A.nnz()
              << " elapsed=" << fmt("%.3f", timer.seconds()) << "s\n";
    return 0;
}

// -------------------------------------------------------------------- denoise

int cmd_denoise(const RunConfig& cfg) {
    Timer timer;
    const DescriptorSet X = load_descriptors(cfg.descriptors, cfg.normalize);
    const CcrfParams params = cfg.ccrf_params();
    const SparseAffinity A = denoise_database(X, params);

    double total_weight = 0.0;
    for (const auto& [ij, w] : A.edges()) total_weight += w;

    fs::create_directories(cfg.output);
    const std::string graph_file = out_path(cfg, "denoised.gra1");
    save_affinity(graph_file, A);
    finish(cfg, "denoise", {cfg.descriptors}, {graph_file},
           {"n " + std::to_string(X.n), "dim " + std::to_string(X.dim),
            "nnz " + std::to_string(A.nnz()), "total_weight " + fmt("%.9g", total_weight)});
    std::cout << "denoise: n=" << X.n << " nnz=" << A.nnz()
              << " elapsed=" << fmt("%.3f", timer.seconds()) << "s\n";
    return 0;
}

// --------------------------------------------------------------------- rerank

int cmd_rerank(const RunConfig& cfg) {
    Timer timer;
    const DescriptorSet X = load_descriptors(cfg.descriptors, cfg.normalize);
    const DescriptorSet Q = load_descriptors(cfg.queries, cfg.normalize);
    if (Q.dim != X.dim)
        throw std::invalid_argument("query dimension " + std::to_string(Q.dim) +
                                    " does not match database dimension " + std::to_string(X.dim));

    const DiffusionParams params = cfg.diffusion_params();
    std::vector<RetrievalRanking> rankings(static_cast<size_t>(Q.n));
    std::vector<int> ids(static_cast<size_t>(Q.n));
    for (int64_t q = 0; q < Q.n; ++q) ids[static_cast<size_t>(q)] = static_cast<int>(q);

    if (cfg.method == RerankMethod::diffusion) {
        const SparseAffinity A = load_affinity(cfg.affinity);
        if (A.n != X.n)
            throw std::invalid_argument("affinity size " + std::to_string(A.n) +
                                        " does not match database size " + std::to_string(X.n));
        const NormalizedAffinity S = symmetric_normalize(A);
        OfflineIndex index;
        const OfflineIndex* index_ptr = nullptr;
        if (params.mode == DiffusionMode::offline) {
            index = offline_precompute(S, params.rho, params.trunc, params.tol, params.max_iter,
                                       params.threads);
            index_ptr = &index;
        }
        parallel_for(Q.n, params.threads, [&](int64_t q) {
            rankings[static_cast<size_t>(q)] =
                rerank_query(Q, q, X, S, params, cfg.k, cfg.gamma, index_ptr);
        });
    } else if (cfg.method == RerankMethod::nns) {
        parallel_for(Q.n, params.threads, [&](int64_t q) {
            rankings[static_cast<size_t>(q)] = nns_baseline(Q, q, X, cfg.gamma);
        });
    } else {
        parallel_for(Q.n, params.threads, [&](int64_t q) {
            rankings[static_cast<size_t>(q)] = aqe_baseline(Q, q, X, cfg.nqe, cfg.gamma);
        });
    }

    fs::create_directories(cfg.output);
    const std::string rankings_file = out_path(cfg, "rankings.txt");
    save_rankings(rankings_file, ids, rankings);
    std::vector<std::string> inputs = {cfg.descriptors, cfg.queries};
    if (cfg.method == RerankMethod::diffusion) inputs.push_back(cfg.affinity);
    finish(cfg, "rerank", inputs, {rankings_file},
           {"queries " + std::to_string(Q.n), "items " + std::to_string(X.n)});
    std::cout << "rerank: queries=" << Q.n << " items=" << X.n
              << " elapsed=" << fmt("%.3f", timer.seconds()) << "s\n";
    return 0;
}

// ----------------------------------------------------------------------- eval

int cmd_eval(const RunConfig& cfg) {
    Timer timer;
    const auto rankings = load_rankings(cfg.rankings);
    const Protocol protocol = load_protocol(cfg.protocol);
    const double map = mean_ap(rankings, protocol, cfg.protocol_mode);

    int64_t used = 0;
    for (const auto& gt : protocol.queries)
        if (!effective_sets(gt, cfg.protocol_mode).positives.empty()) ++used;

    const char* mode_name = cfg.protocol_mode == ProtocolMode::easy     ? "easy"
                            : cfg.protocol_mode == ProtocolMode::medium ? "medium"
                                                                        : "hard";
    fs::create_directories(cfg.output);
    const std::string report_file = out_path(cfg, "eval.txt");
    {
        std::ofstream out(report_file, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + report_file);
        out << "mode " << mode_name << "\n";
        out << "queries " << protocol.queries.size() << "\n";
        out << "queries_evaluated " << used << "\n";
        out << "mAP " << fmt("%.4f", map) << "\n";
    }
    finish(cfg, "eval", {cfg.rankings, cfg.protocol}, {report_file},
           {"mAP " + fmt("%.4f", map), "queries_evaluated " + std::to_string(used)});
    std::cout << "eval: mode=" << mode_name << " mAP=" << fmt("%.4f", map)
              << " elapsed=" << fmt("%.3f", timer.seconds()) << "s\n";
    return 0;
}

// ---------------------------------------------------------------------- sweep

int cmd_sweep(const RunConfig& cfg) {
    Timer timer;
    const DescriptorSet X = load_descriptors(cfg.descriptors, cfg.normalize);
    const DescriptorSet Q = load_descriptors(cfg.queries, cfg.normalize);
    const Protocol protocol = load_protocol(cfg.protocol);

    SweepConfig sc;
    sc.axis = cfg.axis;
    sc.values = cfg.sweep_values;
    sc.graph_k = cfg.k;
    sc.gamma = cfg.gamma;
    sc.ccrf = cfg.ccrf_params();
    sc.diffusion = cfg.diffusion_params();
    // an unset query_k tracks the swept k per point rather than graph.k
    sc.diffusion.query_k = cfg.query_k;
    sc.mode = cfg.protocol_mode;
    const std::vector<SweepPoint> points = sweep(sc, X, Q, protocol);

    const std::string axis_name = cfg.axis == SweepAxis::k ? "k" : "clique_size";
    fs::create_directories(cfg.output);
    const std::string sweep_file = out_path(cfg, "sweep_" + axis_name + ".txt");
    {
        std::ofstream out(sweep_file, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + sweep_file);
        out << "# " << axis_name << " map_baseline map_denoised status\n";
        for (const auto& pt : points) {
            out << static_cast<int>(pt.value);
            if (pt.ok)
                out << " " << fmt("%.6f", pt.map_baseline) << " " << fmt("%.6f", pt.map_denoised)
                    << " ok\n";
            else
                out << " - - error: " << pt.error << "\n";
        }
    }

    int64_t ok = 0;
    for (const auto& pt : points) ok += pt.ok ? 1 : 0;
    finish(cfg, "sweep", {cfg.descriptors, cfg.queries, cfg.protocol}, {sweep_file},
           {"points " + std::to_string(points.size()), "ok " + std::to_string(ok)});
    std::cout << "sweep: axis=" << axis_name << " points=" << points.size() << " ok=" << ok
              << " elapsed=" << fmt("%.3f", timer.seconds()) << "s\n";
    return 0;
}

// ------------------------------------------------------------------ gen-synth

int cmd_gen_synth(const RunConfig& cfg) {
    Timer timer;
    const SynthData data = synth_manifolds(cfg.n_per_manifold, cfg.noise_sigma, cfg.shape,
                                           cfg.seed, cfg.shift);
    const Protocol protocol = synth_protocol(data.labels);

    fs::create_directories(cfg.output);
    const std::string desc_file = out_path(cfg, "descriptors.bin");
    const std::string query_file = out_path(cfg, "queries.bin");
    const std::string protocol_file = out_path(cfg, "protocol.json");
    const std::string labels_file = out_path(cfg, "labels.txt");
    save_descriptors(desc_file, data.X);
    save_descriptors(query_file, data.X);  // every database point doubles as a query
    save_protocol(protocol_file, protocol);
    {
        std::ofstream out(labels_file, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + labels_file);
        for (int label : data.labels) out << label << "\n";
    }
    finish(cfg, "gen-synth", {}, {desc_file, query_file, protocol_file, labels_file},
           {"n " + std::to_string(data.X.n), "dim " + std::to_string(data.X.dim)});
    std::cout << "gen-synth: n=" << data.X.n << " dim=" << data.X.dim
              << " elapsed=" << fmt("%.3f", timer.seconds()) << "s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"similarity-graph denoising and diffusion re-ranking toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"build-graph", "Build the reciprocity-checked k-NN affinity graph"},
        {"denoise", "Denoise the database graph by clique-wise C-CRF inference"},
        {"rerank", "Re-rank queries by diffusion (or nns/aqe baselines)"},
        {"eval", "Score a rankings file against a ground-truth protocol"},
        {"sweep", "Sweep k or clique size, comparing baseline and denoised mAP"},
        {"gen-synth", "Generate the two-manifold synthetic benchmark"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "Config file (INI-style sections)");
        sub->add_option("--set", overrides, "Override, e.g. --set ccrf.beta=0.2");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        validate_config(cfg, command);

        if (command == "build-graph") return cmd_build_graph(cfg);
        if (command == "denoise") return cmd_denoise(cfg);
        if (command == "rerank") return cmd_rerank(cfg);
        if (command == "eval") return cmd_eval(cfg);
        if (command == "sweep") return cmd_sweep(cfg);
        return cmd_gen_synth(cfg);
    } catch (const std::exception& e) {
        std::cerr << "crfdn " << command << ": error: " << e.what() << "\n";
        return 1;
    }
}
