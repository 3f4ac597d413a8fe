#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crfdn/descriptors.hpp"
#include "crfdn/graph.hpp"

namespace crfdn {

enum class DiffusionMode { online, offline };

struct DiffusionParams {
    double rho = 0.99;     // random-walk restart weight, in (0, 1)
    double tol = 1e-6;     // infinity-norm residual (iterative) / CG tolerance
    int max_iter = 1000;
    DiffusionMode mode = DiffusionMode::online;
    int trunc = 0;         // offline kernel truncation; 0 means full columns
    int query_k = 0;       // query seeding neighbor count; 0 means the graph k
    int threads = 1;
};

struct DiffusionState {
    std::vector<double> v;
    int iteration = 0;
    double residual = 0.0;
    std::vector<double> residuals;  // infinity-norm step sizes, one per iteration
};

struct RetrievalRanking {
    std::vector<int> indices;     // descending score, ties by ascending index
    std::vector<double> scores;
};

// Offline-diffusion index: per database item the top-trunc entries of the
// diffusion kernel column f_i solving (I - rho S) f_i = (1 - rho) e_i.
struct OfflineIndex {
    int64_t n = 0;
    int trunc = 0;
    double rho = 0.99;
    std::vector<std::vector<std::pair<int, double>>> columns;  // ascending index
};

// Query seeding: v0_i = s(x_i, y) for the query's k most similar items, else 0.
std::vector<double> query_init(const DescriptorSet& y, int64_t query_row,
                               const DescriptorSet& X, int k, double gamma);

// Fixed-point iteration v <- rho S v + (1 - rho) v0 until the infinity-norm
// step drops to tol. Throws on max_iter exhaustion, carrying the last
// residual.
DiffusionState diffuse_iterative(const NormalizedAffinity& S, const std::vector<double>& v0,
                                 const DiffusionParams& params);

// Closed form: solve (I - rho S) v = (1 - rho) v0 by conjugate gradient.
std::vector<double> diffuse_closed_form(const NormalizedAffinity& S,
                                        const std::vector<double>& v0, double rho,
                                        double solver_tol, int max_iter = 1000);

OfflineIndex offline_precompute(const NormalizedAffinity& S, double rho, int trunc,
                                double solver_tol, int max_iter = 1000, int threads = 1);

// Query-time offline ranking state: r = sum_i v0_i f_i over stored columns.
std::vector<double> offline_apply(const OfflineIndex& index, const std::vector<double>& v0);

RetrievalRanking rank_scores(const std::vector<double>& scores);

// Full re-rank of one query row against a prebuilt normalized graph.
RetrievalRanking rerank_query(const DescriptorSet& queries, int64_t query_row,
                              const DescriptorSet& X, const NormalizedAffinity& S,
                              const DiffusionParams& params, int graph_k, double gamma,
                              const OfflineIndex* offline = nullptr);

// Ranking export: lines "query_id item_id rank score", scores with 6 decimals.
void save_rankings(const std::string& path, const std::vector<int>& query_ids,
                   const std::vector<RetrievalRanking>& rankings);
// Loads rankings grouped by query id, preserving per-query rank order.
std::vector<std::pair<int, RetrievalRanking>> load_rankings(const std::string& path);

}  // namespace crfdn
