#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crfdn/descriptors.hpp"
#include "crfdn/graph.hpp"

namespace crfdn {

// Complete subgraph over a pivot's L nearest neighbors. The pivot itself is
// excluded from the member list; its similarities to the members form the
// observation vector s_p.
struct Clique {
    int pivot = -1;
    std::vector<int> members;        // L global indices, descending similarity
    std::vector<double> sim_matrix;  // L x L row-major, symmetric, zero diagonal
    std::vector<double> pivot_sims;  // s_p, aligned with members

    int64_t size() const { return static_cast<int64_t>(members.size()); }
    double sim(int64_t i, int64_t j) const { return sim_matrix[i * size() + j]; }
};

enum class WeightTerms { ed, sd, both };

enum class SolverKind { cg, direct };

enum class ReselectOrder { pre, post };

struct CcrfParams {
    double alpha = 1.0;
    double beta = 0.1;
    double sigma_d = 0.0;  // required, data-scale dependent
    double sigma_r = 0.0;  // required, data-scale dependent
    double gamma = 3.0;
    int L = 1000;
    int k_out = 10;
    SolverKind solver = SolverKind::cg;
    double tol = 1e-6;
    int max_iter = 0;  // 0 -> 10 * L
    WeightTerms weight_terms = WeightTerms::both;
    ReselectOrder reselect = ReselectOrder::pre;
    int threads = 1;
};

// Precision system of the Gaussian-form CRF over one clique:
//   Sigma_p^{-1} = 2 (alpha I + beta D_p - beta W_p),  b_p = 2 alpha s_p.
// W is kept dense; the precision is applied matrix-free for CG and
// materialized for the direct path.
struct CcrfSystem {
    int64_t L = 0;
    double alpha = 1.0;
    double beta = 0.1;
    std::vector<double> weights;  // L x L, zero diagonal
    std::vector<double> degree;   // row sums of weights
    std::vector<double> rhs;      // 2 alpha s_p

    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> precision_dense() const;
};

// Members are the pivot's top-L neighbors taken from knn lists computed with
// k >= L; the dense intra-clique similarity matrix is fully materialized.
Clique build_clique(const DescriptorSet& X, const KnnLists& knn_full, int pivot,
                    int L, double gamma);

// Similarity-based distribution of member i: its intra-clique similarity row
// (self entry zero) scaled to unit Euclidean norm, then softmax over all L
// positions. An all-zero row degenerates to the uniform PMF.
std::vector<double> sbd_pmf(const std::vector<double>& sim_matrix, int64_t L, int64_t i);

// J-divergence (symmetrized KL, natural log) of two strictly positive PMFs of
// equal length.
double j_divergence(const std::vector<double>& p, const std::vector<double>& q);

// Weight kernel over all member pairs:
//   w_ij = exp{ -|f_i - f_j|^2 / (2 sigma_d^2) - D_J(Q_i||Q_j)^2 / (2 sigma_r^2) }
// with zero diagonal. The terms switch drops either exponent for ablations.
std::vector<double> weight_matrix(const DescriptorSet& X, const Clique& clique,
                                  double sigma_d, double sigma_r,
                                  WeightTerms terms = WeightTerms::both);

CcrfSystem assemble_system(const Clique& clique, const std::vector<double>& W,
                           double alpha, double beta);

// MAP inference: solve Sigma_p^{-1} y = b_p. CG starts from s_p, so beta = 0
// returns the observations bitwise; the direct path is a dense Cholesky.
std::vector<double> infer(const CcrfSystem& system, SolverKind method, double tol,
                          int max_iter);

// Full database pass: per pivot build_clique + weight_matrix + assemble_system
// + infer, keep the top-k_out members by denoised value (ties by member slot),
// then symmetrize a_pi = (y*_{p,i} + y*_{i,p}) / 2 with an absent direction
// contributing zero. With reselect = post the per-node top-k_out cut is applied
// to the symmetrized matrix instead, keeping the union of selections.
SparseAffinity denoise_database(const DescriptorSet& X, const CcrfParams& params);

// Same pass against precomputed knn lists (k >= L), reused by sweeps.
SparseAffinity denoise_database(const DescriptorSet& X, const KnnLists& knn_full,
                                const CcrfParams& params);

}  // namespace crfdn
