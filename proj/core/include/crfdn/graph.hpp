#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crfdn/descriptors.hpp"

namespace crfdn {

// Per item: the k most similar other items, descending similarity, ties broken
// by ascending index. Self is never listed (zero self-similarity).
struct KnnLists {
    int k = 0;
    std::vector<std::vector<int>> neighbors;
    std::vector<std::vector<double>> sims;

    int64_t n() const { return static_cast<int64_t>(neighbors.size()); }
};

// Symmetric nonnegative sparse matrix with zero diagonal. Both directions of
// every edge are stored in per-row adjacency sorted by neighbor index; zero
// weights are dropped at insertion.
struct SparseAffinity {
    int64_t n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;

    explicit SparseAffinity(int64_t n_ = 0) : n(n_), rows(static_cast<size_t>(n_)) {}

    // number of undirected edges
    int64_t nnz() const;
    double get(int i, int j) const;
    // canonical (i < j, ascending) edge list
    std::vector<std::pair<std::pair<int, int>, double>> edges() const;
};

struct NormalizedAffinity {
    int64_t n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;  // S = D^-1/2 A D^-1/2
    std::vector<double> degree;                             // row sums of A

    // y = S x, fixed per-row accumulation order
    void matvec(const std::vector<double>& x, std::vector<double>& y) const;
};

// Exhaustive exact kNN under pairwise_similarity. 1 <= k <= N-1.
KnnLists build_knn(const DescriptorSet& X, int k, double gamma, int threads = 1);

// Reciprocity check: a_ij = s(x_i, x_j) iff i in NN_k(j) and j in NN_k(i);
// zero-similarity pairs are dropped.
SparseAffinity reciprocity_affinity(const KnnLists& knn);

// S = D^-1/2 A D^-1/2 with zero-degree rows mapped to zero rows.
NormalizedAffinity symmetric_normalize(const SparseAffinity& A);

// GRA1 text format: header "GRA1 <n> <nnz>", then nnz lines "i j w" with
// i < j, 0-based, w printed with 9 significant digits.
void save_affinity(const std::string& path, const SparseAffinity& A);
SparseAffinity load_affinity(const std::string& path);

}  // namespace crfdn
