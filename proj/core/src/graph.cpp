#include "crfdn/graph.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "crfdn/threads.hpp"

namespace crfdn {

int64_t SparseAffinity::nnz() const {
    int64_t directed = 0;
    for (const auto& row : rows) directed += static_cast<int64_t>(row.size());
    return directed / 2;
}

double SparseAffinity::get(int i, int j) const {
    const auto& row = rows[static_cast<size_t>(i)];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const std::pair<int, double>& e, int v) { return e.first < v; });
    return (it != row.end() && it->first == j) ? it->second : 0.0;
}

std::vector<std::pair<std::pair<int, int>, double>> SparseAffinity::edges() const {
    std::vector<std::pair<std::pair<int, int>, double>> out;
    out.reserve(static_cast<size_t>(nnz()));
    for (int i = 0; i < n; ++i)
        for (const auto& [j, w] : rows[static_cast<size_t>(i)])
            if (i < j) out.push_back({{i, j}, w});
    return out;
}

void NormalizedAffinity::matvec(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(static_cast<size_t>(n), 0.0);
    for (int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const auto& [j, w] : rows[static_cast<size_t>(i)]) acc += w * x[static_cast<size_t>(j)];
        y[static_cast<size_t>(i)] = acc;
    }
}

KnnLists build_knn(const DescriptorSet& X, int k, double gamma, int threads) {
    if (k < 1 || k > X.n - 1)
        throw std::invalid_argument("build_knn: k must satisfy 1 <= k <= N-1, got k=" +
                                    std::to_string(k) + " with N=" + std::to_string(X.n));
    KnnLists out;
    out.k = k;
    out.neighbors.assign(static_cast<size_t>(X.n), {});
    out.sims.assign(static_cast<size_t>(X.n), {});

    parallel_for(X.n, threads, [&](int64_t i) {
        std::vector<std::pair<double, int>> cand;
        cand.reserve(static_cast<size_t>(X.n - 1));
        for (int64_t j = 0; j < X.n; ++j) {
            if (j == i) continue;  // zero self-similarity excludes self
            cand.emplace_back(pairwise_similarity(X, i, X, j, gamma), static_cast<int>(j));
        }
        const auto better = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        };
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), better);
        auto& nb = out.neighbors[static_cast<size_t>(i)];
        auto& sm = out.sims[static_cast<size_t>(i)];
        nb.resize(static_cast<size_t>(k));
        sm.resize(static_cast<size_t>(k));
        for (int t = 0; t < k; ++t) {
            nb[static_cast<size_t>(t)] = cand[static_cast<size_t>(t)].second;
            sm[static_cast<size_t>(t)] = cand[static_cast<size_t>(t)].first;
        }
    });
    return out;
}

SparseAffinity reciprocity_affinity(const KnnLists& knn) {
    const int64_t n = knn.n();
    // membership lookup with the stored similarity
    std::vector<std::vector<std::pair<int, double>>> member(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const auto& nb = knn.neighbors[static_cast<size_t>(i)];
        const auto& sm = knn.sims[static_cast<size_t>(i)];
        auto& mi = member[static_cast<size_t>(i)];
        mi.reserve(nb.size());
        for (size_t t = 0; t < nb.size(); ++t) mi.emplace_back(nb[t], sm[t]);
        std::sort(mi.begin(), mi.end());
    }
    const auto find = [&](int i, int j) -> const double* {
        const auto& mi = member[static_cast<size_t>(i)];
        auto it = std::lower_bound(mi.begin(), mi.end(), std::make_pair(j, -1.0));
        return (it != mi.end() && it->first == j) ? &it->second : nullptr;
    };

    SparseAffinity A(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& [j, w] : member[static_cast<size_t>(i)]) {
            if (j <= i) continue;
            if (w <= 0.0) continue;
            if (find(j, i) == nullptr) continue;  // reciprocity check
            A.rows[static_cast<size_t>(i)].emplace_back(j, w);
            A.rows[static_cast<size_t>(j)].emplace_back(i, w);
        }
    }
    for (auto& row : A.rows) std::sort(row.begin(), row.end());
    return A;
}

NormalizedAffinity symmetric_normalize(const SparseAffinity& A) {
    NormalizedAffinity S;
    S.n = A.n;
    S.rows.assign(static_cast<size_t>(A.n), {});
    S.degree.assign(static_cast<size_t>(A.n), 0.0);
    for (int64_t i = 0; i < A.n; ++i) {
        double d = 0.0;
        for (const auto& [j, w] : A.rows[static_cast<size_t>(i)]) d += w;
        S.degree[static_cast<size_t>(i)] = d;
    }
    std::vector<double> dinv(static_cast<size_t>(A.n), 0.0);
    for (int64_t i = 0; i < A.n; ++i) {
        const double d = S.degree[static_cast<size_t>(i)];
        dinv[static_cast<size_t>(i)] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;  // zero-degree rows stay zero
    }
    for (int64_t i = 0; i < A.n; ++i) {
        auto& row = S.rows[static_cast<size_t>(i)];
        row.reserve(A.rows[static_cast<size_t>(i)].size());
        for (const auto& [j, w] : A.rows[static_cast<size_t>(i)])
            row.emplace_back(j, w * dinv[static_cast<size_t>(i)] * dinv[static_cast<size_t>(j)]);
    }
    return S;
}

void save_affinity(const std::string& path, const SparseAffinity& A) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_affinity: cannot open " + path);
    const auto es = A.edges();
    out << "GRA1 " << A.n << " " << es.size() << "\n";
    char buf[64];
    for (const auto& [ij, w] : es) {
        std::snprintf(buf, sizeof buf, "%d %d %.9g\n", ij.first, ij.second, w);
        out << buf;
    }
    if (!out) throw std::runtime_error("save_affinity: write failed for " + path);
}

SparseAffinity load_affinity(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_affinity: cannot open " + path);
    std::string magic;
    int64_t n = 0, nnz = 0;
    if (!(in >> magic >> n >> nnz) || magic != "GRA1")
        throw std::runtime_error("load_affinity: bad header in " + path);
    if (n < 0 || nnz < 0) throw std::runtime_error("load_affinity: bad header counts in " + path);
    SparseAffinity A(n);
    for (int64_t e = 0; e < nnz; ++e) {
        int i = 0, j = 0;
        double w = 0.0;
        if (!(in >> i >> j >> w))
            throw std::runtime_error("load_affinity: truncated edge list in " + path);
        if (i < 0 || j < 0 || i >= n || j >= n || i >= j)
            throw std::runtime_error("load_affinity: bad edge (" + std::to_string(i) + ", " +
                                     std::to_string(j) + ") in " + path);
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::runtime_error("load_affinity: bad weight in " + path);
        A.rows[static_cast<size_t>(i)].emplace_back(j, w);
        A.rows[static_cast<size_t>(j)].emplace_back(i, w);
    }
    for (auto& row : A.rows) {
        std::sort(row.begin(), row.end());
        for (size_t t = 1; t < row.size(); ++t)
            if (row[t].first == row[t - 1].first)
                throw std::runtime_error("load_affinity: duplicate edge in " + path);
    }
    return A;
}

}  // namespace crfdn
