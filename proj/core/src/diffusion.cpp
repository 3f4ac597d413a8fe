#include "crfdn/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "crfdn/linalg.hpp"
#include "crfdn/threads.hpp"

namespace crfdn {

std::vector<double> query_init(const DescriptorSet& y, int64_t query_row, const DescriptorSet& X,
                               int k, double gamma) {
    if (y.dim != X.dim) throw std::invalid_argument("query_init: dimension mismatch");
    if (k < 1 || k > X.n)
        throw std::invalid_argument("query_init: k must satisfy 1 <= k <= N");
    std::vector<double> sims(static_cast<size_t>(X.n));
    for (int64_t i = 0; i < X.n; ++i)
        sims[static_cast<size_t>(i)] = pairwise_similarity(y.row(query_row), X.row(i), X.dim, gamma);

    std::vector<int> order(static_cast<size_t>(X.n));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        return sims[static_cast<size_t>(a)] > sims[static_cast<size_t>(b)] ||
               (sims[static_cast<size_t>(a)] == sims[static_cast<size_t>(b)] && a < b);
    });
    std::vector<double> v0(static_cast<size_t>(X.n), 0.0);
    for (int t = 0; t < k; ++t) v0[static_cast<size_t>(order[static_cast<size_t>(t)])] =
        sims[static_cast<size_t>(order[static_cast<size_t>(t)])];
    return v0;
}

DiffusionState diffuse_iterative(const NormalizedAffinity& S, const std::vector<double>& v0,
                                 const DiffusionParams& params) {
    if (!(params.rho > 0.0 && params.rho < 1.0))
        throw std::invalid_argument("diffuse_iterative: rho must lie in (0, 1)");
    DiffusionState st;
    st.v = v0;
    std::vector<double> sv;
    for (int it = 1; it <= params.max_iter; ++it) {
        S.matvec(st.v, sv);
        double step = 0.0;
        for (size_t i = 0; i < sv.size(); ++i) {
            const double next = params.rho * sv[i] + (1.0 - params.rho) * v0[i];
            step = std::max(step, std::fabs(next - st.v[i]));
            st.v[i] = next;
        }
        st.iteration = it;
        st.residual = step;
        st.residuals.push_back(step);
        if (step <= params.tol) return st;
    }
    throw std::runtime_error("diffuse_iterative: no convergence after " +
                             std::to_string(params.max_iter) + " iterations, residual " +
                             std::to_string(st.residual));
}

std::vector<double> diffuse_closed_form(const NormalizedAffinity& S, const std::vector<double>& v0,
                                        double rho, double solver_tol, int max_iter) {
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("diffuse_closed_form: rho must lie in (0, 1)");
    std::vector<double> b(v0.size());
    for (size_t i = 0; i < v0.size(); ++i) b[i] = (1.0 - rho) * v0[i];
    std::vector<double> x = b;
    std::vector<double> sx;
    const auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        S.matvec(in, sx);
        out.resize(in.size());
        for (size_t i = 0; i < in.size(); ++i) out[i] = in[i] - rho * sx[i];
    };
    conjugate_gradient(apply, b, x, solver_tol, max_iter);
    return x;
}

OfflineIndex offline_precompute(const NormalizedAffinity& S, double rho, int trunc,
                                double solver_tol, int max_iter, int threads) {
    if (trunc <= 0 || trunc > S.n) trunc = static_cast<int>(S.n);
    OfflineIndex index;
    index.n = S.n;
    index.trunc = trunc;
    index.rho = rho;
    index.columns.assign(static_cast<size_t>(S.n), {});

    parallel_for(S.n, threads, [&](int64_t i) {
        try {
            std::vector<double> e(static_cast<size_t>(S.n), 0.0);
            e[static_cast<size_t>(i)] = 1.0;
            const std::vector<double> f = diffuse_closed_form(S, e, rho, solver_tol, max_iter);
            // top-trunc entries by value, ties by ascending index
            std::vector<int> order(static_cast<size_t>(S.n));
            std::iota(order.begin(), order.end(), 0);
            const int keep = std::min<int>(trunc, static_cast<int>(S.n));
            std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](int a, int b) {
                return f[static_cast<size_t>(a)] > f[static_cast<size_t>(b)] ||
                       (f[static_cast<size_t>(a)] == f[static_cast<size_t>(b)] && a < b);
            });
            auto& col = index.columns[static_cast<size_t>(i)];
            col.reserve(static_cast<size_t>(keep));
            for (int t = 0; t < keep; ++t)
                col.emplace_back(order[static_cast<size_t>(t)], f[static_cast<size_t>(order[static_cast<size_t>(t)])]);
            std::sort(col.begin(), col.end());
        } catch (const std::exception& e) {
            throw std::runtime_error("offline_precompute: item " + std::to_string(i) + ": " +
                                     e.what());
        }
    });
    return index;
}

std::vector<double> offline_apply(const OfflineIndex& index, const std::vector<double>& v0) {
    if (static_cast<int64_t>(v0.size()) != index.n)
        throw std::invalid_argument("offline_apply: size mismatch");
    std::vector<double> r(static_cast<size_t>(index.n), 0.0);
    for (int64_t i = 0; i < index.n; ++i) {
        const double vi = v0[static_cast<size_t>(i)];
        if (vi == 0.0) continue;
        for (const auto& [j, f] : index.columns[static_cast<size_t>(i)])
            r[static_cast<size_t>(j)] += vi * f;
    }
    return r;
}

RetrievalRanking rank_scores(const std::vector<double>& scores) {
    RetrievalRanking rank;
    rank.indices.resize(scores.size());
    std::iota(rank.indices.begin(), rank.indices.end(), 0);
    std::sort(rank.indices.begin(), rank.indices.end(), [&](int a, int b) {
        return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)] ||
               (scores[static_cast<size_t>(a)] == scores[static_cast<size_t>(b)] && a < b);
    });
    rank.scores.resize(scores.size());
    for (size_t t = 0; t < rank.indices.size(); ++t)
        rank.scores[t] = scores[static_cast<size_t>(rank.indices[t])];
    return rank;
}

RetrievalRanking rerank_query(const DescriptorSet& queries, int64_t query_row,
                              const DescriptorSet& X, const NormalizedAffinity& S,
                              const DiffusionParams& params, int graph_k, double gamma,
                              const OfflineIndex* offline) {
    const int qk = params.query_k > 0 ? params.query_k : graph_k;
    const auto v0 = query_init(queries, query_row, X, qk, gamma);
    std::vector<double> v;
    if (params.mode == DiffusionMode::offline) {
        if (offline == nullptr)
            throw std::invalid_argument("rerank_query: offline mode needs a precomputed index");
        v = offline_apply(*offline, v0);
    } else {
        v = diffuse_closed_form(S, v0, params.rho, params.tol, params.max_iter);
    }
    return rank_scores(v);
}

void save_rankings(const std::string& path, const std::vector<int>& query_ids,
                   const std::vector<RetrievalRanking>& rankings) {
    if (query_ids.size() != rankings.size())
        throw std::invalid_argument("save_rankings: id/ranking count mismatch");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_rankings: cannot open " + path);
    char buf[96];
    for (size_t q = 0; q < rankings.size(); ++q) {
        const auto& r = rankings[q];
        for (size_t t = 0; t < r.indices.size(); ++t) {
            std::snprintf(buf, sizeof buf, "%d %d %zu %.6f\n", query_ids[q], r.indices[t], t + 1,
                          r.scores[t]);
            out << buf;
        }
    }
    if (!out) throw std::runtime_error("save_rankings: write failed for " + path);
}

std::vector<std::pair<int, RetrievalRanking>> load_rankings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_rankings: cannot open " + path);
    std::vector<std::pair<int, RetrievalRanking>> out;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        int qid = 0, item = 0;
        int64_t rank = 0;
        double score = 0.0;
        if (!(ss >> qid >> item >> rank >> score))
            throw std::runtime_error("load_rankings: malformed line " + std::to_string(lineno) +
                                     " in " + path);
        if (out.empty() || out.back().first != qid) out.push_back({qid, {}});
        auto& r = out.back().second;
        if (rank != static_cast<int64_t>(r.indices.size()) + 1)
            throw std::runtime_error("load_rankings: rank out of order at line " +
                                     std::to_string(lineno) + " in " + path);
        r.indices.push_back(item);
        r.scores.push_back(score);
    }
    return out;
}

}  // namespace crfdn
