#include "crfdn/ccrf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crfdn/linalg.hpp"
#include "crfdn/threads.hpp"

namespace crfdn {

void CcrfSystem::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(static_cast<size_t>(L), 0.0);
    for (int64_t i = 0; i < L; ++i) {
        double wx = 0.0;
        const double* wrow = weights.data() + i * L;
        for (int64_t j = 0; j < L; ++j) wx += wrow[j] * x[static_cast<size_t>(j)];
        y[static_cast<size_t>(i)] =
            2.0 * alpha * x[static_cast<size_t>(i)] +
            2.0 * beta * (degree[static_cast<size_t>(i)] * x[static_cast<size_t>(i)] - wx);
    }
}

std::vector<double> CcrfSystem::precision_dense() const {
    std::vector<double> P(static_cast<size_t>(L * L), 0.0);
    for (int64_t i = 0; i < L; ++i) {
        for (int64_t j = 0; j < L; ++j)
            P[i * L + j] = -2.0 * beta * weights[i * L + j];
        P[i * L + i] = 2.0 * (alpha + beta * degree[static_cast<size_t>(i)]);
    }
    return P;
}

Clique build_clique(const DescriptorSet& X, const KnnLists& knn_full, int pivot, int L,
                    double gamma) {
    if (L > X.n - 1)
        throw std::invalid_argument("build_clique: L=" + std::to_string(L) +
                                    " exceeds N-1=" + std::to_string(X.n - 1));
    if (knn_full.k < L)
        throw std::invalid_argument("build_clique: knn lists hold only " +
                                    std::to_string(knn_full.k) + " neighbors, need L=" +
                                    std::to_string(L));
    Clique c;
    c.pivot = pivot;
    const auto& nb = knn_full.neighbors[static_cast<size_t>(pivot)];
    const auto& sm = knn_full.sims[static_cast<size_t>(pivot)];
    c.members.assign(nb.begin(), nb.begin() + L);
    c.pivot_sims.assign(sm.begin(), sm.begin() + L);
    c.sim_matrix.assign(static_cast<size_t>(L) * L, 0.0);
    for (int64_t i = 0; i < L; ++i) {
        for (int64_t j = i + 1; j < L; ++j) {
            const double s = pairwise_similarity(X, c.members[static_cast<size_t>(i)], X,
                                                 c.members[static_cast<size_t>(j)], gamma);
            c.sim_matrix[i * L + j] = s;
            c.sim_matrix[j * L + i] = s;
        }
    }
    return c;
}

std::vector<double> sbd_pmf(const std::vector<double>& sim_matrix, int64_t L, int64_t i) {
    std::vector<double> q(static_cast<size_t>(L));
    const double* row = sim_matrix.data() + i * L;
    double nrm = 0.0;
    for (int64_t k = 0; k < L; ++k) nrm += row[k] * row[k];
    if (nrm == 0.0) {  // degenerate row: uniform PMF
        std::fill(q.begin(), q.end(), 1.0 / static_cast<double>(L));
        return q;
    }
    nrm = std::sqrt(nrm);
    double z = 0.0;
    for (int64_t k = 0; k < L; ++k) {
        q[static_cast<size_t>(k)] = std::exp(row[k] / nrm);
        z += q[static_cast<size_t>(k)];
    }
    for (int64_t k = 0; k < L; ++k) q[static_cast<size_t>(k)] /= z;
    return q;
}

double j_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("j_divergence: length mismatch");
    double acc = 0.0;
    for (size_t k = 0; k < p.size(); ++k) {
        if (!(p[k] > 0.0) || !(q[k] > 0.0))
            throw std::invalid_argument("j_divergence: PMFs must be strictly positive");
        acc += (p[k] - q[k]) * (std::log(p[k]) - std::log(q[k]));
    }
    return 0.5 * acc;
}

std::vector<double> weight_matrix(const DescriptorSet& X, const Clique& clique, double sigma_d,
                                  double sigma_r, WeightTerms terms) {
    if (sigma_d <= 0.0 || sigma_r <= 0.0)
        throw std::invalid_argument("weight_matrix: bandwidths must be positive");
    const int64_t L = clique.size();
    std::vector<double> W(static_cast<size_t>(L) * L, 0.0);

    const bool use_ed = terms != WeightTerms::sd;
    const bool use_sd = terms != WeightTerms::ed;
    const double inv2sd = 1.0 / (2.0 * sigma_d * sigma_d);
    const double inv2sr = 1.0 / (2.0 * sigma_r * sigma_r);

    // SBD PMFs and their logs for the statistical term
    std::vector<double> Q, logQ, ent;
    if (use_sd) {
        Q.resize(static_cast<size_t>(L) * L);
        logQ.resize(static_cast<size_t>(L) * L);
        ent.resize(static_cast<size_t>(L));
        for (int64_t i = 0; i < L; ++i) {
            const auto qi = sbd_pmf(clique.sim_matrix, L, i);
            double e = 0.0;
            for (int64_t k = 0; k < L; ++k) {
                Q[i * L + k] = qi[static_cast<size_t>(k)];
                logQ[i * L + k] = std::log(qi[static_cast<size_t>(k)]);
                e += qi[static_cast<size_t>(k)] * logQ[i * L + k];
            }
            ent[static_cast<size_t>(i)] = e;
        }
    }

    for (int64_t i = 0; i < L; ++i) {
        const float* fi = X.row(clique.members[static_cast<size_t>(i)]);
        for (int64_t j = i + 1; j < L; ++j) {
            double expo = 0.0;
            if (use_ed) {
                const float* fj = X.row(clique.members[static_cast<size_t>(j)]);
                double d2 = 0.0;
                for (int64_t c = 0; c < X.dim; ++c) {
                    const double diff = static_cast<double>(fi[c]) - static_cast<double>(fj[c]);
                    d2 += diff * diff;
                }
                expo += d2 * inv2sd;
            }
            if (use_sd) {
                double cij = 0.0, cji = 0.0;
                const double* qi = Q.data() + i * L;
                const double* qj = Q.data() + j * L;
                const double* li = logQ.data() + i * L;
                const double* lj = logQ.data() + j * L;
                for (int64_t k = 0; k < L; ++k) {
                    cij += qi[k] * lj[k];
                    cji += qj[k] * li[k];
                }
                const double dj =
                    0.5 * ((ent[static_cast<size_t>(i)] - cij) + (ent[static_cast<size_t>(j)] - cji));
                expo += dj * dj * inv2sr;  // D_J enters squared
            }
            const double w = std::exp(-expo);
            W[i * L + j] = w;
            W[j * L + i] = w;
        }
    }
    return W;
}

CcrfSystem assemble_system(const Clique& clique, const std::vector<double>& W, double alpha,
                           double beta) {
    const int64_t L = clique.size();
    if (W.size() != static_cast<size_t>(L) * L)
        throw std::invalid_argument("assemble_system: weight matrix size mismatch");
    if (alpha <= 0.0)
        throw std::invalid_argument("assemble_system: alpha must be positive for a PD system");
    if (beta < 0.0) throw std::invalid_argument("assemble_system: beta must be nonnegative");
    CcrfSystem sys;
    sys.L = L;
    sys.alpha = alpha;
    sys.beta = beta;
    sys.weights = W;
    sys.degree.assign(static_cast<size_t>(L), 0.0);
    for (int64_t i = 0; i < L; ++i) {
        double d = 0.0;
        for (int64_t j = 0; j < L; ++j) d += W[i * L + j];
        sys.degree[static_cast<size_t>(i)] = d;
    }
    sys.rhs.resize(static_cast<size_t>(L));
    for (int64_t i = 0; i < L; ++i) sys.rhs[static_cast<size_t>(i)] = 2.0 * alpha * clique.pivot_sims[static_cast<size_t>(i)];
    return sys;
}

std::vector<double> infer(const CcrfSystem& system, SolverKind method, double tol, int max_iter) {
    if (max_iter <= 0) max_iter = static_cast<int>(10 * system.L);
    if (method == SolverKind::direct) {
        return cholesky_solve(system.precision_dense(), system.L, system.rhs);
    }
    // start from the observations: with beta = 0 the initial residual is
    // exactly zero and CG returns s_p bitwise
    std::vector<double> x(system.rhs.size());
    for (size_t i = 0; i < x.size(); ++i) x[i] = system.rhs[i] / (2.0 * system.alpha);
    conjugate_gradient([&](const std::vector<double>& v, std::vector<double>& out) { system.apply(v, out); },
                       system.rhs, x, tol, max_iter);
    return x;
}

namespace {

struct DirectedPick {
    int target = 0;
    double value = 0.0;
};

SparseAffinity merge_selections(int64_t n,
                                const std::vector<std::vector<DirectedPick>>& sel) {
    // sort each pivot's picks by target for pair lookup
    std::vector<std::vector<DirectedPick>> sorted = sel;
    for (auto& row : sorted)
        std::sort(row.begin(), row.end(),
                  [](const DirectedPick& a, const DirectedPick& b) { return a.target < b.target; });
    const auto lookup = [&](int i, int j) -> const DirectedPick* {
        const auto& row = sorted[static_cast<size_t>(i)];
        auto it = std::lower_bound(row.begin(), row.end(), j,
                                   [](const DirectedPick& e, int v) { return e.target < v; });
        return (it != row.end() && it->target == j) ? &*it : nullptr;
    };

    SparseAffinity A(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& pick : sorted[static_cast<size_t>(i)]) {
            const int j = pick.target;
            double sum = pick.value;
            if (j > i) {
                if (const DirectedPick* back = lookup(j, i)) sum += back->value;
            } else {
                if (lookup(j, i) != nullptr) continue;  // handled from the smaller index
            }
            const double a = 0.5 * sum;  // absent direction contributes zero
            if (a <= 0.0) continue;
            const int lo = std::min(i, j), hi = std::max(i, j);
            A.rows[static_cast<size_t>(lo)].emplace_back(hi, a);
            A.rows[static_cast<size_t>(hi)].emplace_back(lo, a);
        }
    }
    for (auto& row : A.rows) std::sort(row.begin(), row.end());
    return A;
}

}  // namespace

SparseAffinity denoise_database(const DescriptorSet& X, const KnnLists& knn_full,
                                const CcrfParams& params) {
    const int64_t n = X.n;
    if (params.L > n - 1)
        throw std::invalid_argument("denoise_database: L=" + std::to_string(params.L) +
                                    " exceeds N-1=" + std::to_string(n - 1));
    if (params.k_out < 1 || params.k_out > params.L)
        throw std::invalid_argument("denoise_database: need 1 <= k_out <= L");
    if (knn_full.k < params.L)
        throw std::invalid_argument("denoise_database: knn lists shorter than L");

    const int keep = params.reselect == ReselectOrder::pre ? params.k_out : params.L;
    std::vector<std::vector<DirectedPick>> sel(static_cast<size_t>(n));

    parallel_for(n, params.threads, [&](int64_t p) {
        try {
            const Clique clique =
                build_clique(X, knn_full, static_cast<int>(p), params.L, params.gamma);
            const auto W =
                weight_matrix(X, clique, params.sigma_d, params.sigma_r, params.weight_terms);
            const CcrfSystem sys = assemble_system(clique, W, params.alpha, params.beta);
            const auto y = infer(sys, params.solver, params.tol, params.max_iter);

            // top-keep by denoised value, ties by member slot (slots are ordered
            // by descending raw similarity, then index)
            std::vector<int> order(static_cast<size_t>(params.L));
            for (int t = 0; t < params.L; ++t) order[static_cast<size_t>(t)] = t;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return y[static_cast<size_t>(a)] > y[static_cast<size_t>(b)];
            });
            auto& out = sel[static_cast<size_t>(p)];
            out.reserve(static_cast<size_t>(keep));
            for (int t = 0; t < keep; ++t) {
                const int slot = order[static_cast<size_t>(t)];
                const double v = std::max(y[static_cast<size_t>(slot)], 0.0);
                out.push_back({clique.members[static_cast<size_t>(slot)], v});
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("denoise_database: pivot " + std::to_string(p) + ": " +
                                     e.what());
        }
    });

    SparseAffinity A = merge_selections(n, sel);
    if (params.reselect == ReselectOrder::post) {
        // per-node top-k_out cut on the symmetrized values; an edge survives if
        // either endpoint keeps it
        std::vector<std::vector<char>> kept(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto& row = A.rows[static_cast<size_t>(i)];
            kept[static_cast<size_t>(i)].assign(row.size(), 0);
            std::vector<int> order(row.size());
            for (size_t t = 0; t < row.size(); ++t) order[t] = static_cast<int>(t);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return row[static_cast<size_t>(a)].second > row[static_cast<size_t>(b)].second; });
            const size_t cut = std::min(static_cast<size_t>(params.k_out), row.size());
            for (size_t t = 0; t < cut; ++t) kept[static_cast<size_t>(i)][static_cast<size_t>(order[t])] = 1;
        }
        SparseAffinity B(n);
        for (int i = 0; i < n; ++i) {
            const auto& row = A.rows[static_cast<size_t>(i)];
            for (size_t t = 0; t < row.size(); ++t) {
                const int j = row[t].first;
                if (i >= j) continue;
                bool keep_edge = kept[static_cast<size_t>(i)][t] != 0;
                if (!keep_edge) {
                    // check the mirror entry's mark
                    const auto& rj = A.rows[static_cast<size_t>(j)];
                    const auto it = std::lower_bound(
                        rj.begin(), rj.end(), std::make_pair(i, -1.0));
                    const size_t tj = static_cast<size_t>(it - rj.begin());
                    keep_edge = kept[static_cast<size_t>(j)][tj] != 0;
                }
                if (keep_edge) {
                    B.rows[static_cast<size_t>(i)].emplace_back(j, row[t].second);
                    B.rows[static_cast<size_t>(j)].emplace_back(i, row[t].second);
                }
            }
        }
        for (auto& row : B.rows) std::sort(row.begin(), row.end());
        return B;
    }
    return A;
}

SparseAffinity denoise_database(const DescriptorSet& X, const CcrfParams& params) {
    const KnnLists knn_full = build_knn(X, params.L, params.gamma, params.threads);
    return denoise_database(X, knn_full, params);
}

}  // namespace crfdn
