// Test-only reference implementations, written independently of the library
// code they check: dense solves by Gaussian elimination, eigenvalues by
// cyclic Jacobi, brute-force kNN, and a straight-line AP. Deliberately naive.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace oracle {

// Deterministic uniforms independent of std::uniform_real_distribution.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ULL) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<double> A, std::vector<double> b) {
    const std::size_t n = b.size();
    if (A.size() != n * n) throw std::invalid_argument("oracle::solve: shape");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
        if (std::fabs(A[piv * n + col]) < 1e-300)
            throw std::runtime_error("oracle::solve: singular");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r * n + col] / A[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= A[ri * n + c] * x[c];
        x[ri] = s / A[ri * n + ri];
    }
    return x;
}

// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
inline std::vector<double> eigenvalues_sym(std::vector<double> A, std::size_t n) {
    if (A.size() != n * n) throw std::invalid_argument("oracle::eig: shape");
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += A[p * n + q] * A[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A[p * n + q];
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (A[q * n + q] - A[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A[k * n + p], akq = A[k * n + q];
                    A[k * n + p] = c * akp - s * akq;
                    A[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A[p * n + k], aqk = A[q * n + k];
                    A[p * n + k] = c * apk - s * aqk;
                    A[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = A[i * n + i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Brute-force top-k neighbor lists over a dense similarity callback.
template <typename SimFn>
std::vector<std::vector<int>> knn(std::int64_t n, int k, const SimFn& sim) {
    std::vector<std::vector<int>> lists;
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<int> idx;
        for (std::int64_t j = 0; j < n; ++j)
            if (j != i) idx.push_back(static_cast<int>(j));
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            const double sa = sim(i, a), sb = sim(i, b);
            return sa > sb || (sa == sb && a < b);
        });
        idx.resize(static_cast<std::size_t>(k));
        lists.push_back(std::move(idx));
    }
    return lists;
}

// Straight-line average precision with junk skipping.
inline double ap(const std::vector<int>& ranked, const std::vector<int>& positives,
                 const std::vector<int>& junk) {
    auto has = [](const std::vector<int>& v, int x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    double hits = 0.0, sum = 0.0;
    int rank = 0;
    for (int item : ranked) {
        if (has(junk, item)) continue;
        ++rank;
        if (has(positives, item)) {
            hits += 1.0;
            sum += hits / rank;
        }
    }
    return sum / static_cast<double>(positives.size());
}

}  // namespace oracle
