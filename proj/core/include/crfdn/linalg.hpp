#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace crfdn {

struct CgResult {
    int iterations = 0;
    double residual = 0.0;  // final |r| / |b|
};

// Conjugate gradient for symmetric positive definite systems, templated over
// the matrix-vector product. Converges when |b - A x| <= tol * |b|. Throws
// std::runtime_error carrying the last relative residual on non-convergence.
template <typename MatVec>
CgResult conjugate_gradient(const MatVec& apply, const std::vector<double>& b,
                            std::vector<double>& x, double tol, int max_iter) {
    const size_t n = b.size();
    if (x.size() != n) throw std::invalid_argument("cg: x0 size mismatch");

    std::vector<double> r(n), p(n), ap(n);
    apply(x, ap);
    double bnorm2 = 0.0, rnorm2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        bnorm2 += b[i] * b[i];
        r[i] = b[i] - ap[i];
        rnorm2 += r[i] * r[i];
    }
    const double stop2 = tol * tol * bnorm2;
    if (bnorm2 == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0};
    }
    if (rnorm2 <= stop2) return {0, std::sqrt(rnorm2 / bnorm2)};

    p = r;
    for (int it = 1; it <= max_iter; ++it) {
        apply(p, ap);
        double pap = 0.0;
        for (size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (pap <= 0.0)
            throw std::runtime_error("cg: matrix not positive definite (p^T A p = " +
                                     std::to_string(pap) + ")");
        const double alpha = rnorm2 / pap;
        double rnext2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            rnext2 += r[i] * r[i];
        }
        if (rnext2 <= stop2) return {it, std::sqrt(rnext2 / bnorm2)};
        const double beta = rnext2 / rnorm2;
        rnorm2 = rnext2;
        for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw std::runtime_error("cg: no convergence after " + std::to_string(max_iter) +
                             " iterations, relative residual " +
                             std::to_string(std::sqrt(rnorm2 / bnorm2)));
}

// Dense symmetric positive definite solve via Cholesky, row-major a (n x n).
// a is overwritten with the factor; b with the solution. Throws on a
// non-positive pivot (matrix not PD within floating point).
void cholesky_solve_inplace(std::vector<double>& a, int64_t n, std::vector<double>& b);

// Convenience copy version.
std::vector<double> cholesky_solve(std::vector<double> a, int64_t n, std::vector<double> b);

}  // namespace crfdn
