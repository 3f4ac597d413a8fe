#include "crfdn/linalg.hpp"

namespace crfdn {

void cholesky_solve_inplace(std::vector<double>& a, int64_t n, std::vector<double>& b) {
    if (a.size() != static_cast<size_t>(n * n) || b.size() != static_cast<size_t>(n))
        throw std::invalid_argument("cholesky_solve: size mismatch");
    // lower-triangular factor in place
    for (int64_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (int64_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0))
            throw std::runtime_error("cholesky_solve: non-positive pivot " + std::to_string(d) +
                                     " at column " + std::to_string(j));
        const double lj = std::sqrt(d);
        a[j * n + j] = lj;
        for (int64_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (int64_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / lj;
        }
    }
    // forward then backward substitution
    for (int64_t i = 0; i < n; ++i) {
        double s = b[i];
        for (int64_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (int64_t i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int64_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
}

std::vector<double> cholesky_solve(std::vector<double> a, int64_t n, std::vector<double> b) {
    cholesky_solve_inplace(a, n, b);
    return b;
}

}  // namespace crfdn
