#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library routines they are used to check.

#include "bsps/numerics.hpp"
#include "bsps/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using bsps::Index;
using bsps::IndexSet;
using bsps::MatrixXd;
using bsps::VectorXd;

inline MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed) {
    bsps::Rng rng(seed);
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline VectorXd random_vector(Index n, std::uint64_t seed) {
    bsps::Rng rng(seed);
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

/// Gaussian elimination with partial pivoting.
inline VectorXd gauss_solve(MatrixXd a, VectorXd b) {
    const Index n = a.rows();
    for (Index k = 0; k < n; ++k) {
        Index piv = k;
        for (Index i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        a.row(k).swap(a.row(piv));
        std::swap(b[k], b[piv]);
        for (Index i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            for (Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    VectorXd x(n);
    for (Index i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (Index j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

/// OLS coefficients through the normal equations.
inline VectorXd normal_equations(const MatrixXd& x, const VectorXd& y) {
    return gauss_solve(x.transpose() * x, x.transpose() * y);
}

inline double ols_rss(const MatrixXd& x, const IndexSet& cols, const VectorXd& y) {
    if (cols.empty()) return y.squaredNorm();
    MatrixXd xs(x.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) xs.col(static_cast<Index>(k)) = x.col(cols[k]);
    return (y - xs * normal_equations(xs, y)).squaredNorm();
}

/// Largest root of the characteristic polynomial of a symmetric 3x3 matrix,
/// found by bisection on det(A - lambda I).
inline double largest_eigenvalue_3x3(const MatrixXd& a) {
    const double c2 = -(a(0, 0) + a(1, 1) + a(2, 2));
    const double c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2) - a(0, 1) * a(1, 0) -
                      a(0, 2) * a(2, 0) - a(1, 2) * a(2, 1);
    const double c0 = -(a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                        a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                        a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)));
    auto poly = [&](double l) { return ((l + c2) * l + c1) * l + c0; };
    // Gershgorin upper bound; the cubic is positive beyond the largest root.
    double hi = 0.0;
    for (Index i = 0; i < 3; ++i) hi = std::max(hi, a.row(i).cwiseAbs().sum());
    hi += 1.0;
    double lo = hi;
    // Step down until the polynomial changes sign.
    const double step = hi / 4096.0;
    while (lo > -hi && poly(lo) > 0.0) lo -= step;
    double left = lo, right = lo + step;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (left + right);
        (poly(mid) > 0.0 ? right : left) = mid;
    }
    return 0.5 * (left + right);
}

/// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) {
            const double mid = 0.5 * (lo + hi);
            const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
            const double flm = f(lm), frm = f(rm);
            const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
                return left + right + (left + right - whole) / 15.0;
            }
            return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
        };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

/// Upper tail of F(1, d) at x by integrating the density in s = sqrt(x).
inline double f1_upper_tail(double x, double d) {
    const double log_c = std::lgamma((1.0 + d) / 2.0) - std::lgamma(0.5) - std::lgamma(d / 2.0) - 0.5 * std::log(d);
    // f(s^2) * 2s = 2 c (1 + s^2/d)^{-(1+d)/2}
    auto g = [&](double s) { return 2.0 * std::exp(log_c - 0.5 * (1.0 + d) * std::log1p(s * s / d)); };
    return 1.0 - simpson(g, 0.0, std::sqrt(x), 1e-14);
}

/// min ||w - v||^2 over w with at most t nonzeros inside `allowed`, by enumeration.
inline double best_projection_error(const VectorXd& v, const IndexSet& allowed, int t) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t k = allowed.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
        if (__builtin_popcountll(mask) > t) continue;
        VectorXd w = VectorXd::Zero(v.size());
        for (std::size_t b = 0; b < k; ++b)
            if (mask >> b & 1U) w[allowed[b]] = v[allowed[b]];
        best = std::min(best, (w - v).squaredNorm());
    }
    return best;
}

/// Unlabeled groups counted via restricted-growth assignments of each item to
/// "unused" or a group; groups appear in order of their first member.
inline std::uint64_t enumerate_splits(int p, int groups, int t, bool allow_empty) {
    std::vector<int> sizes;
    std::uint64_t count = 0;
    std::function<void(int)> rec = [&](int item) {
        if (item == p) {
            const int used = static_cast<int>(sizes.size());
            if (allow_empty ? used <= groups : used == groups) ++count;
            return;
        }
        rec(item + 1);  // unused
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            if (sizes[g] == t) continue;
            ++sizes[g];
            rec(item + 1);
            --sizes[g];
        }
        if (static_cast<int>(sizes.size()) < groups && t >= 1) {
            sizes.push_back(1);
            rec(item + 1);
            sizes.pop_back();
        }
    };
    rec(0);
    return count;
}

/// Largest violation of the lasso optimality conditions for
/// (1/2n)||y - Xb||^2 + lambda ||b||_1.
inline double kkt_violation(const MatrixXd& x, const VectorXd& y, const VectorXd& beta, double lambda) {
    const VectorXd corr = x.transpose() * (y - x * beta) / static_cast<double>(x.rows());
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] == 0.0) {
            worst = std::max(worst, std::abs(corr[j]) - lambda);
        } else {
            worst = std::max(worst, std::abs(corr[j] - lambda * (beta[j] > 0 ? 1.0 : -1.0)));
        }
    }
    return worst;
}

}  // namespace oracle
