#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "swstab/error.hpp"
#include "swstab/matrix.hpp"
#include "swstab/tolerances.hpp"

namespace swstab {

struct EigenPair {
    double value = 0.0;
    Vector vector;           // unit Euclidean norm
    double residual = 0.0;   // ||A v - value v||_2 / ||A||_F (0 when ||A|| = 0)
};

inline double relative_residual(const DenseMatrix& a, double value, std::span<const double> v) {
    Vector av = a * v;
    for (std::size_t i = 0; i < av.size(); ++i) av[i] -= value * v[i];
    const double scale = a.frobenius_norm();
    const double r = norm2(av);
    return scale > 0.0 ? r / scale : r;
}

/// Gaussian elimination with partial pivoting.
inline Vector solve_linear(const DenseMatrix& a, std::span<const double> b,
                           const Tolerances& tol = kDefaultTolerances) {
    if (!a.is_square()) throw Error(ErrorKind::NotSquare, "solve_linear needs a square matrix");
    const std::size_t n = a.rows();
    if (b.size() != n) throw Error(ErrorKind::DimensionMismatch, "right-hand side length");

    DenseMatrix lu = a;
    Vector x(b.begin(), b.end());
    const double threshold = tol.singular_pivot * a.frobenius_norm();

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (std::abs(lu(p, k)) <= threshold || lu(p, k) == 0.0) {
            throw Error(ErrorKind::SingularMatrix, "pivot below threshold", k);
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
            std::swap(x[k], x[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
            x[i] -= f * x[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = x[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= lu(k, j) * x[j];
        x[k] = s / lu(k, k);
    }
    return x;
}

inline Vector solve_linear(const DenseMatrix& a, const Vector& b,
                           const Tolerances& tol = kDefaultTolerances) {
    return solve_linear(a, std::span<const double>(b), tol);
}

/// Column-by-column inverse through solve_linear.
inline DenseMatrix inverse(const DenseMatrix& a, const Tolerances& tol = kDefaultTolerances) {
    if (!a.is_square()) throw Error(ErrorKind::NotSquare, "inverse needs a square matrix");
    const std::size_t n = a.rows();
    DenseMatrix inv(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        const Vector col = solve_linear(a, e, tol);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

/// Nodes reachable from `start` along edges i->j with `edge(i, j)` true.
template <class EdgePredicate>
std::vector<bool> reachable_from(std::size_t n, std::size_t start, EdgePredicate edge) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && !seen[j] && edge(i, j)) {
                seen[j] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

/// First pair (i, j) with j not reachable from i in the support graph of the
/// positive off-diagonal entries, or nullopt when strongly connected.
inline std::optional<std::pair<std::size_t, std::size_t>>
unreachable_pair(const DenseMatrix& m) {
    const std::size_t n = m.rows();
    auto forward = reachable_from(n, 0, [&](std::size_t i, std::size_t j) { return m(i, j) > 0.0; });
    for (std::size_t j = 0; j < n; ++j)
        if (!forward[j]) return std::pair{std::size_t{0}, j};
    auto backward = reachable_from(n, 0, [&](std::size_t i, std::size_t j) { return m(j, i) > 0.0; });
    for (std::size_t j = 0; j < n; ++j)
        if (!backward[j]) return std::pair{j, std::size_t{0}};
    return std::nullopt;
}

/// Perron root (rightmost eigenvalue) and positive eigenvector of an
/// irreducible Metzler matrix, by power iteration on M + cI with
/// c = 1 + max |M_ii|.
inline EigenPair perron_pair(const DenseMatrix& m, const Tolerances& tol = kDefaultTolerances) {
    require_not_narrower(tol);
    if (!m.is_square()) throw Error(ErrorKind::NotSquare, "perron_pair needs a square matrix");
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && m(i, j) < 0.0) {
                throw Error(ErrorKind::NotMetzler, "negative off-diagonal entry", i, j);
            }
    if (auto pair = unreachable_pair(m)) {
        throw Error(ErrorKind::NotIrreducible, "support graph is not strongly connected",
                    pair->first, pair->second);
    }
    if (n == 1) return {m(0, 0), {1.0}, 0.0};

    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) shift = std::max(shift, std::abs(m(i, i)));
    shift += 1.0;

    const double scale = m.frobenius_norm();
    Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Vector w(n);
    double rayleigh = dot(v, m * v);
    double residual = relative_residual(m, rayleigh, v);

    for (std::size_t it = 0; it < tol.perron_max_iterations; ++it) {
        w = m * v;
        for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[i];
        const double len = norm2(w);
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / len;

        const Vector mv = m * v;
        const double next = dot(v, mv);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) r2 += (mv[i] - next * v[i]) * (mv[i] - next * v[i]);
        residual = scale > 0.0 ? std::sqrt(r2) / scale : std::sqrt(r2);

        const bool settled = std::abs(next - rayleigh) < tol.perron_rayleigh;
        rayleigh = next;
        if (settled && residual <= tol.perron_residual) {
            return {rayleigh, v, residual};
        }
    }
    throw Error(ErrorKind::NoConvergence, "power iteration hit the iteration cap", Error::npos,
                Error::npos, residual);
}

struct SymmetricEigen {
    Vector values;        // ascending
    DenseMatrix vectors;  // column k pairs with values[k]
};

inline double asymmetry(const DenseMatrix& s) {
    double d = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j) {
            const double e = s(i, j) - s(j, i);
            d += e * e;
        }
    return std::sqrt(d);
}

inline DenseMatrix symmetrized(const DenseMatrix& s, const Tolerances& tol = kDefaultTolerances) {
    if (!s.is_square()) throw Error(ErrorKind::NotSquare, "symmetric matrix must be square");
    if (asymmetry(s) > tol.symmetry * s.frobenius_norm()) {
        throw Error(ErrorKind::NotSymmetric, "matrix is not symmetric within tolerance");
    }
    return 0.5 * (s + s.transpose());
}

/// Full spectrum by cyclic Jacobi rotations.
inline SymmetricEigen sym_eig(const DenseMatrix& s, const Tolerances& tol = kDefaultTolerances) {
    require_not_narrower(tol);
    DenseMatrix a = symmetrized(s, tol);
    const std::size_t n = a.rows();
    DenseMatrix v = DenseMatrix::identity(n);
    const double target = tol.jacobi_offdiag * a.frobenius_norm();

    auto off_norm = [&] {
        double o = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) o += a(i, j) * a(i, j);
        return std::sqrt(o);
    };

    std::size_t sweep = 0;
    while (off_norm() >= target && target > 0.0) {
        if (sweep++ >= tol.jacobi_max_sweeps) {
            throw Error(ErrorKind::NoConvergence, "Jacobi sweeps exhausted", Error::npos,
                        Error::npos, off_norm());
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymmetricEigen out{Vector(n), DenseMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

enum class Extreme { Min, Max };

/// Extreme eigenpair of a symmetric matrix; the eigenvector is sign-normalized
/// so its component sum is nonnegative.
inline EigenPair sym_eig_extreme(const DenseMatrix& s, Extreme which,
                                 const Tolerances& tol = kDefaultTolerances) {
    const SymmetricEigen eig = sym_eig(s, tol);
    const std::size_t n = eig.values.size();
    const std::size_t k = which == Extreme::Min ? 0 : n - 1;
    Vector vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = eig.vectors(i, k);
    const double len = norm2(vec);
    double sum = 0.0;
    for (double& x : vec) {
        x /= len;
        sum += x;
    }
    if (sum < 0.0) {
        for (double& x : vec) x = -x;
    }
    return {eig.values[k], vec, relative_residual(s, eig.values[k], vec)};
}

enum class Sense { Positive, Negative };

struct DefinitenessResult {
    bool holds = false;
    // Smallest Cholesky pivot when the factorization ran to completion.
    double min_pivot = 0.0;
    // Order (1-based) of the first leading submatrix with a nonpositive pivot; 0 if none.
    std::size_t failed_order = 0;
};

/// Strict definiteness by Cholesky: positive sense factors S - margin I,
/// negative sense factors -S - margin I.
inline DefinitenessResult definiteness(const DenseMatrix& s, Sense sense, double margin,
                                       const Tolerances& tol = kDefaultTolerances) {
    if (margin < 0.0) throw Error(ErrorKind::InvalidArgument, "margin must be nonnegative");
    DenseMatrix a = symmetrized(s, tol);
    if (sense == Sense::Negative) a *= -1.0;
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) a(i, i) -= margin;

    DefinitenessResult out;
    out.min_pivot = std::numeric_limits<double>::infinity();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            out.holds = false;
            out.min_pivot = std::min(out.min_pivot, d);
            out.failed_order = j + 1;
            return out;
        }
        out.min_pivot = std::min(out.min_pivot, d);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s2 = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s2 -= l(i, k) * l(j, k);
            l(i, j) = s2 / ljj;
        }
    }
    out.holds = true;
    return out;
}

} // namespace swstab
