#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swstab/error.hpp"
#include "swstab/matrix.hpp"
#include "swstab/numerics.hpp"
#include "swstab/random.hpp"
#include "swstab/tolerances.hpp"

namespace swstab {

enum class Irreducibility { Require, Allow };

/// Validated transition-rate matrix (Q-matrix) of a finite chain.
class Generator {
public:
    /// Checks sign pattern, zero row sums and strong connectivity.
    /// Throws NegativeRate(i, j), BadRowSum(i) or, with Require, Reducible.
    static Generator validate(const DenseMatrix& rates,
                              Irreducibility mode = Irreducibility::Require,
                              const Tolerances& tol = kDefaultTolerances) {
        if (!rates.is_square()) throw Error(ErrorKind::NotSquare, "generator must be square");
        const std::size_t n = rates.rows();
        if (n < 2) throw Error(ErrorKind::InvalidArgument, "generator needs at least two modes");
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            double scale = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && rates(i, j) < 0.0) {
                    throw Error(ErrorKind::NegativeRate,
                                "rate " + std::to_string(i) + "->" + std::to_string(j) +
                                    " is negative",
                                i, j);
                }
                sum += rates(i, j);
                scale = std::max(scale, std::abs(rates(i, j)));
            }
            if (std::abs(sum) > tol.row_sum * scale) {
                throw Error(ErrorKind::BadRowSum, "row " + std::to_string(i) + " does not sum to zero",
                            i, Error::npos, sum);
            }
        }
        const auto gap = unreachable_pair(rates);
        if (gap && mode == Irreducibility::Require) {
            throw Error(ErrorKind::Reducible,
                        "mode " + std::to_string(gap->second) + " is unreachable from mode " +
                            std::to_string(gap->first),
                        gap->first, gap->second);
        }
        return Generator(rates, !gap.has_value());
    }

    const DenseMatrix& rates() const noexcept { return rates_; }
    std::size_t size() const noexcept { return rates_.rows(); }
    bool irreducible() const noexcept { return irreducible_; }
    double rate(std::size_t i, std::size_t j) const { return rates_(i, j); }
    double exit_rate(std::size_t i) const { return -rates_(i, i); }

private:
    Generator(DenseMatrix rates, bool irreducible)
        : rates_(std::move(rates)), irreducible_(irreducible) {}

    DenseMatrix rates_;
    bool irreducible_;
};

struct StationaryDist {
    Vector mu;
};

/// Solves mu Q = 0, sum mu = 1 by replacing the last row of Q^T with ones.
inline StationaryDist stationary(const Generator& g, const Tolerances& tol = kDefaultTolerances) {
    if (!g.irreducible()) {
        throw Error(ErrorKind::Reducible, "stationary distribution needs an irreducible chain");
    }
    const std::size_t n = g.size();
    DenseMatrix system = g.rates().transpose();
    for (std::size_t j = 0; j < n; ++j) system(n - 1, j) = 1.0;
    Vector rhs(n, 0.0);
    rhs[n - 1] = 1.0;

    Vector mu;
    try {
        mu = solve_linear(system, rhs, tol);
    } catch (const Error& e) {
        throw Error(ErrorKind::SingularMatrix,
                    std::string("internal: irreducible generator gave a singular system: ") + e.what());
    }

    const Vector residual = g.rates().transpose() * mu;
    const double scale = std::max(1.0, g.rates().max_abs());
    if (norm_inf(residual) > tol.stationary_residual * scale) {
        throw Error(ErrorKind::NoConvergence, "stationary residual too large", Error::npos,
                    Error::npos, norm_inf(residual));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(mu[i] > 0.0)) {
            throw Error(ErrorKind::SingularMatrix, "stationary distribution is not positive", i);
        }
    }
    return {mu};
}

/// Largest detailed-balance defect max |mu_i q_ij - mu_j q_ji|.
inline double detailed_balance_defect(const Generator& g, const StationaryDist& dist) {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
            worst = std::max(worst, std::abs(dist.mu[i] * g.rate(i, j) - dist.mu[j] * g.rate(j, i)));
    return worst;
}

inline bool reversibility(const Generator& g, const StationaryDist& dist,
                          const Tolerances& tol = kDefaultTolerances) {
    if (dist.mu.size() != g.size()) {
        throw Error(ErrorKind::DimensionMismatch, "distribution length differs from mode count");
    }
    return detailed_balance_defect(g, dist) <= tol.reversibility * g.rates().max_abs();
}

/// D^{1/2} M D^{-1/2} with D = diag(mu).
inline DenseMatrix similarity_by_sqrt_mu(const DenseMatrix& m, const StationaryDist& dist) {
    DenseMatrix s = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            s(i, j) = std::sqrt(dist.mu[i]) * m(i, j) / std::sqrt(dist.mu[j]);
    return s;
}

struct ChainPath {
    std::size_t initial_state = 0;
    double horizon = 0.0;
    std::vector<double> jump_times;   // strictly increasing, all < horizon
    std::vector<std::size_t> states;  // states[k] holds on [jump_times[k-1], jump_times[k])

    /// Mode occupied at time t in [0, horizon].
    std::size_t state_at(double t) const {
        const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
        return states[static_cast<std::size_t>(it - jump_times.begin())];
    }

    /// Time after `t` of the next jump, or horizon when none remain.
    double next_jump_after(double t) const {
        const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
        return it == jump_times.end() ? horizon : *it;
    }
};

/// Exact path on [0, T]: Exp(-q_ii) holding times and jumps to j with
/// probability q_ij / (-q_ii), drawn from CounterStream(seed).
inline ChainPath sample_path(const Generator& g, std::size_t initial, double horizon,
                             std::uint64_t seed) {
    if (initial >= g.size()) throw Error(ErrorKind::InvalidArgument, "initial mode out of range");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::InvalidArgument, "horizon must be finite and nonnegative");
    }
    ChainPath path{initial, horizon, {}, {initial}};
    CounterStream stream(seed);
    double t = 0.0;
    std::size_t state = initial;
    while (true) {
        const double exit = g.exit_rate(state);
        if (!(exit > 0.0)) {
            throw Error(ErrorKind::AbsorbingState, "mode " + std::to_string(state) + " is absorbing",
                        state);
        }
        t += stream.exponential() / exit;
        const double u = stream.uniform() * exit;
        if (!(t < horizon)) break;

        std::size_t next = state;
        double acc = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (j == state || g.rate(state, j) <= 0.0) continue;
            acc += g.rate(state, j);
            next = j;
            if (u < acc) break;
        }
        path.jump_times.push_back(t);
        path.states.push_back(next);
        state = next;
    }
    return path;
}

/// Fraction of [0, horizon] spent in each mode.
inline Vector occupation_fractions(const ChainPath& path, std::size_t modes) {
    Vector frac(modes, 0.0);
    if (path.horizon <= 0.0) {
        frac[path.initial_state] = 1.0;
        return frac;
    }
    double prev = 0.0;
    for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
        frac[path.states[k]] += path.jump_times[k] - prev;
        prev = path.jump_times[k];
    }
    frac[path.states.back()] += path.horizon - prev;
    for (double& f : frac) f /= path.horizon;
    return frac;
}

} // namespace swstab
