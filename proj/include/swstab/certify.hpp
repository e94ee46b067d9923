#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "swstab/error.hpp"
#include "swstab/markov.hpp"
#include "swstab/matrix.hpp"
#include "swstab/model.hpp"
#include "swstab/numerics.hpp"
#include "swstab/tolerances.hpp"

namespace swstab {

enum class Route { AveragingPF, M1, PrincipalEigen, Partition };

inline const char* to_string(Route r) {
    switch (r) {
    case Route::AveragingPF: return "pf";
    case Route::M1: return "m1";
    case Route::PrincipalEigen: return "eigen";
    case Route::Partition: return "partition";
    }
    return "?";
}

enum class RefusalReason {
    NotApplicable,       // averaging value >= 0
    Condition3Failed,    // min{-q_ii / beta_i : beta_i > 0} <= 1
    NotReversible,
    GammaNotIntegrable,
    NoWitnessFound,
};

inline const char* to_string(RefusalReason r) {
    switch (r) {
    case RefusalReason::NotApplicable: return "NotApplicable";
    case RefusalReason::Condition3Failed: return "Condition3Failed";
    case RefusalReason::NotReversible: return "NotReversible";
    case RefusalReason::GammaNotIntegrable: return "GammaNotIntegrable";
    case RefusalReason::NoWitnessFound: return "NoWitnessFound";
    }
    return "?";
}

struct Refusal {
    Route route;
    RefusalReason reason;
    std::string detail;
    double value = std::numeric_limits<double>::quiet_NaN();
};

/// Either a value or a reasoned refusal.
template <class T, class R = Refusal>
class Outcome {
public:
    Outcome(T value) : state_(std::move(value)) {}
    Outcome(R refusal) : state_(std::move(refusal)) {}

    bool ok() const noexcept { return std::holds_alternative<T>(state_); }
    explicit operator bool() const noexcept { return ok(); }
    const T& value() const { return std::get<T>(state_); }
    const R& refusal() const { return std::get<R>(state_); }

private:
    std::variant<T, R> state_;
};

struct PfWitness {
    double p = 0.0;
    double p_max = 0.0;
    double eta = 0.0;
    Vector xi;
};

struct M1Witness {
    double eta = 0.0;
    Vector xi;
    bool gamma_ok = true;
    double condition3 = std::numeric_limits<double>::infinity();
};

struct EigenWitness {
    double lambda0 = 0.0;
    Vector xi;  // normalized to ||xi||_mu = 1
    double dirichlet = 0.0;
};

struct PartitionWitness {
    Vector thresholds;
    std::vector<std::vector<std::size_t>> groups;
    DenseMatrix qf;
    Vector beta_f;
    Vector xi_f;
    bool mmatrix_literal = false;
    // -(Q^F + diag beta^F) xi^F, componentwise.
    Vector lambda_f;
};

using Witness = std::variant<PfWitness, M1Witness, EigenWitness, PartitionWitness>;

struct StabilityCertificate {
    Route route;
    Witness witness;
    // sum_i mu_i beta_i; NaN for the partition route (no stationary law).
    double averaging = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;
};

using CertifyOutcome = Outcome<StabilityCertificate>;

/// sum_i mu_i beta_i, summed left to right.
inline double averaging_value(const StationaryDist& dist, const BetaVector& beta) {
    if (dist.mu.size() != beta.size()) {
        throw Error(ErrorKind::DimensionMismatch, "mu and beta lengths differ");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) s += dist.mu[i] * beta.beta[i];
    return s;
}

inline DenseMatrix tilted_generator(const Generator& g, const BetaVector& beta, double p) {
    DenseMatrix m = g.rates();
    for (std::size_t i = 0; i < g.size(); ++i) m(i, i) += p * beta.beta[i];
    return m;
}

/// min over beta_i > 0 of -q_ii / beta_i; +inf when no beta is positive.
inline double condition3_value(const Generator& g, const BetaVector& beta) {
    double v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (beta.beta[i] > 0.0) v = std::min(v, g.exit_rate(i) / beta.beta[i]);
    return v;
}

// ||(Q + p diag beta) xi + eta xi||_inf / ||xi||_inf
inline double eigen_residual(const DenseMatrix& m, double eta, const Vector& xi) {
    Vector r = m * xi;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += eta * xi[i];
    return norm_inf(r) / norm_inf(xi);
}

/// Averaging route: find p in (0, p_max] with the Perron root of Q + p diag(beta)
/// negative; the Perron vector is the witness.
inline CertifyOutcome pf_certificate(const Generator& g, const BetaVector& beta,
                                     const Tolerances& tol = kDefaultTolerances) {
    if (beta.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "beta length");
    const StationaryDist dist = stationary(g, tol);
    const double avg = averaging_value(dist, beta);
    if (!(avg < 0.0)) {
        return Refusal{Route::AveragingPF, RefusalReason::NotApplicable,
                       "averaging value " + std::to_string(avg) + " is not negative", avg};
    }
    double p_max = 1.0;
    if (beta.sup() > 0.0) p_max = std::min(1.0, 0.999 * condition3_value(g, beta));

    for (int k = 0; k <= 40; ++k) {
        const double p = std::ldexp(p_max, -k);
        const DenseMatrix qp = tilted_generator(g, beta, p);
        const EigenPair pair = perron_pair(qp, tol);
        const double eta = -pair.value;
        if (eta > tol.positive_rate) {
            StabilityCertificate cert{Route::AveragingPF, PfWitness{p, p_max, eta, pair.vector}, avg,
                                      eigen_residual(qp, eta, pair.vector)};
            return cert;
        }
    }
    return Refusal{Route::AveragingPF, RefusalReason::NoWitnessFound,
                   "no grid value of p gave a negative Perron root", avg};
}

/// Route with the integrable perturbation: conditions on -q_ii/beta_i and the
/// averaging value, then a Perron witness of Q + diag(beta).
inline CertifyOutcome m1_certificate(const Generator& g, const BetaVector& beta,
                                     const std::optional<GammaSpec>& gamma = std::nullopt,
                                     const Tolerances& tol = kDefaultTolerances) {
    if (beta.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "beta length");
    const bool gamma_ok = !gamma || gamma->integrable();
    if (!gamma_ok) {
        return Refusal{Route::M1, RefusalReason::GammaNotIntegrable,
                       "gamma must be a nonnegative combination of the integrable forms"};
    }
    const StationaryDist dist = stationary(g, tol);
    const double avg = averaging_value(dist, beta);
    const double c3 = condition3_value(g, beta);
    if (!(c3 > 1.0)) {
        return Refusal{Route::M1, RefusalReason::Condition3Failed,
                       "min -q_ii/beta_i over beta_i > 0 is " + std::to_string(c3) + ", needs > 1",
                       c3};
    }
    if (!(avg < 0.0)) {
        return Refusal{Route::M1, RefusalReason::NotApplicable,
                       "averaging value " + std::to_string(avg) + " is not negative", avg};
    }
    const DenseMatrix q1 = tilted_generator(g, beta, 1.0);
    const EigenPair pair = perron_pair(q1, tol);
    const double eta = -pair.value;
    if (!(eta > tol.positive_rate)) {
        return Refusal{Route::M1, RefusalReason::NoWitnessFound,
                       "Perron root of Q + diag(beta) is " + std::to_string(pair.value), pair.value};
    }
    return StabilityCertificate{Route::M1, M1Witness{eta, pair.vector, gamma_ok, c3}, avg,
                                eigen_residual(q1, eta, pair.vector)};
}

/// D(f) = 1/2 sum_ij mu_i q_ij (f_j - f_i)^2 - sum_i mu_i beta_i f_i^2.
inline double dirichlet_form(const Generator& g, const StationaryDist& dist, const BetaVector& beta,
                             std::span<const double> f) {
    double jump = 0.0;
    double pot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (i == j) continue;
            const double d = f[j] - f[i];
            jump += dist.mu[i] * g.rate(i, j) * d * d;
        }
        pot += dist.mu[i] * beta.beta[i] * f[i] * f[i];
    }
    return 0.5 * jump - pot;
}

inline double mu_norm_sq(const StationaryDist& dist, std::span<const double> f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += dist.mu[i] * f[i] * f[i];
    return s;
}

/// Principal eigenvalue route (reversible chains only): lambda_0 is the
/// smallest eigenvalue of D^{1/2}(-Q - diag beta)D^{-1/2}.
inline CertifyOutcome principal_eigenvalue(const Generator& g, const StationaryDist& dist,
                                           const BetaVector& beta,
                                           const Tolerances& tol = kDefaultTolerances) {
    if (beta.size() != g.size()) throw Error(ErrorKind::DimensionMismatch, "beta length");
    const double avg = averaging_value(dist, beta);
    if (!reversibility(g, dist, tol)) {
        return Refusal{Route::PrincipalEigen, RefusalReason::NotReversible,
                       "detailed balance defect " + std::to_string(detailed_balance_defect(g, dist)),
                       detailed_balance_defect(g, dist)};
    }
    DenseMatrix op = -tilted_generator(g, beta, 1.0);
    const DenseMatrix s = similarity_by_sqrt_mu(op, dist);
    const EigenPair low = sym_eig_extreme(s, Extreme::Min, tol);
    const double lambda0 = low.value;
    if (!(lambda0 > tol.positive_rate)) {
        return Refusal{Route::PrincipalEigen, RefusalReason::NoWitnessFound,
                       "principal eigenvalue " + std::to_string(lambda0) + " is not positive",
                       lambda0};
    }
    Vector xi(g.size());
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = low.vector[i] / std::sqrt(dist.mu[i]);
    const double scale = std::sqrt(mu_norm_sq(dist, xi));
    for (double& x : xi) x /= scale;
    if (!strictly_positive(xi, tol.strict_positive)) {
        return Refusal{Route::PrincipalEigen, RefusalReason::NoWitnessFound,
                       "principal eigenvector is not strictly positive"};
    }
    const double dform = dirichlet_form(g, dist, beta, xi);
    const double form_gap = std::abs(dform - lambda0 * mu_norm_sq(dist, xi));
    const double identity_gap = eigen_residual(tilted_generator(g, beta, 1.0), lambda0, xi);
    return StabilityCertificate{Route::PrincipalEigen, EigenWitness{lambda0, xi, dform}, avg,
                                std::max(form_gap, identity_gap)};
}

// ---------------------------------------------------------------------------
// Finite partitions and the reduced generator.

/// Birth-death chain on states 1, 2, ... with explicit rates and betas for
/// states 1..L and homogeneous tail laws for j > L:
///   birth  c_j = tail_birth + tail_birth_slope * j
///   death  a_j = tail_death + tail_death_slope * j
///   beta_j = beta_limit - beta_scale / j + beta_slope * j   (beta_scale >= 0)
struct BirthDeathChain {
    Vector prefix_birth;  // c_1..c_L
    Vector prefix_death;  // a_1..a_L, a_1 must be 0
    Vector prefix_beta;   // beta_1..beta_L
    double tail_birth = 0.0;
    double tail_birth_slope = 0.0;
    double tail_death = 0.0;
    double tail_death_slope = 0.0;
    double beta_limit = 0.0;
    double beta_scale = 0.0;
    double beta_slope = 0.0;

    std::size_t prefix_length() const { return prefix_beta.size(); }

    double birth(std::size_t j) const {
        return j <= prefix_length() ? prefix_birth[j - 1]
                                    : tail_birth + tail_birth_slope * static_cast<double>(j);
    }
    double death(std::size_t j) const {
        if (j == 1) return 0.0;
        return j <= prefix_length() ? prefix_death[j - 1]
                                    : tail_death + tail_death_slope * static_cast<double>(j);
    }
    double beta(std::size_t j) const {
        const auto jj = static_cast<double>(j);
        return j <= prefix_length() ? prefix_beta[j - 1]
                                    : beta_limit - beta_scale / jj + beta_slope * jj;
    }

    /// Throws UnboundedRates / UnboundedBeta when sup(-q_ii) or sup beta is infinite.
    void validate() const {
        const std::size_t l = prefix_length();
        if (l == 0 || prefix_birth.size() != l || prefix_death.size() != l) {
            throw Error(ErrorKind::DimensionMismatch, "birth-death prefix arrays must share a length");
        }
        if (prefix_death[0] != 0.0) {
            throw Error(ErrorKind::InvalidArgument, "state 1 has no lower neighbour (a_1 must be 0)");
        }
        for (std::size_t j = 0; j < l; ++j) {
            if (prefix_birth[j] <= 0.0 || (j > 0 && prefix_death[j] <= 0.0)) {
                throw Error(ErrorKind::NegativeRate, "birth-death rates must be positive", j);
            }
        }
        if (tail_birth_slope > 0.0 || tail_death_slope > 0.0) {
            throw Error(ErrorKind::UnboundedRates, "tail rates grow without bound");
        }
        if (tail_birth_slope < 0.0 || tail_death_slope < 0.0 || tail_birth <= 0.0 ||
            tail_death <= 0.0) {
            throw Error(ErrorKind::NegativeRate, "tail rates must be positive constants");
        }
        if (beta_slope > 0.0) throw Error(ErrorKind::UnboundedBeta, "tail beta grows without bound");
        if (beta_slope < 0.0 || beta_scale < 0.0) {
            throw Error(ErrorKind::InvalidArgument, "tail beta must increase to its limit");
        }
    }

    /// sup_j beta_j (the tail supremum is the limit, possibly not attained).
    double sup_beta() const {
        double k = beta_limit;
        for (double b : prefix_beta) k = std::max(k, b);
        return k;
    }
};

/// Groups F_1..F_{m+1}: F_i = {j : beta_j in (k_{i-1}, k_i]}, k_0 = -inf, k_{m+1} = K.
/// Explicit members are listed; on a countable chain every state >= tail_start
/// belongs to tail_group as well.
struct PartitionSpec {
    Vector thresholds;
    double sup_beta = 0.0;
    std::vector<std::vector<std::size_t>> members;
    std::optional<std::size_t> tail_group;
    std::size_t tail_start = 0;

    std::size_t group_count() const { return members.size(); }
};

namespace detail {

inline void check_thresholds(std::span<const double> thresholds, double sup_beta) {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!std::isfinite(thresholds[i])) {
            throw Error(ErrorKind::NonFinite, "threshold is not finite", i);
        }
        if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
            throw Error(ErrorKind::UnsortedThresholds, "thresholds must increase strictly", i);
        }
        if (thresholds[i] > sup_beta) {
            throw Error(ErrorKind::UnsortedThresholds,
                        "threshold exceeds sup beta = " + std::to_string(sup_beta), i);
        }
    }
}

/// First i with value <= k_i, or m (the last group).
inline std::size_t group_of_value(std::span<const double> thresholds, double value) {
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        if (value <= thresholds[i]) return i;
    return thresholds.size();
}

inline void require_nonempty(const PartitionSpec& part) {
    for (std::size_t i = 0; i < part.group_count(); ++i) {
        if (part.members[i].empty() && part.tail_group != i) {
            throw Error(ErrorKind::EmptyGroup, "group F_" + std::to_string(i + 1) + " is empty", i);
        }
    }
}

} // namespace detail

/// Partition of a finite mode set (0-based indices) by beta thresholds.
inline PartitionSpec build_partition(const BetaVector& beta, std::span<const double> thresholds) {
    const double k = beta.sup();
    detail::check_thresholds(thresholds, k);
    PartitionSpec part{Vector(thresholds.begin(), thresholds.end()), k,
                       std::vector<std::vector<std::size_t>>(thresholds.size() + 1), std::nullopt, 0};
    for (std::size_t j = 0; j < beta.size(); ++j) {
        part.members[detail::group_of_value(thresholds, beta.beta[j])].push_back(j);
    }
    detail::require_nonempty(part);
    return part;
}

/// Partition of a countable birth-death chain (1-based state labels).
inline PartitionSpec build_partition(const BirthDeathChain& chain,
                                     std::span<const double> thresholds) {
    chain.validate();
    const double k = chain.sup_beta();
    detail::check_thresholds(thresholds, k);

    const std::size_t tail_group = detail::group_of_value(thresholds, chain.beta_limit);
    // Smallest state beyond which every beta_j lands in tail_group.
    std::size_t start = chain.prefix_length() + 1;
    if (tail_group > 0 && chain.beta_scale > 0.0) {
        const double lower = thresholds[tail_group - 1];
        const double estimate = chain.beta_scale / (chain.beta_limit - lower);
        if (!(estimate < 1e7)) {
            throw Error(ErrorKind::InvalidArgument, "threshold too close to the tail limit");
        }
        start = std::max(start, static_cast<std::size_t>(estimate) + 1);
        while (start > chain.prefix_length() + 1 && chain.beta(start - 1) > lower) --start;
        while (!(chain.beta(start) > lower)) ++start;
    }

    PartitionSpec part{Vector(thresholds.begin(), thresholds.end()), k,
                       std::vector<std::vector<std::size_t>>(thresholds.size() + 1), tail_group,
                       start};
    for (std::size_t j = 1; j < start; ++j) {
        part.members[detail::group_of_value(thresholds, chain.beta(j))].push_back(j);
    }
    detail::require_nonempty(part);
    return part;
}

struct ReducedChain {
    DenseMatrix qf;
    Vector beta_f;
};

namespace detail {

// q^F_ij = sup_{r in F_i} flux(r, j) for j < i, inf for j > i; diagonal closes rows.
template <class Flux>
DenseMatrix assemble_reduced(std::size_t groups, const std::vector<std::vector<std::size_t>>& reps,
                             Flux flux) {
    DenseMatrix qf(groups, groups);
    for (std::size_t i = 0; i < groups; ++i) {
        for (std::size_t j = 0; j < groups; ++j) {
            if (i == j) continue;
            double v = j < i ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();
            for (std::size_t r : reps[i]) {
                const double f = flux(r, j);
                v = j < i ? std::max(v, f) : std::min(v, f);
            }
            qf(i, j) = v;
        }
        double row = 0.0;
        for (std::size_t j = 0; j < groups; ++j)
            if (j != i) row += qf(i, j);
        qf(i, i) = -row;
    }
    return qf;
}

} // namespace detail

/// Reduced generator of a finite chain.
inline ReducedChain reduced_generator(const Generator& g, const BetaVector& beta,
                                      const PartitionSpec& part) {
    const std::size_t groups = part.group_count();
    std::vector<std::size_t> group_of(g.size());
    for (std::size_t i = 0; i < groups; ++i)
        for (std::size_t r : part.members[i]) group_of[r] = i;

    auto flux = [&](std::size_t r, std::size_t target) {
        double s = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (k != r && group_of[k] == target) s += g.rate(r, k);
        return s;
    };
    ReducedChain out{detail::assemble_reduced(groups, part.members, flux), Vector(groups)};
    for (std::size_t i = 0; i < groups; ++i) {
        double b = -std::numeric_limits<double>::infinity();
        for (std::size_t r : part.members[i]) b = std::max(b, beta.beta[r]);
        out.beta_f[i] = b;
    }
    return out;
}

/// Reduced generator of a countable birth-death chain; the sup/inf over the
/// infinite tail group is exact because states beyond tail_start + 1 only
/// exchange mass inside the tail group.
inline ReducedChain reduced_generator(const BirthDeathChain& chain, const PartitionSpec& part) {
    chain.validate();
    if (!part.tail_group) {
        throw Error(ErrorKind::InvalidArgument, "partition was not built for a countable chain");
    }
    const std::size_t groups = part.group_count();
    const std::size_t tail = *part.tail_group;
    auto group_of = [&](std::size_t j) {
        return j >= part.tail_start ? tail : detail::group_of_value(part.thresholds, chain.beta(j));
    };

    // Representatives: every explicit state plus tail_start and tail_start + 1.
    std::vector<std::vector<std::size_t>> reps = part.members;
    reps[tail].push_back(part.tail_start);
    reps[tail].push_back(part.tail_start + 1);

    auto flux = [&](std::size_t r, std::size_t target) {
        double s = 0.0;
        if (r > 1 && group_of(r - 1) == target) s += chain.death(r);
        if (group_of(r + 1) == target) s += chain.birth(r);
        return s;
    };
    ReducedChain out{detail::assemble_reduced(groups, reps, flux), Vector(groups)};
    for (std::size_t i = 0; i < groups; ++i) {
        double b = -std::numeric_limits<double>::infinity();
        for (std::size_t r : part.members[i]) b = std::max(b, chain.beta(r));
        if (i == tail) b = std::max(b, chain.beta_limit);
        out.beta_f[i] = b;
    }
    return out;
}

/// Upper-triangular all-ones matrix H_{m+1}.
inline DenseMatrix upper_ones(std::size_t n) {
    DenseMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) h(i, j) = 1.0;
    return h;
}

/// Literal test: M = -(Q^F + diag beta^F) H is a nonsingular M-matrix, decided
/// by the Z-sign pattern plus M^{-1} 1 >> 0.
inline bool literal_mmatrix_test(const DenseMatrix& shifted, const Tolerances& tol) {
    const std::size_t n = shifted.rows();
    const DenseMatrix m = -(shifted * upper_ones(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && m(i, j) > 0.0) return false;
    try {
        return strictly_positive(solve_linear(m, Vector(n, 1.0), tol), tol.strict_positive);
    } catch (const Error&) {
        return false;
    }
}

/// Partition route. Certifies iff (Q^F + diag beta^F) xi = -1 has xi >> 0;
/// the literal M-matrix test is reported alongside.
inline CertifyOutcome partition_certificate(const DenseMatrix& qf, std::span<const double> beta_f,
                                            const Tolerances& tol = kDefaultTolerances) {
    if (!qf.is_square() || qf.rows() != beta_f.size()) {
        throw Error(ErrorKind::DimensionMismatch, "Q^F and beta^F sizes differ");
    }
    const std::size_t n = qf.rows();
    DenseMatrix shifted = qf;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) += beta_f[i];
    const bool literal = literal_mmatrix_test(shifted, tol);

    Vector xi;
    try {
        xi = solve_linear(shifted, Vector(n, -1.0), tol);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingularMatrix) throw;
        return Refusal{Route::Partition, RefusalReason::NoWitnessFound,
                       "Q^F + diag(beta^F) is singular"};
    }
    if (!strictly_positive(xi, tol.strict_positive)) {
        return Refusal{Route::Partition, RefusalReason::NoWitnessFound,
                       "solution of (Q^F + diag beta^F) xi = -1 is not strictly positive",
                       *std::min_element(xi.begin(), xi.end())};
    }
    const Vector image = shifted * xi;
    Vector lambda(n);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        lambda[i] = -image[i];
        worst = std::max(worst, image[i]);
    }
    return StabilityCertificate{
        Route::Partition,
        PartitionWitness{{}, {}, qf, Vector(beta_f.begin(), beta_f.end()), xi, literal, lambda},
        std::numeric_limits<double>::quiet_NaN(), std::abs(1.0 + worst)};
}

/// Same, recording the partition inside the witness.
inline CertifyOutcome partition_certificate(const ReducedChain& reduced, const PartitionSpec& part,
                                            const Tolerances& tol = kDefaultTolerances) {
    CertifyOutcome out = partition_certificate(reduced.qf, reduced.beta_f, tol);
    if (!out.ok()) return out;
    StabilityCertificate cert = out.value();
    auto& w = std::get<PartitionWitness>(cert.witness);
    w.thresholds = part.thresholds;
    w.groups = part.members;
    return cert;
}

/// Recomputes a certificate's defining inequality from scratch. Returns true
/// when the stored witness still satisfies it. The generator/beta are ignored
/// for the partition route, which carries its own reduced data.
inline bool recheck(const StabilityCertificate& cert, const Generator& g, const BetaVector& beta,
                    const Tolerances& tol = kDefaultTolerances) {
    if (const auto* w = std::get_if<PfWitness>(&cert.witness)) {
        const double r = eigen_residual(tilted_generator(g, beta, w->p), w->eta, w->xi);
        return w->eta > tol.positive_rate && w->p <= std::min(1.0, w->p_max) &&
               strictly_positive(w->xi, tol.strict_positive) && r <= tol.certificate_residual;
    }
    if (const auto* w = std::get_if<M1Witness>(&cert.witness)) {
        const double r = eigen_residual(tilted_generator(g, beta, 1.0), w->eta, w->xi);
        return w->eta > tol.positive_rate && w->condition3 > 1.0 &&
               strictly_positive(w->xi, tol.strict_positive) && r <= tol.certificate_residual;
    }
    if (const auto* w = std::get_if<EigenWitness>(&cert.witness)) {
        const StationaryDist dist = stationary(g, tol);
        const double gap = std::abs(dirichlet_form(g, dist, beta, w->xi) -
                                    w->lambda0 * mu_norm_sq(dist, w->xi));
        const double ident = eigen_residual(tilted_generator(g, beta, 1.0), w->lambda0, w->xi);
        return w->lambda0 > tol.positive_rate && strictly_positive(w->xi, tol.strict_positive) &&
               gap <= tol.certificate_residual && ident <= tol.certificate_residual;
    }
    const auto& w = std::get<PartitionWitness>(cert.witness);
    DenseMatrix shifted = w.qf;
    for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, i) += w.beta_f[i];
    const Vector image = shifted * w.xi_f;
    return strictly_positive(w.xi_f, tol.strict_positive) &&
           std::all_of(image.begin(), image.end(),
                       [&](double v) { return v < -tol.strict_positive; });
}

} // namespace swstab
