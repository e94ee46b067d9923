#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "swstab/certify.hpp"
#include "swstab/error.hpp"
#include "swstab/markov.hpp"
#include "swstab/matrix.hpp"
#include "swstab/model.hpp"
#include "swstab/numerics.hpp"
#include "swstab/tolerances.hpp"

namespace swstab {

struct LmiCandidate {
    DenseMatrix gamma;
    std::vector<DenseMatrix> y;  // one l x n matrix per mode
    Vector alpha;
};

struct FeedbackSynthesis {
    LmiCandidate candidate;
    std::vector<DenseMatrix> gains;  // K_i = Y_i Gamma^{-1}
    Vector margins;                  // max eigenvalue of each block
    double averaging = 0.0;          // sum mu_i alpha_i
    // max eigenvalue of P(A+BK) + (A+BK)^T P + sum C^T P C - alpha P, P = Gamma^{-1}
    Vector congruence_margins;
    bool schur_agrees = true;
    std::size_t iterations = 0;
};

enum class LmiFailure { GammaNotPD, AveragingFailed, BlockNotND, SolverStalled };

inline const char* to_string(LmiFailure f) {
    switch (f) {
    case LmiFailure::GammaNotPD: return "GammaNotPD";
    case LmiFailure::AveragingFailed: return "AveragingFailed";
    case LmiFailure::BlockNotND: return "BlockNotND";
    case LmiFailure::SolverStalled: return "SolverStalled";
    }
    return "?";
}

struct LmiRefusal {
    LmiFailure failure;
    std::string detail;
    std::size_t mode = Error::npos;  // BlockNotND
    double value = std::numeric_limits<double>::quiet_NaN();
    bool not_controllable_hint = false;
};

using LmiOutcome = Outcome<FeedbackSynthesis, LmiRefusal>;

namespace detail {

inline const LinearMode& controlled_mode(const SwitchingModel& model, std::size_t i) {
    const auto* lin = std::get_if<LinearMode>(&model.modes()[i]);
    if (!lin) {
        throw Error(ErrorKind::InvalidArgument,
                    "mode " + std::to_string(i) + " is not linear; feedback synthesis needs A, B", i);
    }
    if (!lin->input) {
        throw Error(ErrorKind::InvalidArgument,
                    "mode " + std::to_string(i) + " has no input matrix B", i);
    }
    return *lin;
}

inline void check_candidate(const SwitchingModel& model, const LmiCandidate& cand,
                            const Tolerances& tol) {
    const std::size_t n = model.dimension();
    if (cand.gamma.rows() != n || cand.gamma.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "Gamma is " + cand.gamma.shape());
    }
    if (asymmetry(cand.gamma) > tol.symmetry * std::max(1.0, cand.gamma.frobenius_norm())) {
        throw Error(ErrorKind::NotSymmetric, "Gamma is not symmetric");
    }
    if (cand.y.size() != model.mode_count() || cand.alpha.size() != model.mode_count()) {
        throw Error(ErrorKind::DimensionMismatch, "candidate needs one Y and one alpha per mode");
    }
    for (std::size_t i = 0; i < model.mode_count(); ++i) {
        const LinearMode& mode = controlled_mode(model, i);
        if (cand.y[i].rows() != mode.input->cols() || cand.y[i].cols() != n) {
            throw Error(ErrorKind::DimensionMismatch, "Y of mode " + std::to_string(i) + " is " +
                                                          cand.y[i].shape(), i);
        }
    }
}

} // namespace detail

/// [[Phi, Xi^T], [Xi, Theta]] with Phi = (A G + B Y) + (A G + B Y)^T - alpha G,
/// Xi stacking C_k G and Theta = diag(-G, ..., -G).
inline DenseMatrix assemble_block(const LinearMode& mode, const DenseMatrix& gamma,
                                  const DenseMatrix& y, double alpha) {
    check_linear_mode(mode);
    const std::size_t n = mode.dimension();
    if (gamma.rows() != n || gamma.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "Gamma is " + gamma.shape());
    }
    DenseMatrix ag = mode.drift * gamma;
    if (mode.input) {
        if (y.rows() != mode.input->cols() || y.cols() != n) {
            throw Error(ErrorKind::DimensionMismatch, "Y is " + y.shape() + ", B is " +
                                                          mode.input->shape());
        }
        ag += *mode.input * y;
    } else if (y.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "Y is " + y.shape());
    }
    const std::size_t m = mode.noise.size();
    DenseMatrix block(n * (m + 1), n * (m + 1));
    block.set_block(0, 0, ag + ag.transpose() - alpha * gamma);
    for (std::size_t k = 0; k < m; ++k) {
        const DenseMatrix cg = mode.noise[k] * gamma;
        block.set_block(n * (k + 1), 0, cg);
        block.set_block(0, n * (k + 1), cg.transpose());
        block.set_block(n * (k + 1), n * (k + 1), -gamma);
    }
    return block;
}

/// M + N P^{-1} N^T for the block [[M, N], [N^T, -P]] with P positive definite.
inline DenseMatrix schur_reduce(const DenseMatrix& block, std::size_t n, std::size_t m,
                                const Tolerances& tol = kDefaultTolerances) {
    if (!block.is_square() || block.rows() != n * (m + 1)) {
        throw Error(ErrorKind::DimensionMismatch, "block is " + block.shape());
    }
    const DenseMatrix top = block.block(0, 0, n, n);
    if (m == 0) return top;
    const DenseMatrix p = -block.block(n, n, n * m, n * m);
    if (!definiteness(p, Sense::Positive, 0.0, tol).holds) {
        throw Error(ErrorKind::NotPositiveDefinite, "trailing block is not negative definite");
    }
    const DenseMatrix nmat = block.block(0, n, n, n * m);
    return top + nmat * inverse(p, tol) * nmat.transpose();
}

/// K_i = Y_i Gamma^{-1}.
inline std::vector<DenseMatrix> feedback_gains(const LmiCandidate& cand,
                                               const Tolerances& tol = kDefaultTolerances) {
    const DenseMatrix gi = inverse(cand.gamma, tol);
    std::vector<DenseMatrix> k;
    k.reserve(cand.y.size());
    for (const auto& y : cand.y) k.push_back(y * gi);
    return k;
}

inline double max_eigenvalue(const DenseMatrix& s, const Tolerances& tol = kDefaultTolerances) {
    return sym_eig(s, tol).values.back();
}

/// Closed-loop Lyapunov inequality in the original coordinates, P = Gamma^{-1}.
inline DenseMatrix congruence_form(const LinearMode& mode, const DenseMatrix& gain,
                                   const DenseMatrix& p, double alpha) {
    DenseMatrix acl = mode.drift;
    if (mode.input) acl += *mode.input * gain;
    DenseMatrix l = p * acl;
    l = l + l.transpose() - alpha * p;
    for (const auto& c : mode.noise) l += c.transpose() * p * c;
    return l;
}

/// Checks a candidate: Gamma > 0, then sum mu alpha < 0, then every block < 0
/// with a strict margin. Throws only on malformed input.
inline LmiOutcome verify(const SwitchingModel& model, const StationaryDist& dist,
                         const LmiCandidate& cand, const Tolerances& tol = kDefaultTolerances) {
    detail::check_candidate(model, cand, tol);
    const std::size_t modes = model.mode_count();
    const std::size_t n = model.dimension();
    if (dist.mu.size() != modes) throw Error(ErrorKind::DimensionMismatch, "mu length");

    const DenseMatrix gamma = 0.5 * (cand.gamma + cand.gamma.transpose());
    const auto pd = definiteness(gamma, Sense::Positive, tol.gamma_margin, tol);
    if (!pd.holds) {
        return LmiRefusal{LmiFailure::GammaNotPD, "Gamma is not positive definite", Error::npos,
                          pd.min_pivot};
    }
    double avg = 0.0;
    for (std::size_t i = 0; i < modes; ++i) avg += dist.mu[i] * cand.alpha[i];
    if (!(avg < 0.0)) {
        return LmiRefusal{LmiFailure::AveragingFailed,
                          "sum mu_i alpha_i = " + std::to_string(avg) + " is not negative",
                          Error::npos, avg};
    }

    FeedbackSynthesis out{cand, feedback_gains(cand, tol), Vector(modes), avg, Vector(modes), true, 0};
    out.candidate.gamma = gamma;
    const DenseMatrix p = inverse(gamma, tol);
    for (std::size_t i = 0; i < modes; ++i) {
        const LinearMode& mode = detail::controlled_mode(model, i);
        const DenseMatrix block = assemble_block(mode, gamma, cand.y[i], cand.alpha[i]);
        const auto nd = definiteness(block, Sense::Negative, tol.lmi_strict, tol);
        out.margins[i] = max_eigenvalue(block, tol);
        if (!nd.holds) {
            return LmiRefusal{LmiFailure::BlockNotND,
                              "block LMI of mode " + std::to_string(i) + " is not negative definite",
                              i, out.margins[i]};
        }
        const DenseMatrix reduced = schur_reduce(block, n, mode.noise.size(), tol);
        const bool full = definiteness(block, Sense::Negative, 0.0, tol).holds;
        const bool red = definiteness(reduced, Sense::Negative, 0.0, tol).holds;
        out.schur_agrees = out.schur_agrees && full == red;
        out.congruence_margins[i] =
            max_eigenvalue(congruence_form(mode, out.gains[i], p, cand.alpha[i]), tol);
    }
    return out;
}

/// Rank of [B, AB, ..., A^{n-1}B].
inline std::size_t controllability_rank(const LinearMode& mode) {
    const std::size_t n = mode.dimension();
    if (!mode.input) return 0;
    const std::size_t l = mode.input->cols();
    DenseMatrix ctrb(n, n * l);
    DenseMatrix power = *mode.input;
    for (std::size_t k = 0; k < n; ++k) {
        ctrb.set_block(0, k * l, power);
        power = mode.drift * power;
    }
    const SymmetricEigen eig = sym_eig(ctrb * ctrb.transpose());
    const double top = std::max(eig.values.back(), 0.0);
    std::size_t rank = 0;
    for (double v : eig.values)
        if (v > 1e-10 * top && v > 0.0) ++rank;
    return rank;
}

struct SynthesisOptions {
    std::size_t max_iterations = 20000;
    double alpha_grid_step = 0.05;
    double averaging_target = -0.1;
    double gamma_floor = 1e-6;
    double penalty = 100.0;
};

namespace detail {

// Re-symmetrize and floor the spectrum of Gamma.
inline DenseMatrix project_gamma(const DenseMatrix& g, double floor) {
    const SymmetricEigen eig = sym_eig(0.5 * (g + g.transpose()));
    const std::size_t n = g.rows();
    DenseMatrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = std::max(eig.values[k], floor);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += lam * eig.vectors(i, k) * eig.vectors(j, k);
    }
    return 0.5 * (out + out.transpose());
}

inline DenseMatrix outer(std::span<const double> a, std::span<const double> b) {
    DenseMatrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

} // namespace detail

/// Stage 1 fixes alpha_i = c_i + t on a descending grid, c_i the open-loop
/// quadratic rate; Stage 2 drives the worst block eigenvalue below zero by
/// normalized projected subgradient steps in (Gamma, Y). The result is always
/// passed through verify().
inline LmiOutcome synthesize(const SwitchingModel& model, const StationaryDist& dist,
                             const SynthesisOptions& opt = {},
                             const Tolerances& tol = kDefaultTolerances) {
    const std::size_t modes = model.mode_count();
    const std::size_t n = model.dimension();
    std::vector<const LinearMode*> lin(modes);
    for (std::size_t i = 0; i < modes; ++i) lin[i] = &detail::controlled_mode(model, i);

    Vector c(modes);
    double c_abs = 0.0;
    double c_avg = 0.0;
    for (std::size_t i = 0; i < modes; ++i) {
        c[i] = beta_quadratic(*lin[i]);
        c_abs = std::max(c_abs, std::abs(c[i]));
        c_avg += dist.mu[i] * c[i];
    }
    const double t0 = std::ceil(c_abs) + 1.0;
    double t = t0;
    for (std::size_t k = 0; c_avg + t > opt.averaging_target; ++k) {
        t = t0 - opt.alpha_grid_step * static_cast<double>(k + 1);
    }
    Vector alpha(modes);
    for (std::size_t i = 0; i < modes; ++i) alpha[i] = c[i] + t;

    LmiCandidate cand{DenseMatrix::identity(n), {}, alpha};
    for (std::size_t i = 0; i < modes; ++i) cand.y.emplace_back(lin[i]->input->cols(), n);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
        double worst = -std::numeric_limits<double>::infinity();
        std::size_t worst_mode = 0;
        Vector v;
        for (std::size_t i = 0; i < modes; ++i) {
            const DenseMatrix block = assemble_block(*lin[i], cand.gamma, cand.y[i], alpha[i]);
            const EigenPair top = sym_eig_extreme(block, Extreme::Max, tol);
            if (top.value > worst) {
                worst = top.value;
                worst_mode = i;
                v = top.vector;
            }
        }
        const double gmin = sym_eig(cand.gamma, tol).values.front();
        const double f = worst + opt.penalty * std::max(0.0, opt.gamma_floor - gmin);
        best = std::min(best, f);
        if (f < -tol.lmi_strict) {
            LmiOutcome checked = verify(model, dist, cand, tol);
            if (checked.ok()) {
                FeedbackSynthesis out = checked.value();
                out.iterations = iter;
                return out;
            }
        }

        const LinearMode& mode = *lin[worst_mode];
        const std::span<const double> v0(v.data(), n);
        const DenseMatrix vv = detail::outer(v0, v0);
        DenseMatrix grad_g = mode.drift.transpose() * vv + vv * mode.drift - alpha[worst_mode] * vv;
        for (std::size_t k = 0; k < mode.noise.size(); ++k) {
            const std::span<const double> vk(v.data() + n * (k + 1), n);
            const DenseMatrix kv = detail::outer(vk, v0);
            grad_g += mode.noise[k].transpose() * kv + kv.transpose() * mode.noise[k];
            grad_g -= detail::outer(vk, vk);
        }
        grad_g = 0.5 * (grad_g + grad_g.transpose());
        const DenseMatrix grad_y = 2.0 * (mode.input->transpose() * vv);

        const double gnorm = std::hypot(grad_g.frobenius_norm(), grad_y.frobenius_norm());
        const double step = 1.0 / (1.0 + static_cast<double>(iter)) / std::max(gnorm, 1e-12);
        cand.gamma = detail::project_gamma(cand.gamma - step * grad_g, opt.gamma_floor);
        cand.y[worst_mode] -= step * grad_y;
    }

    LmiRefusal stalled{LmiFailure::SolverStalled,
                       "no feasible point after " + std::to_string(opt.max_iterations) +
                           " iterations; best worst-block eigenvalue " + std::to_string(best),
                       Error::npos, best};
    for (std::size_t i = 0; i < modes; ++i) {
        if (controllability_rank(*lin[i]) < n) {
            stalled.not_controllable_hint = true;
            stalled.mode = i;
            stalled.detail += "; NotControllableHint: mode " + std::to_string(i) +
                              " has an uncontrollable (A, B) pair";
            break;
        }
    }
    return stalled;
}

} // namespace swstab
