#pragma once

#include <cstddef>

#include "swstab/error.hpp"

namespace swstab {

// Every numerical threshold used by the library. Defaults are the tightest
// values the library supports; a caller may pass a Tolerances with larger
// values (wider acceptance) but never smaller ones.
struct Tolerances {
    // solve_linear: a pivot below singular_pivot * ||A||_F is singular.
    double singular_pivot = 1e-13;
    // perron_pair: stop when successive Rayleigh quotients differ by less.
    double perron_rayleigh = 1e-12;
    // perron_pair: relative residual required on return.
    double perron_residual = 1e-10;
    std::size_t perron_max_iterations = 100000;
    // Jacobi sweeps stop when the off-diagonal Frobenius norm < this * ||S||_F.
    double jacobi_offdiag = 1e-12;
    std::size_t jacobi_max_sweeps = 100;
    // Allowed asymmetry ||S - S^T||_F <= symmetry * ||S||_F.
    double symmetry = 1e-10;

    // Generator row sums (relative to max(1, row scale)).
    double row_sum = 1e-12;
    // Stationary distribution residual ||mu Q||_inf (relative to max(1, ||Q||_max)).
    double stationary_residual = 1e-10;
    // Detailed balance |mu_i q_ij - mu_j q_ji| <= reversibility * max |q_ij|.
    double reversibility = 1e-9;

    // Strict positivity: v >> 0 means every v_i > strict_positive * ||v||_inf.
    double strict_positive = 1e-10;
    // A certificate decay rate (eta, lambda_0) must exceed this.
    double positive_rate = 1e-10;
    // Stored certificate residuals must stay below this.
    double certificate_residual = 1e-8;

    // LMI: Gamma positive definite with this margin; blocks need
    // max eigenvalue < -lmi_strict.
    double gamma_margin = 1e-9;
    double lmi_strict = 1e-6;
};

inline constexpr Tolerances kDefaultTolerances{};

/// Throws InvalidArgument when any field is tighter than the default.
inline void require_not_narrower(const Tolerances& t) {
    const Tolerances& d = kDefaultTolerances;
    const bool narrower = t.singular_pivot < d.singular_pivot ||
                          t.perron_rayleigh < d.perron_rayleigh ||
                          t.perron_residual < d.perron_residual ||
                          t.perron_max_iterations < d.perron_max_iterations ||
                          t.jacobi_offdiag < d.jacobi_offdiag ||
                          t.jacobi_max_sweeps < d.jacobi_max_sweeps ||
                          t.symmetry < d.symmetry || t.row_sum < d.row_sum ||
                          t.stationary_residual < d.stationary_residual ||
                          t.reversibility < d.reversibility ||
                          t.strict_positive < d.strict_positive ||
                          t.positive_rate < d.positive_rate ||
                          t.certificate_residual < d.certificate_residual ||
                          t.gamma_margin < d.gamma_margin || t.lmi_strict < d.lmi_strict;
    if (narrower) {
        throw Error(ErrorKind::InvalidArgument, "tolerances may be widened, not narrowed");
    }
}

} // namespace swstab
