#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swstab/error.hpp"
#include "swstab/markov.hpp"
#include "swstab/matrix.hpp"
#include "swstab/numerics.hpp"

namespace swstab {

/// dX = A X dt + sum_k C_k X dW_k (+ B u dt when an input matrix is given).
struct LinearMode {
    DenseMatrix drift;
    std::vector<DenseMatrix> noise;
    std::optional<DenseMatrix> input;

    std::size_t dimension() const { return drift.rows(); }
};

/// One of the registered closed-form scalar dynamics (see fixture_ids()).
/// `parameter` is used by parametrized fixtures, e.g. the drift rate of "sec5".
struct NonlinearMode {
    std::string fixture;
    double parameter = 0.0;
};

using ModeDynamics = std::variant<LinearMode, NonlinearMode>;

namespace fixtures {

// Scalar drift b(x, t) and single diffusion column sigma(x, t).
struct ScalarField {
    double drift;
    double diffusion;
};

inline constexpr std::array<std::string_view, 7> kIds = {
    "ex2.0", "ex2.1", "ex2.2", "ex43.0", "ex43.1", "ex43.2", "sec5",
};

inline bool known(std::string_view id) {
    return std::find(kIds.begin(), kIds.end(), id) != kIds.end();
}

inline ScalarField evaluate(std::string_view id, double x, double t, double parameter) {
    if (id == "ex2.0") return {x / 4.0, 1.0 / (1.0 + t)};
    if (id == "ex2.1") return {std::sin(x) / (1.0 + t), x / 2.0};
    if (id == "ex2.2") return {std::exp(-t) - 5.0 * x - 2.0 * x * x * x, x * std::sin(t)};
    if (id == "ex43.0") return {-x / 8.0, 1.0 / (1.0 + t)};
    if (id == "ex43.1") return {std::sin(x) / (1.0 + t), x};
    if (id == "ex43.2") return {std::exp(-t) - x / 6.0 - 2.0 * x * x * x, x * std::sin(t) / 2.0};
    if (id == "sec5") return {parameter * x, std::min(x * x, std::abs(x))};
    throw Error(ErrorKind::UnknownFixture, "no nonlinear fixture named '" + std::string(id) + "'");
}

} // namespace fixtures

inline std::size_t dimension_of(const ModeDynamics& mode) {
    if (const auto* lin = std::get_if<LinearMode>(&mode)) return lin->dimension();
    return 1;
}

/// Validates the shapes inside one linear mode.
inline void check_linear_mode(const LinearMode& mode) {
    const std::size_t n = mode.drift.rows();
    if (!mode.drift.is_square()) throw Error(ErrorKind::DimensionMismatch, "drift matrix not square");
    for (std::size_t k = 0; k < mode.noise.size(); ++k) {
        if (mode.noise[k].rows() != n || mode.noise[k].cols() != n) {
            throw Error(ErrorKind::DimensionMismatch,
                        "noise matrix " + std::to_string(k) + " is " + mode.noise[k].shape(), k);
        }
    }
    if (mode.input && mode.input->rows() != n) {
        throw Error(ErrorKind::DimensionMismatch, "input matrix has " +
                                                      std::to_string(mode.input->rows()) + " rows");
    }
}

/// Integrable perturbation gamma_t = sum of c (1+t)^-2 and c e^{-2t} terms.
struct GammaTerm {
    enum class Form { InverseSquare, ExpDecay };
    Form form;
    double coefficient;
};

struct GammaSpec {
    std::vector<GammaTerm> terms;

    bool integrable() const {
        return std::all_of(terms.begin(), terms.end(), [](const GammaTerm& t) {
            return std::isfinite(t.coefficient) && t.coefficient >= 0.0;
        });
    }

    double at(double t) const {
        double g = 0.0;
        for (const auto& term : terms) {
            g += term.form == GammaTerm::Form::InverseSquare
                     ? term.coefficient / ((1.0 + t) * (1.0 + t))
                     : term.coefficient * std::exp(-2.0 * t);
        }
        return g;
    }

    /// Integral over [0, inf): c for (1+t)^-2, c/2 for e^{-2t}.
    double integral() const {
        double s = 0.0;
        for (const auto& term : terms) {
            s += term.form == GammaTerm::Form::InverseSquare ? term.coefficient
                                                             : 0.5 * term.coefficient;
        }
        return s;
    }
};

class SwitchingModel {
public:
    SwitchingModel(Generator generator, std::vector<ModeDynamics> modes,
                   std::optional<GammaSpec> gamma = std::nullopt)
        : generator_(std::move(generator)), modes_(std::move(modes)), gamma_(std::move(gamma)) {
        if (modes_.size() != generator_.size()) {
            throw Error(ErrorKind::DimensionMismatch,
                        std::to_string(modes_.size()) + " modes for a " +
                            std::to_string(generator_.size()) + "-state generator");
        }
        dimension_ = dimension_of(modes_.front());
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            if (const auto* lin = std::get_if<LinearMode>(&modes_[i])) {
                check_linear_mode(*lin);
            } else if (!fixtures::known(std::get<NonlinearMode>(modes_[i]).fixture)) {
                throw Error(ErrorKind::UnknownFixture,
                            "mode " + std::to_string(i) + " names an unknown fixture", i);
            }
            if (dimension_of(modes_[i]) != dimension_) {
                throw Error(ErrorKind::DimensionMismatch,
                            "mode " + std::to_string(i) + " has a different state dimension", i);
            }
        }
        if (gamma_ && !gamma_->integrable()) {
            throw Error(ErrorKind::InvalidArgument, "gamma coefficients must be finite and >= 0");
        }
    }

    const Generator& generator() const noexcept { return generator_; }
    const std::vector<ModeDynamics>& modes() const noexcept { return modes_; }
    const std::optional<GammaSpec>& gamma() const noexcept { return gamma_; }
    std::size_t mode_count() const noexcept { return modes_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }

    bool all_linear() const {
        return std::all_of(modes_.begin(), modes_.end(), [](const ModeDynamics& m) {
            return std::holds_alternative<LinearMode>(m);
        });
    }

private:
    Generator generator_;
    std::vector<ModeDynamics> modes_;
    std::optional<GammaSpec> gamma_;
    std::size_t dimension_ = 0;
};

/// Smallest beta with 2<x, A x> + sum_k |C_k x|^2 <= beta |x|^2, i.e. the top
/// eigenvalue of A + A^T + sum_k C_k^T C_k.
inline double beta_quadratic(const LinearMode& mode) {
    check_linear_mode(mode);
    DenseMatrix s = mode.drift + mode.drift.transpose();
    for (const auto& c : mode.noise) s += c.transpose() * c;
    return sym_eig_extreme(s, Extreme::Max).value;
}

enum class BetaSource { Computed, Supplied };

struct BetaVector {
    Vector beta;
    std::vector<BetaSource> provenance;

    double sup() const { return *std::max_element(beta.begin(), beta.end()); }
    std::size_t size() const { return beta.size(); }
};

inline BetaVector make_beta(Vector values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw Error(ErrorKind::NonFinite, "beta is not finite", i);
    }
    std::vector<BetaSource> src(values.size(), BetaSource::Supplied);
    return {std::move(values), std::move(src)};
}

/// Per-mode beta: the override when given, beta_quadratic for linear modes
/// otherwise. Nonlinear fixtures always need an override.
inline BetaVector beta_vector(const SwitchingModel& model,
                              std::span<const std::optional<double>> overrides = {}) {
    const std::size_t n = model.mode_count();
    if (!overrides.empty() && overrides.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "beta overrides must have one entry per mode");
    }
    BetaVector out{Vector(n), std::vector<BetaSource>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const bool given = !overrides.empty() && overrides[i].has_value();
        if (given) {
            if (!std::isfinite(*overrides[i])) {
                throw Error(ErrorKind::NonFinite, "beta override is not finite", i);
            }
            out.beta[i] = *overrides[i];
            out.provenance[i] = BetaSource::Supplied;
        } else if (const auto* lin = std::get_if<LinearMode>(&model.modes()[i])) {
            out.beta[i] = beta_quadratic(*lin);
            out.provenance[i] = BetaSource::Computed;
        } else {
            throw Error(ErrorKind::MissingBeta,
                        "mode " + std::to_string(i) + " is a nonlinear fixture without a beta", i);
        }
    }
    return out;
}

/// Advisory spot-check of 2 x b(x,t) + sigma(x,t)^2 <= gamma_t + beta x^2 for a
/// nonlinear fixture on a grid x in [-x_max, x_max], t in [0, t_max].
/// Returns the largest violation (<= 0 means none observed).
inline double beta_spot_check(const NonlinearMode& mode, double beta,
                              const std::optional<GammaSpec>& gamma, double x_max = 5.0,
                              double t_max = 10.0, std::size_t points = 201) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < points; ++a) {
        const double x = -x_max + 2.0 * x_max * static_cast<double>(a) / (points - 1);
        for (std::size_t b = 0; b < points; ++b) {
            const double t = t_max * static_cast<double>(b) / (points - 1);
            const auto f = fixtures::evaluate(mode.fixture, x, t, mode.parameter);
            const double lhs = 2.0 * x * f.drift + f.diffusion * f.diffusion;
            const double rhs = (gamma ? gamma->at(t) : 0.0) + beta * x * x;
            worst = std::max(worst, lhs - rhs);
        }
    }
    return worst;
}

} // namespace swstab
