#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "swstab/model.hpp"

using namespace swstab;
using Catch::Approx;

namespace {

SwitchingModel ex1() {
    return SwitchingModel(Generator::validate(DenseMatrix{{-2, 2}, {1, -1}}),
                          {LinearMode{DenseMatrix{{1}}, {DenseMatrix{{1}}}, std::nullopt},
                           LinearMode{DenseMatrix{{-2}}, {DenseMatrix{{1}}}, std::nullopt}});
}

SwitchingModel ex2() {
    return SwitchingModel(
        Generator::validate(DenseMatrix{{-3, 0, 3}, {1, -3, 2}, {1, 2, -3}}),
        {NonlinearMode{"ex2.0"}, NonlinearMode{"ex2.1"}, NonlinearMode{"ex2.2"}},
        GammaSpec{{{GammaTerm::Form::InverseSquare, 4.0}, {GammaTerm::Form::ExpDecay, 1.0}}});
}

DenseMatrix random_matrix(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> nd;
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = nd(rng);
    return m;
}

// Orthogonal factor by Gram-Schmidt on a random matrix.
DenseMatrix random_orthogonal(std::mt19937_64& rng, std::size_t n) {
    DenseMatrix m = random_matrix(rng, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double d = 0;
            for (std::size_t i = 0; i < n; ++i) d += m(i, j) * m(i, k);
            for (std::size_t i = 0; i < n; ++i) m(i, j) -= d * m(i, k);
        }
        double len = 0;
        for (std::size_t i = 0; i < n; ++i) len += m(i, j) * m(i, j);
        len = std::sqrt(len);
        for (std::size_t i = 0; i < n; ++i) m(i, j) /= len;
    }
    return m;
}

} // namespace

TEST_CASE("beta of scalar geometric modes is 2b + sigma^2", "[model]") {
    const BetaVector b = beta_vector(ex1());
    CHECK(b.beta[0] == Approx(3.0).margin(1e-12));
    CHECK(b.beta[1] == Approx(-3.0).margin(1e-12));
    CHECK(b.provenance[0] == BetaSource::Computed);
    CHECK(b.sup() == Approx(3.0));
}

TEST_CASE("beta of the two-dimensional example modes", "[model]") {
    const LinearMode m1{DenseMatrix{{3, -1}, {1, -4}}, {DenseMatrix{{1, 1}, {1, -1}}}, std::nullopt};
    const LinearMode m2{DenseMatrix{{-3, -1}, {1, 2}}, {DenseMatrix{{-1, -1}, {-1, 1}}}, std::nullopt};
    CHECK(beta_quadratic(m1) == Approx(8.0).margin(1e-10));
    CHECK(beta_quadratic(m2) == Approx(6.0).margin(1e-10));
}

TEST_CASE("nonlinear modes need beta overrides", "[model]") {
    try {
        beta_vector(ex2());
        FAIL("expected MissingBeta");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingBeta);
        CHECK(e.index() == 0);
    }
    const std::vector<std::optional<double>> ov{0.5, 0.5, -8.0};
    const BetaVector b = beta_vector(ex2(), ov);
    CHECK(b.beta == Vector{0.5, 0.5, -8.0});
    CHECK(b.provenance[2] == BetaSource::Supplied);
}

TEST_CASE("beta_quadratic is invariant under orthogonal change of coordinates", "[model]") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 1 + rep % 5;
        LinearMode m{random_matrix(rng, n), {random_matrix(rng, n), random_matrix(rng, n)},
                     std::nullopt};
        const DenseMatrix u = random_orthogonal(rng, n);
        LinearMode r{u.transpose() * m.drift * u, {}, std::nullopt};
        for (const auto& c : m.noise) r.noise.push_back(u.transpose() * c * u);
        CHECK(beta_quadratic(r) == Approx(beta_quadratic(m)).margin(1e-9));

        LinearMode quiet{m.drift, {}, std::nullopt};
        CHECK(beta_quadratic(m) >= beta_quadratic(quiet) - 1e-12);
    }
}

TEST_CASE("beta_quadratic bounds the quadratic Lyapunov drift", "[model]") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    const std::size_t n = 3;
    const LinearMode m{random_matrix(rng, n), {random_matrix(rng, n)}, std::nullopt};
    const double beta = beta_quadratic(m);
    for (int rep = 0; rep < 1000; ++rep) {
        Vector x(n);
        for (double& v : x) v = nd(rng);
        const double len = norm2(x);
        for (double& v : x) v /= len;
        const Vector ax = m.drift * x;
        const Vector cx = m.noise[0] * x;
        CHECK(2 * dot(x, ax) + dot(cx, cx) <= beta + 1e-9);
    }
}

TEST_CASE("model shape validation", "[model]") {
    const Generator g = Generator::validate(DenseMatrix{{-1, 1}, {1, -1}});
    CHECK_THROWS_AS(SwitchingModel(g, {LinearMode{DenseMatrix{{1}}, {}, std::nullopt}}), Error);
    CHECK_THROWS_AS(SwitchingModel(g, {LinearMode{DenseMatrix{{1}}, {}, std::nullopt},
                                       LinearMode{DenseMatrix(2, 2), {}, std::nullopt}}),
                    Error);
    CHECK_THROWS_AS(SwitchingModel(g, {NonlinearMode{"nope"}, NonlinearMode{"ex2.0"}}), Error);
    CHECK_THROWS_AS(
        SwitchingModel(g, {LinearMode{DenseMatrix{{1}}, {DenseMatrix(2, 2)}, std::nullopt},
                           LinearMode{DenseMatrix{{1}}, {}, std::nullopt}}),
        Error);
    CHECK(ex1().all_linear());
    CHECK_FALSE(ex2().all_linear());
    CHECK(ex1().dimension() == 1);
}

TEST_CASE("fixture fields and beta spot-check", "[model]") {
    const auto f = fixtures::evaluate("ex2.2", 1.0, 0.0, 0.0);
    CHECK(f.drift == Approx(1.0 - 5.0 - 2.0));
    CHECK(f.diffusion == Approx(0.0));
    CHECK(fixtures::evaluate("sec5", 2.0, 0.0, -1.0).diffusion == Approx(2.0));
    CHECK(fixtures::evaluate("sec5", 0.5, 0.0, -1.0).diffusion == Approx(0.25));
    CHECK_THROWS_AS(fixtures::evaluate("nope", 0, 0, 0), Error);

    const auto m = ex2();
    const GammaSpec& gamma = *m.gamma();
    CHECK(gamma.integrable());
    CHECK(gamma.integral() == Approx(4.5));
    CHECK(gamma.at(0.0) == Approx(5.0));
    CHECK(beta_spot_check(NonlinearMode{"ex2.2"}, -8.0, gamma) <= 1e-12);
    CHECK(beta_spot_check(NonlinearMode{"ex2.0"}, 0.5, gamma) <= 1e-12);
    CHECK(beta_spot_check(NonlinearMode{"ex2.0"}, -1.0, std::nullopt) > 0.0);
}
