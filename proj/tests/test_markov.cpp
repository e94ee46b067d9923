#include <catch_amalgamated.hpp>

#include <cmath>

#include "swstab/markov.hpp"

using namespace swstab;
using Catch::Approx;

namespace {

ErrorKind kind_of(const DenseMatrix& q) {
    try {
        Generator::validate(q);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error");
    return ErrorKind::InvalidArgument;
}

Generator ex2(double nu) {
    return Generator::validate(
        DenseMatrix{{-(3 + nu), nu, 3}, {1, -3, 2}, {1, 2, -3}});
}

} // namespace

TEST_CASE("generator validation", "[markov]") {
    CHECK(kind_of(DenseMatrix{{-1, 1}, {1, -1}, {0, 0}}) == ErrorKind::NotSquare);
    CHECK(kind_of(DenseMatrix{{0}}) == ErrorKind::InvalidArgument);
    CHECK(kind_of(DenseMatrix{{1, -1}, {1, -1}}) == ErrorKind::NegativeRate);
    CHECK(kind_of(DenseMatrix{{-1, 1.5}, {1, -1}}) == ErrorKind::BadRowSum);
    CHECK(kind_of(DenseMatrix{{-1, 1}, {0, 0}}) == ErrorKind::Reducible);
    try {
        Generator::validate(DenseMatrix{{-1, 1.5}, {1, -1}});
    } catch (const Error& e) {
        CHECK(e.index() == 0);
    }
    const Generator g = Generator::validate(DenseMatrix{{-1, 1}, {0, 0}}, Irreducibility::Allow);
    CHECK_FALSE(g.irreducible());
    CHECK_THROWS_AS(stationary(g), Error);
}

TEST_CASE("stationary distribution of the three-state example matches the closed form",
          "[markov]") {
    for (double nu : {0.0, 1.0, 2.5}) {
        const Vector mu = stationary(ex2(nu)).mu;
        const double d = 20 + 5 * nu;
        CHECK(mu[0] == Approx(5 / d).margin(1e-12));
        CHECK(mu[1] == Approx((6 + 3 * nu) / d).margin(1e-12));
        CHECK(mu[2] == Approx((9 + 2 * nu) / d).margin(1e-12));
    }
    const Vector mu1 = stationary(ex2(1.0)).mu;
    CHECK(mu1[0] == Approx(0.2).margin(1e-12));
    CHECK(mu1[1] == Approx(0.36).margin(1e-12));
    CHECK(mu1[2] == Approx(0.44).margin(1e-12));
}

TEST_CASE("two-state stationary law and reversibility", "[markov]") {
    const Generator g = Generator::validate(DenseMatrix{{-2, 2}, {1, -1}});
    const StationaryDist d = stationary(g);
    CHECK(d.mu[0] == Approx(1.0 / 3).margin(1e-14));
    CHECK(d.mu[1] == Approx(2.0 / 3).margin(1e-14));
    CHECK(reversibility(g, d));
}

TEST_CASE("birth-death generator is reversible, a cycle is not", "[markov]") {
    const double a = 1.5, b = 0.2;
    const Generator bd = Generator::validate(
        DenseMatrix{{-b, b, 0}, {2 * a, -2 * (a + b), 2 * b}, {0, 3 * a, -3 * a}});
    const StationaryDist d = stationary(bd);
    CHECK(reversibility(bd, d));
    CHECK(d.mu[0] == Approx(0.9323204419889503).margin(1e-12));
    CHECK(d.mu[1] == Approx(0.06215469613259668).margin(1e-12));
    CHECK(d.mu[2] == Approx(0.00552486187845304).margin(1e-12));

    const Generator cyc = Generator::validate(DenseMatrix{{-1, 1, 0}, {0, -1, 1}, {1, 0, -1}});
    CHECK_FALSE(reversibility(cyc, stationary(cyc)));
    CHECK_FALSE(reversibility(ex2(0.0), stationary(ex2(0.0))));
}

TEST_CASE("sample_path is deterministic and well formed", "[markov]") {
    const Generator g = ex2(1.0);
    const ChainPath p1 = sample_path(g, 0, 20.0, 99);
    const ChainPath p2 = sample_path(g, 0, 20.0, 99);
    CHECK(p1.jump_times == p2.jump_times);
    CHECK(p1.states == p2.states);
    REQUIRE(p1.states.size() == p1.jump_times.size() + 1);
    for (std::size_t k = 0; k < p1.jump_times.size(); ++k) {
        CHECK(p1.jump_times[k] < 20.0);
        if (k > 0) CHECK(p1.jump_times[k] > p1.jump_times[k - 1]);
        CHECK(p1.states[k + 1] != p1.states[k]);
        CHECK(g.rate(p1.states[k], p1.states[k + 1]) > 0.0);
    }
    CHECK(p1.state_at(0.0) == 0);

    const ChainPath empty = sample_path(g, 2, 0.0, 1);
    CHECK(empty.jump_times.empty());
    const Vector f = occupation_fractions(empty, 3);
    CHECK(f[2] == 1.0);
}

TEST_CASE("occupation fractions approach the stationary law", "[markov]") {
    const Generator g = ex2(0.0);
    const ChainPath p = sample_path(g, 0, 20000.0, 5);
    const Vector f = occupation_fractions(p, 3);
    const Vector mu = stationary(g).mu;
    for (std::size_t i = 0; i < 3; ++i) CHECK(f[i] == Approx(mu[i]).margin(0.01));
    CHECK(f[0] + f[1] + f[2] == Approx(1.0).margin(1e-12));
}

TEST_CASE("absorbing state is reported", "[markov]") {
    const Generator g = Generator::validate(DenseMatrix{{-1, 1}, {0, 0}}, Irreducibility::Allow);
    CHECK_THROWS_AS(sample_path(g, 1, 1.0, 0), Error);
}
