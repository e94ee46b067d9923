#include <catch_amalgamated.hpp>

#include <cmath>

#include "swstab/simulate.hpp"

using namespace swstab;
using Catch::Approx;

namespace {

SwitchingModel ex1_model() {
    return SwitchingModel(Generator::validate(DenseMatrix{{-2, 2}, {1, -1}}),
                          {LinearMode{DenseMatrix{{1}}, {DenseMatrix{{1}}}, std::nullopt},
                           LinearMode{DenseMatrix{{-2}}, {DenseMatrix{{1}}}, std::nullopt}});
}

SwitchingModel rotation_model() {
    const LinearMode m{DenseMatrix{{-1, 2}, {-2, -1}}, {}, std::nullopt};
    return SwitchingModel(Generator::validate(DenseMatrix{{-1, 1}, {1, -1}}), {m, m});
}

SimConfig config(double horizon, double step, std::size_t paths, Vector x0) {
    SimConfig c;
    c.horizon = horizon;
    c.step = step;
    c.paths = paths;
    c.seed = 7;
    c.x0 = std::move(x0);
    return c;
}

double terminal_error(double step) {
    const PathRecord r = simulate_path(rotation_model(), config(1.0, step, 1, {1, 0}), 0);
    const double exact = std::exp(-1.0);  // |x(1)| for the damped rotation
    return std::abs(r.terminal_norm - exact);
}

} // namespace

TEST_CASE("zero dynamics keep the initial state", "[simulate]") {
    const LinearMode zero{DenseMatrix(2, 2), {DenseMatrix(2, 2)}, std::nullopt};
    const SwitchingModel model(Generator::validate(DenseMatrix{{-3, 3}, {1, -1}}), {zero, zero});
    const PathRecord r = simulate_path(model, config(5.0, 0.01, 1, {3, 4}), 0);
    for (double v : r.grid_norm) CHECK(v == 5.0);
    CHECK(r.lyapunov == 0.0);
    CHECK_FALSE(r.diverged);
    CHECK(r.grid_norm.size() == kOutputIntervals + 1);
}

TEST_CASE("Euler-Maruyama error halves with the step on a deterministic mode", "[simulate]") {
    const double e1 = terminal_error(0x1p-10);
    const double e2 = terminal_error(0x1p-11);
    const double e3 = terminal_error(0x1p-12);
    CHECK(e1 / e2 == Approx(2.0).margin(0.2));
    CHECK(e2 / e3 == Approx(2.0).margin(0.2));
}

TEST_CASE("paths are reproducible from the configuration and index alone", "[simulate]") {
    const auto model = ex1_model();
    const SimConfig cfg = config(5.0, 0.01, 16, {1});
    const PathRecord a = simulate_path(model, cfg, 3);
    const PathRecord b = simulate_path(model, cfg, 3);
    CHECK(a.grid_norm == b.grid_norm);
    CHECK(a.grid_mode == b.grid_mode);
    const PathEnsemble serial = run_ensemble(model, cfg, 1);
    const PathEnsemble parallel = run_ensemble(model, cfg, 4);
    REQUIRE(serial.records.size() == parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        CHECK(serial.records[i].grid_norm == parallel.records[i].grid_norm);
        CHECK(serial.records[i].grid_mode == parallel.records[i].grid_mode);
    }
    CHECK(serial.records[3].grid_norm == a.grid_norm);
    CHECK(serial.summary.mean_lyapunov == parallel.summary.mean_lyapunov);
    CHECK(serial.summary.median_terminal_norm == parallel.summary.median_terminal_norm);
}

TEST_CASE("pooled occupation matches the stationary law", "[simulate]") {
    const auto model = ex1_model();
    const PathEnsemble ens = run_ensemble(model, config(50.0, 0.5, 200, {1}));
    CHECK(ens.summary.pooled_occupation[0] == Approx(1.0 / 3).margin(0.02));
    CHECK(ens.summary.pooled_occupation[1] == Approx(2.0 / 3).margin(0.02));
}

TEST_CASE("single path summary equals its own statistics", "[simulate]") {
    const auto model = ex1_model();
    const PathEnsemble ens = run_ensemble(model, config(2.0, 0.01, 1, {2}));
    const PathRecord& r = ens.records.front();
    CHECK(ens.summary.mean_lyapunov == r.lyapunov);
    CHECK(ens.summary.median_terminal_norm == r.terminal_norm);
    CHECK(ens.summary.stdev_lyapunov == 0.0);
    CHECK(ens.summary.pooled_occupation == r.occupation);
}

TEST_CASE("divergent paths are flagged, not thrown", "[simulate]") {
    const LinearMode fast{DenseMatrix{{20}}, {}, std::nullopt};
    const SwitchingModel model(Generator::validate(DenseMatrix{{-1, 1}, {1, -1}}), {fast, fast});
    const PathEnsemble ens = run_ensemble(model, config(5.0, 0.01, 3, {1}));
    CHECK(ens.summary.diverged == 3);
    CHECK(ens.summary.converged_fraction == 0.0);
    for (const auto& r : ens.records) {
        CHECK(r.diverged);
        CHECK(r.divergence_time < 5.0);
        CHECK(std::isfinite(r.terminal_norm));
    }
}

TEST_CASE("closed-loop gains change the drift", "[simulate]") {
    const LinearMode m{DenseMatrix{{1}}, {}, DenseMatrix{{1}}};
    const SwitchingModel model(Generator::validate(DenseMatrix{{-1, 1}, {1, -1}}), {m, m});
    SimConfig cfg = config(1.0, 0.001, 1, {1});
    cfg.gains = std::vector<DenseMatrix>{DenseMatrix{{-3}}, DenseMatrix{{-3}}};
    const PathRecord r = simulate_path(model, cfg, 0);
    CHECK(r.terminal_norm == Approx(std::exp(-2.0)).epsilon(0.01));
}

TEST_CASE("configuration validation", "[simulate]") {
    const auto model = ex1_model();
    CHECK_THROWS_AS(run_ensemble(model, config(1.0, 0.1, 0, {1})), Error);
    CHECK_THROWS_AS(run_ensemble(model, config(1.0, 2.0, 1, {1})), Error);
    CHECK_THROWS_AS(run_ensemble(model, config(1.0, 0.1, 1, {1, 2})), Error);
    CHECK_THROWS_AS(run_ensemble(model, config(1.0, 0.1, 1, {0})), Error);
    SimConfig cfg = config(1.0, 0.1, 1, {1});
    cfg.gains = std::vector<DenseMatrix>{DenseMatrix{{1}}, DenseMatrix{{1}}};
    CHECK_THROWS_AS(run_ensemble(model, cfg), Error);
}
