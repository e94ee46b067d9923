#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <thread>
#include <variant>
#include <vector>

#include "swstab/error.hpp"
#include "swstab/markov.hpp"
#include "swstab/matrix.hpp"
#include "swstab/model.hpp"
#include "swstab/random.hpp"

namespace swstab {

inline constexpr std::size_t kOutputIntervals = 512;
inline constexpr double kDivergenceCap = 1e12;

struct SimConfig {
    double horizon = 10.0;
    double step = 1e-3;
    std::size_t paths = 100;
    std::uint64_t seed = 0;
    Vector x0;
    std::size_t initial_mode = 0;
    std::optional<std::vector<DenseMatrix>> gains;  // closed loop drift A_i + B_i K_i
    double tolerance = 1e-3;                        // converged iff |X_T| <= tolerance |x0|
};

struct PathRecord {
    std::size_t index = 0;
    Vector grid_norm;                     // |X_t| at t_k = k T / 512
    std::vector<std::size_t> grid_mode;   // mode at t_k
    double terminal_norm = 0.0;
    Vector occupation;
    double lyapunov = 0.0;                // log(|X_T| / |x0|) / T
    bool diverged = false;
    double divergence_time = std::numeric_limits<double>::quiet_NaN();
};

struct EnsembleSummary {
    std::size_t paths = 0;
    std::size_t diverged = 0;
    double converged_fraction = 0.0;
    double median_terminal_norm = 0.0;
    double mean_lyapunov = 0.0;
    double stdev_lyapunov = 0.0;
    Vector pooled_occupation;
};

struct PathEnsemble {
    std::vector<PathRecord> records;  // ordered by path index
    EnsembleSummary summary;
};

inline double grid_time(double horizon, std::size_t k) {
    return horizon * static_cast<double>(k) / static_cast<double>(kOutputIntervals);
}

inline void validate_config(const SwitchingModel& model, const SimConfig& cfg) {
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
        throw Error(ErrorKind::InvalidArgument, "horizon T must be positive and finite");
    }
    if (!(cfg.step > 0.0) || cfg.step > cfg.horizon) {
        throw Error(ErrorKind::InvalidArgument, "step h must satisfy 0 < h <= T");
    }
    if (cfg.paths == 0) throw Error(ErrorKind::InvalidArgument, "paths must be at least 1");
    if (!(cfg.tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    if (cfg.x0.size() != model.dimension()) {
        throw Error(ErrorKind::DimensionMismatch, "x0 has " + std::to_string(cfg.x0.size()) +
                                                      " entries, state dimension is " +
                                                      std::to_string(model.dimension()));
    }
    for (std::size_t i = 0; i < cfg.x0.size(); ++i) {
        if (!std::isfinite(cfg.x0[i])) throw Error(ErrorKind::NonFinite, "x0 is not finite", i);
    }
    if (!(norm2(cfg.x0) > 0.0)) throw Error(ErrorKind::InvalidArgument, "x0 must be nonzero");
    if (cfg.initial_mode >= model.mode_count()) {
        throw Error(ErrorKind::InvalidArgument, "initial mode out of range");
    }
    if (cfg.gains) {
        if (cfg.gains->size() != model.mode_count()) {
            throw Error(ErrorKind::DimensionMismatch, "need one gain matrix per mode");
        }
        for (std::size_t i = 0; i < model.mode_count(); ++i) {
            const auto* lin = std::get_if<LinearMode>(&model.modes()[i]);
            if (!lin || !lin->input) {
                throw Error(ErrorKind::InvalidArgument,
                            "gains given but mode " + std::to_string(i) + " has no input matrix", i);
            }
            const DenseMatrix& k = (*cfg.gains)[i];
            if (k.rows() != lin->input->cols() || k.cols() != model.dimension()) {
                throw Error(ErrorKind::DimensionMismatch,
                            "gain of mode " + std::to_string(i) + " is " + k.shape(), i);
            }
        }
    }
}

namespace detail {

// Effective drift matrices per linear mode (closed loop when gains are set).
inline std::vector<std::optional<DenseMatrix>> drift_matrices(const SwitchingModel& model,
                                                              const SimConfig& cfg) {
    std::vector<std::optional<DenseMatrix>> out(model.mode_count());
    for (std::size_t i = 0; i < model.mode_count(); ++i) {
        if (const auto* lin = std::get_if<LinearMode>(&model.modes()[i])) {
            out[i] = lin->drift;
            if (cfg.gains) *out[i] += *lin->input * (*cfg.gains)[i];
        }
    }
    return out;
}

inline void em_step(const ModeDynamics& dyn, const std::optional<DenseMatrix>& drift, Vector& x,
                    double t, double dt, CounterStream& noise) {
    const double root = std::sqrt(dt);
    if (const auto* lin = std::get_if<LinearMode>(&dyn)) {
        Vector next = x;
        const Vector ax = *drift * x;
        for (std::size_t r = 0; r < x.size(); ++r) next[r] += ax[r] * dt;
        for (const auto& c : lin->noise) {
            const double z = noise.normal() * root;
            const Vector cx = c * x;
            for (std::size_t r = 0; r < x.size(); ++r) next[r] += cx[r] * z;
        }
        x = std::move(next);
        return;
    }
    const auto& nl = std::get<NonlinearMode>(dyn);
    const auto f = fixtures::evaluate(nl.fixture, x[0], t, nl.parameter);
    x[0] += f.drift * dt + f.diffusion * root * noise.normal();
}

} // namespace detail

/// One path: exact chain jumps from substream (seed, index, 0), Euler-Maruyama
/// steps of min(h, time to next jump or output point) driven by substream
/// (seed, index, 1). A path whose norm exceeds 1e12 is flagged and frozen.
inline PathRecord simulate_path(const SwitchingModel& model, const SimConfig& cfg,
                                std::size_t index) {
    validate_config(model, cfg);
    const auto drifts = detail::drift_matrices(model, cfg);
    const ChainPath chain = sample_path(model.generator(), cfg.initial_mode, cfg.horizon,
                                        substream_key(cfg.seed, index, 0));
    CounterStream noise(substream_key(cfg.seed, index, 1));

    PathRecord rec;
    rec.index = index;
    rec.grid_norm.assign(kOutputIntervals + 1, 0.0);
    rec.grid_mode.assign(kOutputIntervals + 1, 0);
    for (std::size_t k = 0; k <= kOutputIntervals; ++k) {
        rec.grid_mode[k] = chain.state_at(grid_time(cfg.horizon, k));
    }
    rec.occupation = occupation_fractions(chain, model.mode_count());

    const double norm0 = norm2(cfg.x0);
    Vector x = cfg.x0;
    double t = 0.0;
    rec.grid_norm[0] = norm0;
    std::size_t next_grid = 1;
    while (next_grid <= kOutputIntervals) {
        const double tg = grid_time(cfg.horizon, next_grid);
        const double event = std::min(tg, chain.next_jump_after(t));
        const std::size_t mode = chain.state_at(t);
        double t_new;
        double dt;
        if (event - t <= cfg.step) {
            t_new = event;
            dt = event - t;
        } else {
            t_new = t + cfg.step;
            dt = cfg.step;
        }
        if (dt > 0.0) detail::em_step(model.modes()[mode], drifts[mode], x, t, dt, noise);
        t = t_new;

        const double nx = norm2(x);
        if (!(nx <= kDivergenceCap)) {
            rec.diverged = true;
            rec.divergence_time = t;
            const double frozen = std::isfinite(nx) ? nx : kDivergenceCap;
            for (std::size_t k = next_grid; k <= kOutputIntervals; ++k) rec.grid_norm[k] = frozen;
            rec.terminal_norm = frozen;
            rec.lyapunov = std::log(frozen / norm0) / t;
            return rec;
        }
        if (t == tg) rec.grid_norm[next_grid++] = nx;
    }
    rec.terminal_norm = rec.grid_norm[kOutputIntervals];
    rec.lyapunov = std::log(rec.terminal_norm / norm0) / cfg.horizon;
    return rec;
}

/// Summary statistics from records ordered by index.
inline EnsembleSummary summarize(const std::vector<PathRecord>& records, const SimConfig& cfg,
                                 std::size_t modes) {
    EnsembleSummary s;
    s.paths = records.size();
    s.pooled_occupation.assign(modes, 0.0);
    if (records.empty()) return s;
    const double norm0 = norm2(cfg.x0);
    std::size_t converged = 0;
    std::vector<double> terminal;
    terminal.reserve(records.size());
    double sum = 0.0;
    for (const auto& r : records) {
        if (r.diverged) ++s.diverged;
        if (!r.diverged && r.terminal_norm <= cfg.tolerance * norm0) ++converged;
        terminal.push_back(r.terminal_norm);
        sum += r.lyapunov;
        for (std::size_t i = 0; i < modes; ++i) s.pooled_occupation[i] += r.occupation[i];
    }
    const auto count = static_cast<double>(records.size());
    for (double& o : s.pooled_occupation) o /= count;
    s.converged_fraction = static_cast<double>(converged) / count;
    s.mean_lyapunov = sum / count;
    double var = 0.0;
    for (const auto& r : records) var += (r.lyapunov - s.mean_lyapunov) * (r.lyapunov - s.mean_lyapunov);
    s.stdev_lyapunov = records.size() > 1 ? std::sqrt(var / (count - 1.0)) : 0.0;

    std::sort(terminal.begin(), terminal.end());
    const std::size_t mid = terminal.size() / 2;
    s.median_terminal_norm = terminal.size() % 2 == 1 ? terminal[mid]
                                                      : 0.5 * (terminal[mid - 1] + terminal[mid]);
    return s;
}

/// Runs cfg.paths independent paths on `threads` workers (0 = hardware
/// concurrency). Output does not depend on the thread count.
inline PathEnsemble run_ensemble(const SwitchingModel& model, const SimConfig& cfg,
                                 std::size_t threads = 0) {
    validate_config(model, cfg);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, cfg.paths);

    PathEnsemble ens;
    ens.records.resize(cfg.paths);
    if (threads <= 1) {
        for (std::size_t i = 0; i < cfg.paths; ++i) ens.records[i] = simulate_path(model, cfg, i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < cfg.paths; i = next++) {
                        ens.records[i] = simulate_path(model, cfg, i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    ens.summary = summarize(ens.records, cfg, model.mode_count());
    return ens;
}

} // namespace swstab
