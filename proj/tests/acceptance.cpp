// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "swstab/certify.hpp"
#include "swstab/io.hpp"
#include "swstab/lmi.hpp"
#include "swstab/simulate.hpp"

using namespace swstab;

namespace {

std::string fixture(const char* name) { return std::string(SWSTAB_FIXTURES) + "/" + name; }

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Collects failed sub-checks of one criterion.
struct Check {
    std::vector<std::string> failures;
    void operator()(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

int report(int id, const std::string& title, const std::function<void(Check&)>& body) {
    Check check;
    try {
        body(check);
    } catch (const std::exception& e) {
        check.failures.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (check.failures.empty() ? "PASS" : "FAIL") << " criterion " << id << ": " << title;
    for (const auto& f : check.failures) std::cout << "\n    - " << f;
    std::cout << std::endl;
    return check.failures.empty() ? 0 : 1;
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

Generator random_generator(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.05, 3.0);
    DenseMatrix q(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            q(i, j) = u(rng);
            s += q(i, j);
        }
        q(i, i) = -s;
    }
    return Generator::validate(q);
}

DenseMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::normal_distribution<double> nd;
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
}

SimConfig sim_config(const io::ModelFile& mf, double horizon, double step, std::size_t paths,
                     std::uint64_t seed) {
    SimConfig cfg;
    cfg.horizon = horizon;
    cfg.step = step;
    cfg.paths = paths;
    cfg.seed = seed;
    cfg.x0 = mf.x0;
    cfg.initial_mode = mf.initial_mode;
    return cfg;
}

CertifyOutcome sec5_at(const BirthDeathChain& base, double kappa, const Vector& thresholds) {
    BirthDeathChain c = base;
    c.beta_limit = kappa;
    const PartitionSpec part = build_partition(c, thresholds);
    return partition_certificate(reduced_generator(c, part), part);
}

void criterion1(Check& check) {
    const io::ModelFile stable = io::read_model(fixture("ex1_stable.json"));
    const Generator& g = stable.model->generator();
    const BetaVector beta = beta_vector(*stable.model, stable.beta_overrides);
    check(near(beta.beta[0], 3, 1e-12) && near(beta.beta[1], -3, 1e-12), "beta = (3, -3)");
    const double avg = averaging_value(stationary(g), beta);
    check(near(avg, -1.0, 1e-12), "stable averaging " + num(avg));
    const CertifyOutcome pf = pf_certificate(g, beta);
    check(pf.ok(), "pf route certifies (u,v)=(2,1)");
    if (pf.ok()) {
        const auto& w = std::get<PfWitness>(pf.value().witness);
        check(w.eta > 1e-10 && w.p <= 2.0 / 3.0 * 0.999 + 1e-15, "eta_p > 0 at p <= 0.999*2/3");
        check(recheck(pf.value(), g, beta), "pf witness rechecks");
    }

    const io::ModelFile unstable = io::read_model(fixture("ex1_unstable.json"));
    const Generator& gu = unstable.model->generator();
    const BetaVector bu = beta_vector(*unstable.model, unstable.beta_overrides);
    const StationaryDist du = stationary(gu);
    const double avg_u = averaging_value(du, bu);
    check(near(avg_u, 1.0, 1e-12), "unstable averaging " + num(avg_u));
    const PartitionSpec part = build_partition(bu, Vector{0.0});
    check(!pf_certificate(gu, bu).ok(), "pf refuses (u,v)=(1,2)");
    check(!m1_certificate(gu, bu).ok(), "m1 refuses (u,v)=(1,2)");
    check(!principal_eigenvalue(gu, du, bu).ok(), "eigen refuses (u,v)=(1,2)");
    check(!partition_certificate(reduced_generator(gu, bu, part), part).ok(),
          "partition refuses (u,v)=(1,2)");
}

void criterion2(Check& check) {
    const io::ModelFile mf = io::read_model(fixture("ex2.json"));
    const Generator& g = mf.model->generator();
    const StationaryDist dist = stationary(g);
    check(near(dist.mu[0], 0.25, 1e-12) && near(dist.mu[1], 0.30, 1e-12) &&
              near(dist.mu[2], 0.45, 1e-12),
          "mu = (0.25, 0.30, 0.45)");
    const BetaVector beta = beta_vector(*mf.model, mf.beta_overrides);
    check(near(condition3_value(g, beta), 6.0, 1e-12), "condition value 6");
    check(near(averaging_value(dist, beta), -3.325, 1e-9), "averaging -3.325");
    const CertifyOutcome m1 = m1_certificate(g, beta, mf.model->gamma());
    check(m1.ok(), "m1 route certifies");
    const DenseMatrix q1 = tilted_generator(g, beta, 1.0);
    check(perron_pair(q1).value < 0.0, "Perron root of Q1 negative");
    check(strictly_negative(q1 * Vector{1, 1, 0.5}, 1e-10), "hand witness (1,1,0.5) mapped below 0");
}

void criterion3(Check& check) {
    const io::ModelFile mf = io::read_model(fixture("ex3.json"));
    const LmiCandidate cand{DenseMatrix{{0.1543, -0.0007}, {-0.0007, 0.1406}},
                            {DenseMatrix{{0.0882, 0.0017}}, DenseMatrix{{0.0018, 0.0656}}},
                            Vector{-2.9074, 1.4537}};
    const double gmin = sym_eig(cand.gamma).values.front();
    check(definiteness(cand.gamma, Sense::Positive, 1e-9).holds && near(gmin, 0.1406, 1e-3),
          "Gamma positive definite, min eig " + num(gmin));
    const auto k = feedback_gains(cand);
    check(near(k[0](0, 0), 0.5716, 2e-3) && near(k[0](0, 1), 0.0150, 2e-3), "K1 = (0.5716, 0.0150)");
    check(near(k[1](0, 0), 0.0137, 2e-3) && near(k[1](0, 1), 0.4666, 2e-3), "K2 = (0.0137, 0.4666)");
    const LmiOutcome v = verify(*mf.model, stationary(mf.model->generator()), cand);
    check(v.ok(), "published candidate verifies");
    if (v.ok()) check(near(v.value().averaging, -0.72685, 1e-4), "averaging -0.72685");
}

void criterion4(Check& check) {
    const io::ModelFile mf = io::read_model(fixture("ex3.json"));
    const StationaryDist dist = stationary(mf.model->generator());
    const LmiOutcome syn = synthesize(*mf.model, dist);
    check(syn.ok(), "synthesis succeeds");
    if (!syn.ok()) return;
    const FeedbackSynthesis& s = syn.value();
    check(verify(*mf.model, dist, s.candidate).ok(), "synthesis passes verify");
    check(std::all_of(s.margins.begin(), s.margins.end(), [](double m) { return m < -1e-6; }),
          "all block margins < -1e-6");
    check(s.averaging < 0.0, "sum mu alpha < 0");

    SimConfig closed = sim_config(mf, 20.0, 1e-3, 200, 7);
    closed.gains = s.gains;
    const PathEnsemble cl = run_ensemble(*mf.model, closed);
    check(cl.summary.converged_fraction >= 0.95,
          "closed-loop converged fraction " + num(cl.summary.converged_fraction));

    const PathEnsemble open = run_ensemble(*mf.model, sim_config(mf, 10.0, 1e-3, 200, 7));
    const double ratio = open.summary.median_terminal_norm / norm2(mf.x0);
    check(ratio > 10.0, "open-loop median |X_T|/|x0| = " + num(ratio));
}

void criterion5(Check& check) {
    const io::ModelFile mf = io::read_model(fixture("ex4_3.json"));
    const Generator& g = mf.model->generator();
    const StationaryDist dist = stationary(g);
    check(reversibility(g, dist), "reversible");
    const CertifyOutcome out =
        principal_eigenvalue(g, dist, beta_vector(*mf.model, mf.beta_overrides));
    check(out.ok(), "principal eigenvalue route certifies");
    if (!out.ok()) return;
    const double l0 = std::get<EigenWitness>(out.value().witness).lambda0;
    check(l0 >= 0.04, "lambda0 >= 0.04");
    check(near(l0, 0.1302127104816388811, 1e-8), "lambda0 = " + num(l0));
}

void criterion6(Check& check) {
    const io::ModelFile mf = io::read_model(fixture("sec5_birthdeath.json"));
    const BirthDeathChain& chain = *mf.countable;
    const CertifyOutcome half = sec5_at(chain, 0.5, mf.thresholds);
    check(half.ok(), "kappa = 0.5 certifies");
    if (half.ok()) {
        const auto& xi = std::get<PartitionWitness>(half.value().witness).xi_f;
        check(near(xi[0], 2.5, 1e-9) && near(xi[1], 4.0, 1e-9), "xi = (2.5, 4)");
    }
    check(!sec5_at(chain, 1.5, mf.thresholds).ok(), "kappa = 1.5 refuses");
    double lo = 0.5, hi = 1.5;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (sec5_at(chain, mid, mf.thresholds).ok() ? lo : hi) = mid;
    }
    const double expected = chain.tail_death / (1.0 + chain.prefix_birth[0]);
    check(near(lo, 1.0, 1e-6) && near(lo, expected, 1e-6), "kappa_crit = " + num(lo));
}

void criterion7(Check& check) {
    const io::ModelFile mf = io::read_model(fixture("ex1_stable.json"));
    const PathEnsemble ens = run_ensemble(*mf.model, sim_config(mf, 50.0, 1e-3, 200, 7));
    const double mean = ens.summary.mean_lyapunov;
    check(mean >= -1.8 && mean <= -1.2, "mean Lyapunov exponent " + num(mean));
    const auto& occ = ens.summary.pooled_occupation;
    check(near(occ[0], 1.0 / 3.0, 0.02) && near(occ[1], 2.0 / 3.0, 0.02),
          "occupation (" + num(occ[0]) + ", " + num(occ[1]) + ")");
}

void criterion8(Check& check) {
    std::mt19937_64 rng(2024);

    int schur_agree = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + rep % 3;
        const std::size_t m = 1 + rep % 2;
        DenseMatrix gamma = random_matrix(rng, n, n);
        gamma = gamma * gamma.transpose() + 0.1 * DenseMatrix::identity(n);
        LinearMode mode{random_matrix(rng, n, n), {}, random_matrix(rng, n, 1)};
        for (std::size_t k = 0; k < m; ++k) mode.noise.push_back(0.5 * random_matrix(rng, n, n));
        const DenseMatrix block = assemble_block(mode, gamma, random_matrix(rng, 1, n),
                                                 4.0 * std::uniform_real_distribution<double>(0, 2)(rng));
        const bool full = definiteness(block, Sense::Negative, 0.0).holds;
        const bool red = definiteness(schur_reduce(block, n, m), Sense::Negative, 0.0).holds;
        if (full == red) ++schur_agree;
    }
    check(schur_agree == 100, "Schur agreement " + std::to_string(schur_agree) + "/100");

    int issued = 0;
    int clean = 0;
    int consistent = 0;
    int tested = 0;
    std::uniform_real_distribution<double> ub(-4.0, 1.5);
    while (tested < 20) {
        const std::size_t n = 2 + static_cast<std::size_t>(tested % 4);
        const Generator g = random_generator(rng, n);
        Vector b(n);
        for (double& x : b) x = ub(rng);
        const BetaVector beta = make_beta(b);
        const double root = perron_pair(tilted_generator(g, beta, 1.0)).value;
        Vector sorted = b;
        std::sort(sorted.begin(), sorted.end());
        if (std::abs(root) < 1e-6 ||
            std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            continue;
        }
        Vector thresholds;
        for (std::size_t i = 0; i + 1 < n; ++i) thresholds.push_back(0.5 * (sorted[i] + sorted[i + 1]));
        const PartitionSpec part = build_partition(beta, thresholds);
        const StationaryDist dist = stationary(g);
        std::vector<CertifyOutcome> outs{pf_certificate(g, beta), m1_certificate(g, beta),
                                         partition_certificate(reduced_generator(g, beta, part), part)};
        if (reversibility(g, dist)) outs.push_back(principal_eigenvalue(g, dist, beta));
        for (const auto& o : outs) {
            if (!o.ok()) continue;
            ++issued;
            if (recheck(o.value(), g, beta) &&
                (o.value().route == Route::Partition || o.value().residual < 1e-8)) {
                ++clean;
            }
        }
        if (outs[2].ok() == (root < 0.0)) ++consistent;
        ++tested;
    }
    check(issued > 0 && clean == issued,
          "self-verifying certificates " + std::to_string(clean) + "/" + std::to_string(issued));
    check(consistent == 20, "partition vs Perron consistency " + std::to_string(consistent) + "/20");

    const LinearMode rot{DenseMatrix{{-1, 2}, {-2, -1}}, {}, std::nullopt};
    const SwitchingModel det(Generator::validate(DenseMatrix{{-1, 1}, {1, -1}}), {rot, rot});
    auto error_at = [&](double h) {
        SimConfig cfg;
        cfg.horizon = 1.0;
        cfg.step = h;
        cfg.paths = 1;
        cfg.x0 = {1, 0};
        return std::abs(simulate_path(det, cfg, 0).terminal_norm - std::exp(-1.0));
    };
    const double r1 = error_at(0x1p-10) / error_at(0x1p-11);
    const double r2 = error_at(0x1p-11) / error_at(0x1p-12);
    check(near(r1, 2.0, 0.2) && near(r2, 2.0, 0.2), "EM error ratios " + num(r1) + ", " + num(r2));

    const io::ModelFile mf = io::read_model(fixture("ex1_stable.json"));
    const SimConfig cfg = sim_config(mf, 5.0, 1e-2, 24, 11);
    const std::string serial = io::csv_text(run_ensemble(*mf.model, cfg, 1), cfg.horizon);
    const std::string again = io::csv_text(run_ensemble(*mf.model, cfg, 1), cfg.horizon);
    const std::string parallel = io::csv_text(run_ensemble(*mf.model, cfg, 4), cfg.horizon);
    check(serial == again, "CSV identical across repeated runs");
    check(serial == parallel, "CSV identical for serial and parallel ensembles");
}

} // namespace

int main() {
    int failed = 0;
    failed += report(1, "two-state certification table", criterion1);
    failed += report(2, "three-state nonlinear example, m1 route", criterion2);
    failed += report(3, "published LMI solution arithmetic", criterion3);
    failed += report(4, "feedback synthesis and closed/open-loop ensembles", criterion4);
    failed += report(5, "principal eigenvalue of the reversible chain", criterion5);
    failed += report(6, "countable birth-death partition threshold", criterion6);
    failed += report(7, "simulator calibration against the exact exponent", criterion7);
    failed += report(8, "property suites", criterion8);
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " criteria FAILED") << std::endl;
    return failed == 0 ? 0 : 1;
}
