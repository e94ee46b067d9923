// swstab: certify, stabilize and simulate regime-switching diffusions.

#include <cstdio>
#include <exception>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swstab/certify.hpp"
#include "swstab/io.hpp"
#include "swstab/lmi.hpp"
#include "swstab/simulate.hpp"

namespace {

using namespace swstab;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kRefused = 2;

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

std::string fmt(const Vector& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out + "]";
}

std::string fmt(const DenseMatrix& m) {
    std::string out = "[";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        out += (i ? ", " : "") + fmt(Vector(row.begin(), row.end()));
    }
    return out + "]";
}

void print_certificate(const StabilityCertificate& c) {
    std::cout << "route " << to_string(c.route) << ": certified\n";
    std::visit(
        [](const auto& w) {
            using W = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<W, PfWitness>) {
                std::cout << "  p = " << fmt(w.p) << "  (p_max = " << fmt(w.p_max) << ")\n"
                          << "  eta_p = " << fmt(w.eta) << "\n  xi = " << fmt(w.xi) << "\n";
            } else if constexpr (std::is_same_v<W, M1Witness>) {
                std::cout << "  condition3 = " << fmt(w.condition3)
                          << "\n  gamma_ok = " << (w.gamma_ok ? "true" : "false")
                          << "\n  eta = " << fmt(w.eta) << "\n  xi = " << fmt(w.xi) << "\n";
            } else if constexpr (std::is_same_v<W, EigenWitness>) {
                std::cout << "  lambda0 = " << fmt(w.lambda0) << "\n  dirichlet = " << fmt(w.dirichlet)
                          << "\n  xi = " << fmt(w.xi) << "\n";
            } else {
                std::cout << "  thresholds = " << fmt(w.thresholds) << "\n  QF = " << fmt(w.qf)
                          << "\n  betaF = " << fmt(w.beta_f) << "\n  xiF = " << fmt(w.xi_f)
                          << "\n  image = " << fmt(w.lambda_f) << "\n  mmatrix_literal = "
                          << (w.mmatrix_literal ? "true" : "false") << "\n";
            }
        },
        c.witness);
    std::cout << "  residual = " << fmt(c.residual) << "\n";
}

void print_refusal(const Refusal& r) {
    std::cout << "route " << to_string(r.route) << ": refused " << to_string(r.reason) << " ("
              << r.detail << ")\n";
}

int cmd_certify(const std::string& path, const std::string& route,
                const std::optional<std::vector<double>>& cli_thresholds) {
    const io::ModelFile mf = io::read_model(path);
    const Vector thresholds = cli_thresholds ? *cli_thresholds : mf.thresholds;
    std::vector<CertifyOutcome> tried;

    if (mf.countable) {
        if (route != "auto" && route != "partition") {
            throw Error(ErrorKind::InvalidArgument,
                        "countable chains support only the partition route");
        }
        const PartitionSpec part = build_partition(*mf.countable, thresholds);
        tried.push_back(partition_certificate(reduced_generator(*mf.countable, part), part));
    } else {
        const SwitchingModel& model = *mf.model;
        const Generator& g = model.generator();
        const BetaVector beta = beta_vector(model, mf.beta_overrides);
        const StationaryDist dist = stationary(g);
        std::cout << "beta = " << fmt(beta.beta) << "\nmu = " << fmt(dist.mu)
                  << "\naveraging = " << fmt(averaging_value(dist, beta)) << "\n";

        const bool all = route == "auto";
        auto wanted = [&](const char* r) { return all || route == r; };
        auto done = [&] { return !tried.empty() && tried.back().ok(); };
        if (wanted("pf")) tried.push_back(pf_certificate(g, beta));
        if (!done() && wanted("m1")) tried.push_back(m1_certificate(g, beta, model.gamma()));
        if (!done() && wanted("eigen") && (!all || reversibility(g, dist))) {
            tried.push_back(principal_eigenvalue(g, dist, beta));
        }
        if (!done() && wanted("partition") && (!all || !thresholds.empty())) {
            const PartitionSpec part = build_partition(beta, thresholds);
            tried.push_back(partition_certificate(reduced_generator(g, beta, part), part));
        }
    }
    if (tried.empty()) throw Error(ErrorKind::InvalidArgument, "unknown route '" + route + "'");

    for (const auto& o : tried) {
        if (o.ok()) {
            print_certificate(o.value());
            std::cout << "result: certified route=" << to_string(o.value().route) << "\n";
            return kOk;
        }
        print_refusal(o.refusal());
    }
    std::cout << "result: not-certified\n";
    return kRefused;
}

int cmd_stabilize(const std::string& path, const std::string& out_path) {
    const io::ModelFile mf = io::read_model(path);
    if (!mf.model) throw Error(ErrorKind::InvalidArgument, "stabilize needs a finite model");
    const StationaryDist dist = stationary(mf.model->generator());
    const LmiOutcome res = synthesize(*mf.model, dist);
    if (!res.ok()) {
        const LmiRefusal& r = res.refusal();
        std::cout << "result: refused " << to_string(r.failure) << " (" << r.detail << ")\n";
        if (r.not_controllable_hint) std::cout << "hint: NotControllableHint mode=" << r.mode << "\n";
        return kRefused;
    }
    const FeedbackSynthesis& s = res.value();
    io::write_json(out_path, io::synthesis_to_json(s));
    std::cout << "alpha = " << fmt(s.candidate.alpha) << "\naveraging = " << fmt(s.averaging)
              << "\nmargins = " << fmt(s.margins) << "\n";
    for (std::size_t i = 0; i < s.gains.size(); ++i) {
        std::cout << "K" << i << " = " << fmt(s.gains[i]) << "\n";
    }
    std::cout << "result: stabilized iterations=" << s.iterations << " out=" << out_path << "\n";
    return kOk;
}

struct SimulateArgs {
    std::string model;
    double horizon = 10.0;
    double step = 1e-3;
    long long paths = 100;
    std::uint64_t seed = 0;
    double tol = 1e-3;
    std::size_t threads = 0;
    std::string gains;
    std::string csv;
    std::string plot;
};

int cmd_simulate(const SimulateArgs& a) {
    const io::ModelFile mf = io::read_model(a.model);
    if (!mf.model) throw Error(ErrorKind::InvalidArgument, "simulate needs a finite model");
    if (a.paths < 1) throw Error(ErrorKind::InvalidArgument, "--paths must be at least 1");
    SimConfig cfg{a.horizon, a.step, static_cast<std::size_t>(a.paths), a.seed, mf.x0,
                  mf.initial_mode, std::nullopt, a.tol};
    if (!a.gains.empty()) cfg.gains = io::read_synthesis(a.gains).gains;
    const PathEnsemble ens = run_ensemble(*mf.model, cfg, a.threads);
    if (!a.csv.empty()) io::detail::write_text(a.csv, io::csv_text(ens, cfg.horizon));
    if (!a.plot.empty()) {
        io::detail::write_text(a.plot, io::svg_plot(ens, cfg.horizon, mf.model->mode_count()));
    }
    const EnsembleSummary& s = ens.summary;
    std::cout << "paths=" << s.paths << " converged_fraction=" << fmt(s.converged_fraction)
              << " mean_lyapunov=" << fmt(s.mean_lyapunov) << " stdev_lyapunov="
              << fmt(s.stdev_lyapunov) << " median_terminal_norm=" << fmt(s.median_terminal_norm)
              << " diverged=" << s.diverged << "\n";
    std::cout << "occupation = " << fmt(s.pooled_occupation) << "\n";
    return kOk;
}

void print_error(const std::string& kind, const std::string& message) {
    std::string escaped;
    for (char ch : message) {
        if (ch == '"' || ch == '\\') escaped += '\\';
        escaped += ch == '\n' ? ' ' : ch;
    }
    std::cerr << "error kind=" << kind << " message=\"" << escaped << "\"\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability certificates, feedback synthesis and simulation for "
                 "regime-switching diffusions"};
    app.require_subcommand(1);

    std::string model_path;
    std::string route = "auto";
    std::optional<std::vector<double>> thresholds;
    auto* certify = app.add_subcommand("certify", "Certify almost-sure stability");
    certify->add_option("model", model_path, "Model file (JSON)")->required();
    certify->add_option("--route", route, "auto|pf|m1|eigen|partition")
        ->check(CLI::IsMember({"auto", "pf", "m1", "eigen", "partition"}));
    certify->add_option("--thresholds", thresholds, "Partition thresholds k1,k2,...")
        ->delimiter(',');

    std::string out_path;
    auto* stabilize = app.add_subcommand("stabilize", "Synthesize mode-dependent feedback gains");
    stabilize->add_option("model", model_path, "Model file (JSON)")->required();
    stabilize->add_option("-o,--out", out_path, "Synthesis output file")->required();

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo path ensemble");
    simulate->set_help_flag("--help", "Print this help message and exit");
    simulate->add_option("model", sim.model, "Model file (JSON)")->required();
    simulate->add_option("--T", sim.horizon, "Horizon");
    simulate->add_option("--h", sim.step, "Maximum step");
    simulate->add_option("--paths", sim.paths, "Number of paths");
    simulate->add_option("--seed", sim.seed, "Seed");
    simulate->add_option("--tol", sim.tol, "Convergence tolerance relative to |x0|");
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
    simulate->add_option("--gains", sim.gains, "Synthesis file with gains (closed loop)");
    simulate->add_option("--csv", sim.csv, "CSV output path");
    simulate->add_option("--plot", sim.plot, "SVG output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("Usage", e.what());
        return kInputError;
    }

    try {
        if (*certify) return cmd_certify(model_path, route, thresholds);
        if (*stabilize) return cmd_stabilize(model_path, out_path);
        return cmd_simulate(sim);
    } catch (const Error& e) {
        print_error(to_string(e.kind()), e.message());
    } catch (const std::exception& e) {
        print_error("Internal", e.what());
    }
    return kInputError;
}
