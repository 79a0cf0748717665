// atomarray — batch front end: `run <experiment>` and `validate`

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "atomarray/experiments.hpp"
#include "atomarray/io.hpp"

using namespace atomarray;

namespace {

enum ExitCode {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kInconsistent = 3,
    kNotConverged = 4,
    kNumerical = 5,
};

void apply_thread_env()
{
#ifdef _OPENMP
    if (const char* s = std::getenv("ATOMARRAY_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

std::string timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void print_manifest(const ExperimentConfig& cfg, const ExperimentOutput& out)
{
    std::ostringstream m;
    m << "generated: " << timestamp() << "\n";
    m << "experiment: " << cfg.experiment << "\n";
    m << "config_hash: " << digest(cfg.canonical()) << "\n";
    m << "seed: " << cfg.seed << "\n";
    for (const auto& [k, v] : out.summary) m << "summary." << k << ": " << format_double(v) << "\n";
    for (const auto& w : out.warnings) m << "warning: " << w << "\n";
    for (const auto& f : out.files) m << "file: " << f << "\n";
    std::cout << m.str();
    std::ofstream((std::filesystem::path(cfg.out) / "manifest.txt").string()) << m.str();
}

} // namespace

int main(int argc, char** argv)
{
    apply_thread_env();
    ExperimentConfig cfg;

    CLI::App app{"Free-fermion excited states of 1D atom arrays: batch experiments"};
    app.set_config("--config", "", "Flat key = value configuration file (flags override it)");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--N", cfg.n_atoms, "Number of atoms")->capture_default_str();
    app.add_option("--kd", cfg.kd, "k0 d")->capture_default_str();
    app.add_option("--dipole", cfg.dipole, "parallel | perpendicular")->capture_default_str();
    app.add_option("--n-max", cfg.n_max, "Excitation truncation (0: experiment default)");
    app.add_option("--n-e", cfg.n_e, "Excitation sector (0: experiment default)");
    app.add_option("--beta", cfg.beta, "Dissipation scale")->capture_default_str();
    app.add_option("--omega", cfg.omega, "Rabi frequency, gamma0")->capture_default_str();
    app.add_option("--model", cfg.model, "full | minimal")->capture_default_str();
    app.add_option("--traj", cfg.traj, "Trajectories")->capture_default_str();
    app.add_option("--dt", cfg.dt, "Time step (0: automatic)");
    app.add_option("--t-end", cfg.t_end, "End time (0: automatic)");
    app.add_option("--settle", cfg.settle, "Settle time before averaging (0: automatic)");
    app.add_option("--arrest", cfg.arrest, "Scheme-1 arrest time (0: F_b = F_f crossing)");
    app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
    app.add_option("--grid", cfg.grid, "Momentum grid points (0: experiment default)");
    app.add_option("--top-m", cfg.top_m, "Fidelity scan: states kept at each end")->capture_default_str();
    app.add_option("--samples", cfg.samples, "Bounds: random draws")->capture_default_str();
    app.add_flag("--richardson", cfg.richardson, "Scheme-2: repeat with dt / 2");
    app.add_option("--out", cfg.out, "Output directory")->capture_default_str();

    auto* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
    run->add_option("experiment", cfg.experiment, "Experiment name")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    auto* val = app.add_subcommand("validate", "Dry-run checks: basis size, memory, dt bound, r_beta");
    val->add_option("experiment", cfg.experiment, "Experiment name")->check(CLI::IsMember(experiment_names()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*val) {
            const ValidationReport v = validate_config(cfg);
            for (const auto& l : v.lines) std::cout << l << "\n";
            for (const auto& w : v.warnings) std::cout << "warning: " << w << "\n";
            return kOk;
        }
        const ExperimentOutput out = run_experiment(cfg, std::cerr);
        print_manifest(cfg, out);
        return kOk;
    } catch (const NotConvergedError& e) {
        std::cerr << "not converged: " << e.what() << "\n";
        return kNotConverged;
    } catch (const NumericalInconsistencyError& e) {
        std::cerr << "numerical inconsistency: " << e.what() << "\n";
        return kInconsistent;
    } catch (const ModelInconsistencyError& e) {
        std::cerr << "model inconsistency: " << e.what() << "\n";
        return kInconsistent;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
