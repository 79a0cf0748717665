// acceptance — one PASS/FAIL line per acceptance criterion
//
//   acceptance            run every criterion
//   acceptance --only 7   run criterion 7

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "atomarray/experiments.hpp"
#include "support/lindblad_oracle.hpp"

using namespace atomarray;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ostream& quiet()
{
    static std::ostringstream sink;
    sink.str("");
    return sink;
}

Outcome band_values()
{
    const auto t0 = std::chrono::steady_clock::now();
    const BandEdge e = band_edge(kPi / 2.0, EdgeTag::zero);
    const double w = e.omega_ex.real(), g = e.gamma_ex(), a = e.a2.real();
    double worst = 0.0;
    for (int i = 1; i <= 400; ++i) {
        const double k = kPi / 2.0 + (kPi / 2.0) * i / 400.0;
        worst = std::max({worst, std::abs(decay_rate(dispersion(kPi / 2.0, k))),
                          std::abs(decay_rate(dispersion(kPi / 2.0, -k)))});
    }
    const double el = seconds_since(t0);
    const bool ok = std::abs(w + 1.03) <= 0.02 && std::abs(g - 3.0) <= 0.1 && std::abs(a - 0.17) <= 0.01 &&
                    worst < 1e-6 && el < 1.0;
    return {ok, fmt::format("Re w(0) = {:.5f}, gamma(0) = {:.5f}, Re a2 = {:.5f}, max gamma outside cone = {:.2e}, {:.3f} s",
                            w, g, a, worst, el)};
}

Outcome sector_sizes()
{
    const BasisPtr b = build_basis(make_geometry(20, kPi / 2.0), 4);
    const bool ok = b->sector_size(2) == 190 && b->sector_size(3) == 1140 && b->sector_size(4) == 4845 &&
                    b->size() == 6196;
    return {ok, fmt::format("{} / {} / {}, total {}", b->sector_size(2), b->sector_size(3), b->sector_size(4), b->size())};
}

Outcome overlap()
{
    const BasisPtr b = build_basis(make_geometry(20, kPi / 2.0), 3);
    const double f = fidelity(fermion_state(b, {{1, 2, 3}, EdgeTag::zero}), boson_state(b, {0, 0, 0}, EdgeTag::zero));
    return {std::abs(f - 0.53) <= 0.01, fmt::format("|<F0_123|B000>|^2 = {:.5f}", f)};
}

Outcome rbeta_values()
{
    const BandEdge e = band_edge(kPi / 2.0, EdgeTag::zero);
    const double r25 = rbeta(e, 20, 1.0 / 25.0), r150 = rbeta(e, 20, 1.0 / 150.0);
    const bool ok = std::abs(r25 / 0.004 - 1.0) <= 0.15 && std::abs(r150 / 0.02 - 1.0) <= 0.15;
    return {ok, fmt::format("r(1/25) = {:.5f}, r(1/150) = {:.5f}", r25, r150)};
}

Outcome jordan_wigner()
{
    const int N = 8;
    const BasisPtr b = build_basis(make_geometry(N, kPi / 2.0), 3);
    double worst_res = 0.0, worst_gram = 0.0;
    int count = 0;
    for (EdgeTag tag : {EdgeTag::zero, EdgeTag::pi}) {
        const BandEdge e = band_edge(kPi / 2.0, tag);
        const OperatorMatrix h1 = toy_h1(b, e);
        for (int n_e = 1; n_e <= 3; ++n_e) {
            const auto strings = enumerate_strings(n_e, N, tag);
            Mat cols(b->size(), strings.size());
            for (std::size_t i = 0; i < strings.size(); ++i) {
                const StateVector f = fermion_state(b, strings[i]);
                const cplx E = toy_h1_energy(e, N, strings[i].indices);
                worst_res = std::max(worst_res, (h1.apply(f.amplitudes) - E * f.amplitudes).norm());
                cols.col(i) = f.amplitudes;
                ++count;
            }
            const Mat gram = cols.adjoint() * cols;
            worst_gram = std::max(worst_gram, (gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff());
        }
    }
    return {worst_res < 1e-10 && worst_gram < 1e-10,
            fmt::format("{} strings, max residual {:.2e}, max Gram deviation {:.2e}", count, worst_res, worst_gram)};
}

Outcome scaling()
{
    const auto t0 = std::chrono::steady_clock::now();
    const ScalingResult r = scaling_laws({16, 24, 32, 48, 64}, kPi / 2.0);
    const double el = seconds_since(t0);
    const bool ok = std::abs(r.slope_diag + 3.0) <= 0.3 && std::abs(r.slope_occupation + 4.0) <= 0.3 && el < 600.0;
    return {ok, fmt::format("dH slope {:.3f}, occupation slope {:.3f} (off-diagonal {:.3f}, spacing {:.3f}), {:.0f} s",
                            r.slope_diag, r.slope_occupation, r.slope_offdiag, r.slope_spacing, el)};
}

Outcome bound()
{
    const auto t0 = std::chrono::steady_clock::now();
    const BoundsResult r = bound_samples(40, 200, 2024, kPi / 2.0);
    double tightest = 0.0;
    for (std::size_t i = 0; i < r.k.size(); ++i) tightest = std::max(tightest, r.lhs[i] / r.rhs[i]);
    const double el = seconds_since(t0);
    return {r.violations == 0 && r.k.size() == 200 && el < 300.0,
            fmt::format("{} samples, {} violations, max lhs/rhs {:.3f}, {:.0f} s", r.k.size(), r.violations, tightest, el)};
}

Outcome mcwf_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    const int N = 4;
    const BasisPtr b = build_basis(make_geometry(N, kPi / 2.0), N);
    const BandEdge e = band_edge(kPi / 2.0, EdgeTag::zero);
    const DriveSpec drive = drive_full_model(e, 0.01);
    const OpenSystem sys = full_model(build_h_eff(b, 1.0), drive);
    const std::vector<int> sites = {1, 3};
    const StateVector psi0 = basis_state(b, sites);

    const std::size_t d = b->size();
    SamplerSet s;
    s.add({"rho", int(d * d), [d](const Vec& p, cplx* out) {
               const Mat r = p * p.adjoint() / p.squaredNorm();
               std::copy(r.data(), r.data() + d * d, out);
           }});
    McwfOptions opt;
    opt.dt = round_down_125(0.01 / (sys.max_rate() + drive.rabi));
    opt.t_end = 5.0;
    opt.checkpoints = {1.0, 2.0, 3.0, 4.0, 5.0};
    const McwfEngine engine(sys, opt);
    const int n_traj = 2000;
    const Ensemble ens = run_ensemble(engine, psi0, n_traj, 77, s);

    const oracle::Lindblad L = oracle::build(*b, 1.0, drive.detuning, drive.rabi);
    Mat rho = psi0.amplitudes * psi0.amplitudes.adjoint();
    double t = 0.0;
    auto trace_distance = [](const Mat& a) {
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
        return 0.5 * es.eigenvalues().cwiseAbs().sum();
    };
    bool ok = true;
    std::string detail = fmt::format("dt = {}:", opt.dt);
    for (std::size_t c = 0; c < opt.checkpoints.size(); ++c) {
        rho = L.evolve(rho, opt.checkpoints[c] - t, 1e-3);
        t = opt.checkpoints[c];
        std::vector<Vec> per;
        for (const auto& r : ens.records) per.push_back(r.checkpoint_samples[c]);
        const Vec mean_v = ens.mean_checkpoint(c);
        const Mat mean = Eigen::Map<const Mat>(mean_v.data(), d, d);
        const double dist = trace_distance(mean - rho);
        double ms = 0.0;
        const auto boots = bootstrap_means(per, 200, 99 + c);
        for (const auto& bm : boots) ms += std::pow(trace_distance(Eigen::Map<const Mat>(bm.data(), d, d) - mean), 2);
        const double se = std::sqrt(ms / boots.size());
        ok = ok && dist < 3.0 * se;
        detail += fmt::format(" t={:.0f} D={:.4f} (3se {:.4f})", t, dist, 3.0 * se);
    }
    const double el = seconds_since(t0);
    ok = ok && el < 600.0;
    return {ok, detail + fmt::format(", {:.0f} s", el)};
}

Outcome parity()
{
    const BasisPtr b = build_basis(make_geometry(20, kPi / 2.0), 2);
    const MomentumGrid g = make_grid(201, -kPi, kPi, kPi / 2.0);
    std::vector<std::pair<std::string, StateVector>> states;
    for (auto [x1, x2] : {std::pair{1, 3}, std::pair{2, 4}, std::pair{1, 5}, std::pair{3, 5}})
        states.emplace_back(fmt::format("F0_{}{}", x1, x2), fermion_state(b, {{x1, x2}, EdgeTag::zero}));
    for (auto [x1, x2] : {std::pair{1, 2}, std::pair{2, 3}, std::pair{1, 4}, std::pair{3, 6}})
        states.emplace_back(fmt::format("B_{}{}", x1, x2), boson_state(b, {x1, x2}, EdgeTag::zero));
    auto anti_diagonal = [&](const StateVector& st) {
        const CorrelationMap m = g2_map(st, g, g);
        const int n = static_cast<int>(g.size());
        double v = 0.0;
        for (int i = 0; i < n; ++i) v = std::max(v, std::abs(m.values(i, n - 1 - i)));
        return v / m.max();
    };
    double worst = 0.0;
    for (const auto& [name, st] : states) worst = std::max(worst, anti_diagonal(st));
    // the plane-wave mode is reflection even, outside the sine-mode rule
    const double plane = anti_diagonal(boson_state(b, {0, 1}, EdgeTag::zero));
    return {worst < 1e-10, fmt::format("{} sine-mode states, max G(k,-k)/max G = {:.2e} (B_01 with plane wave: {:.2f})",
                                       states.size(), worst, plane)};
}

Outcome scheme1_check()
{
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg;
    cfg.experiment = "scheme1";
    cfg.traj = 1000;
    const Scheme1Result r = scheme1(cfg, quiet());
    const ProfileFeatures fb = profile_features(r.pk_boson), ff = profile_features(r.pk_fermion);
    const bool late = r.f_f.back() > r.f_b.back();
    double first_min = -1.0;
    for (double m : fb.minima)
        if (std::abs(m - 0.1 * kPi) <= 0.02 * kPi) first_min = m;
    const double el = seconds_since(t0);
    const bool ok = r.crossings == 1 && late && first_min > 0.0 && ff.peak < fb.peak && ff.fwhm > fb.fwhm &&
                    el <= 3600.0;
    return {ok, fmt::format("crossings {}, arrest t = {:.3f}, late F_f {:.3f} vs F_b {:.3f}, B000 minimum at "
                            "{:.3f} pi, peak F/B {:.3f}, FWHM F/B {:.3f}, {:.0f} s",
                            r.crossings, r.arrest_time, r.f_f.back(), r.f_b.back(), first_min / kPi, ff.peak / fb.peak,
                            ff.fwhm / fb.fwhm, el)};
}

Outcome scheme2_check()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto run = [](double beta, double omega, const char* model) {
        ExperimentConfig cfg;
        cfg.experiment = "scheme2";
        cfg.beta = beta;
        cfg.omega = omega;
        cfg.model = model;
        cfg.traj = 1000;
        return scheme2(cfg, quiet());
    };
    const Scheme2Result a = run(1.0 / 25.0, 0.01, "full");
    const Scheme2Result c = run(1.0 / 150.0, 0.008, "full");
    const Scheme2Result m = run(1.0 / 25.0, 0.01, "minimal");
    const double el = seconds_since(t0);
    const bool ok1 = std::abs(a.fid_fermion - a.fid_boson) <= 0.1;
    const bool ok2 = c.fid_fermion - c.fid_boson >= 0.2;
    const bool ok3 = m.fid_boson > m.fid_fermion;
    return {ok1 && ok2 && ok3 && el <= 7200.0,
            fmt::format("full 1/25: F {:.4f}+-{:.4f} B {:.4f}+-{:.4f} (gap {:.5f}) [{}]; full 1/150: F {:.4f} B {:.4f} "
                        "(gap {:.4f}) [{}]; minimal 1/25: F {:.4f} B {:.4f} [{}]; {:.0f} s",
                        a.fid_fermion, a.se_fermion, a.fid_boson, a.se_boson, a.fid_fermion - a.fid_boson,
                        ok1 ? "ok" : "fail", c.fid_fermion, c.fid_boson, c.fid_fermion - c.fid_boson,
                        ok2 ? "ok" : "fail", m.fid_fermion, m.fid_boson, ok3 ? "ok" : "fail", el)};
}

Outcome fidelity_scan_check()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto scan = [](int n_e, int top) {
        return fidelity_scan(build_basis(make_geometry(20, kPi / 2.0), n_e), n_e, 1.0, top);
    };
    auto best = [](const FidelityScan& s) {
        double b = 0.0;
        for (const auto& e : s.entries) b = std::max(b, e.fidelity);
        return b;
    };
    const FidelityScan s2 = scan(2, 0);
    const FidelityScan s3 = scan(3, 100);
    const FidelityScan s4 = scan(4, 100);
    const double sub2 = s2.entries.front().fidelity, sup2 = s2.entries.back().fidelity;
    const double b3 = best(s3), b4 = best(s4);
    const double el = seconds_since(t0);
    const bool ok = sub2 >= 0.9 && sup2 >= 0.9 && b4 < b3 && el < 900.0;
    return {ok, fmt::format("n_e=2 most sub {:.4f}, most super {:.4f}; best n_e=3 {:.4f}, best n_e=4 {:.4f} "
                            "(most subradiant {:.4f} / {:.4f}); {:.0f} s",
                            sub2, sup2, b3, b4, s3.entries.front().fidelity, s4.entries.front().fidelity, el)};
}

Outcome spin_spectrum()
{
    double worst = 0.0, lo = 1e300, hi = -1e300;
    int fits = 0;
    for (int N : {6, 7, 8, 9, 10}) {
        for (int n_e = 1; n_e <= 3; ++n_e) {
            const SpinSpectrum s = collective_spin_spectrum(N, n_e);
            if (!std::isfinite(s.prefactor)) return {false, fmt::format("no fit at N = {}, n_e = {}", N, n_e)};
            worst = std::max(worst, s.residual);
            lo = std::min(lo, s.prefactor);
            hi = std::max(hi, s.prefactor);
            ++fits;
        }
    }
    const bool ok = worst < 1e-10 && (hi - lo) < 1e-10 * std::abs(hi);
    return {ok, fmt::format("{} fits, fitted prefactor {:.12f} (spread {:.1e}), max residual {:.1e}", fits, hi, hi - lo,
                            worst)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance checks"};
    int only = 0;
    app.add_option("--only", only, "Run a single criterion (1-13)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all = {
        {1, "band values", band_values},
        {2, "sector sizes", sector_sizes},
        {3, "fermion/boson overlap", overlap},
        {4, "r_beta", rbeta_values},
        {5, "Jordan-Wigner exactness", jordan_wigner},
        {6, "scaling laws", scaling},
        {7, "sigma_k bound", bound},
        {8, "MCWF vs Lindblad", mcwf_oracle},
        {9, "parity selection rules", parity},
        {10, "scheme-1 reproduction", scheme1_check},
        {11, "scheme-2 reproduction", scheme2_check},
        {12, "fidelity scan", fidelity_scan_check},
        {13, "collective-spin spectrum", spin_spectrum},
    };

    int failed = 0, ran = 0;
    for (const auto& c : all) {
        if (only != 0 && c.id != only) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << fmt::format("[{}] criterion {:2d} {}: {}", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail)
                  << std::endl;
    }
    if (ran == 0) {
        std::cerr << "no criterion with id " << only << "\n";
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
