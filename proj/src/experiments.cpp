// experiments.cpp — Batch experiment drivers and their artifacts

#include "atomarray/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "atomarray/io.hpp"

namespace atomarray {

namespace fs = std::filesystem;

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names = {"dispersion", "spectrum",     "scheme1",      "scheme2",
                                                   "bounds",     "scaling",      "fidelity-scan", "spin-spectrum"};
    return names;
}

void ExperimentConfig::validate() const
{
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
        throw std::invalid_argument("unknown experiment '" + experiment + "'");
    }
    if (n_atoms < 1 || n_atoms > 64) throw std::invalid_argument("N must lie in 1..64");
    if (!(kd > 0.0) || !(kd < kPi)) throw std::invalid_argument("kd must lie in (0, pi)");
    if (dipole != "parallel" && dipole != "perpendicular") throw std::invalid_argument("dipole must be parallel or perpendicular");
    if (n_max < 0 || n_max > n_atoms) throw std::invalid_argument("n_max must lie in 0..N");
    if (n_e < 0 || n_e > n_atoms) throw std::invalid_argument("n_e must lie in 0..N");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(omega >= 0.0)) throw std::invalid_argument("omega must be non-negative");
    if (model != "full" && model != "minimal") throw std::invalid_argument("model must be full or minimal");
    if (traj < 1) throw std::invalid_argument("traj must be positive");
    if (dt < 0.0 || t_end < 0.0 || settle < 0.0 || arrest < 0.0) {
        throw std::invalid_argument("dt, t_end, settle and arrest must be non-negative");
    }
    if (t_end > 0.0 && settle >= t_end) throw std::invalid_argument("settle must be below t_end");
    if (grid < 0 || grid == 1) throw std::invalid_argument("grid needs at least two points");
    if (top_m < 0) throw std::invalid_argument("top_m must be non-negative");
    if (samples < 1) throw std::invalid_argument("samples must be positive");
    if (out.empty()) throw std::invalid_argument("output directory must be set");
    if (dipole != "parallel" && experiment != "spectrum" && experiment != "fidelity-scan" &&
        experiment != "spin-spectrum") {
        throw std::invalid_argument("band-edge experiments need parallel dipoles");
    }
}

std::string ExperimentConfig::canonical() const
{
    std::ostringstream s;
    s << "experiment=" << experiment << "\nN=" << n_atoms << "\nkd=" << format_double(kd) << "\ndipole=" << dipole
      << "\nn_max=" << n_max << "\nn_e=" << n_e << "\nbeta=" << format_double(beta)
      << "\nomega=" << format_double(omega) << "\nmodel=" << model << "\ntraj=" << traj
      << "\ndt=" << format_double(dt) << "\nt_end=" << format_double(t_end) << "\nsettle=" << format_double(settle)
      << "\narrest=" << format_double(arrest) << "\nseed=" << seed << "\ngrid=" << grid << "\ntop_m=" << top_m
      << "\nsamples=" << samples << "\nrichardson=" << (richardson ? 1 : 0) << "\n";
    return s.str();
}

ArrayGeometry ExperimentConfig::geometry() const
{
    return make_geometry(n_atoms, kd, dipole == "parallel" ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX());
}

double round_down_125(double x)
{
    if (!(x > 0.0)) throw std::invalid_argument("round_down_125 needs a positive value");
    const double p = std::pow(10.0, std::floor(std::log10(x)));
    for (double m : {5.0, 2.0, 1.0})
        if (m * p <= x * (1.0 + 1e-12)) return m * p;
    return p;
}

// --------------------------------------------------------------------------

DispersionTable dispersion_table(double kd, int n_points)
{
    DispersionTable t;
    const MomentumGrid g = make_grid(n_points, -kPi, kPi, kd);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double k = g.k[i];
        cplx w;
        try {
            w = dispersion(kd, k);
        } catch (const SingularInputError&) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            w = {nan, nan};
            t.warnings.push_back(fmt::format("dispersion diverges at k = {} (light-cone edge), written as nan", k));
        }
        t.k.push_back(k);
        t.omega.push_back(w);
        t.light_cone.push_back(g.light_cone[i]);
    }
    t.zero_edge = band_edge(kd, EdgeTag::zero);
    t.pi_edge = band_edge(kd, EdgeTag::pi);
    return t;
}

// --------------------------------------------------------------------------
// Scheme 1

namespace {

int count_crossings(const std::vector<double>& a, const std::vector<double>& b)
{
    int n = 0;
    int last = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++n;
        last = s;
    }
    return n;
}

} // namespace

Scheme1Result scheme1(const ExperimentConfig& cfg, std::ostream& log)
{
    const int N = cfg.n_atoms;
    const int n_max = cfg.n_max > 0 ? cfg.n_max : 3;
    if (n_max < 3) throw std::invalid_argument("scheme1 needs n_max >= 3");
    const BasisPtr basis = build_basis(cfg.geometry(), n_max);
    const EffectiveHamiltonian h = build_h_eff(basis, 1.0);

    const StateVector b000 = boson_state(basis, {0, 0, 0}, EdgeTag::zero);
    const StateVector f0 = fermion_state(basis, {{1, 2, 3}, EdgeTag::zero});
    const StateVector fpi = fermion_state(basis, {{1, 2, 3}, EdgeTag::pi});
    const OperatorMatrix up = u_pi(basis);
    const StateVector start = apply(up, b000).normalized_copy();

    Scheme1Result r;
    const double t_nojump = cfg.t_end > 0.0 ? cfg.t_end : 200.0;
    const double step = 0.05;
    std::vector<double> grid;
    for (long i = 0; i * step <= t_nojump + 1e-12; ++i) grid.push_back(i * step);
    const NoJumpResult nj = no_jump_evolve(h, start, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        r.times.push_back(grid[i]);
        r.f_b.push_back(fidelity(nj.states[i], start));
        r.f_f.push_back(fidelity(nj.states[i], fpi));
    }
    r.crossings = count_crossings(r.f_b, r.f_f);

    if (cfg.arrest > 0.0) {
        r.arrest_time = cfg.arrest;
    } else {
        r.arrest_time = -1.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double d0 = r.f_f[i - 1] - r.f_b[i - 1], d1 = r.f_f[i] - r.f_b[i];
            if (d0 < 0.0 && d1 >= 0.0) {
                r.arrest_time = grid[i - 1] + (grid[i] - grid[i - 1]) * d0 / (d0 - d1);
                break;
            }
        }
        if (r.arrest_time < 0.0) throw NotConvergedError("F_b = F_f crossing not found in the no-jump window");
    }
    const StateVector inter = no_jump_evolve(h, start, {0.0, r.arrest_time}).states.back();
    log << fmt::format("scheme1: arrest at t = {:.4f}, F_b = {:.4f}, F_f = {:.4f}, crossings = {}\n", r.arrest_time,
                       fidelity(inter, start), fidelity(inter, fpi), r.crossings);

    const OpenSystem sys = full_model(h, DriveSpec{0.0, 0.0});
    McwfOptions opt;
    opt.dt = cfg.dt > 0.0 ? cfg.dt : 0.01;
    opt.t_end = 200.0;
    opt.sample_dt = 0.5;
    opt.spectral = true;
    const McwfEngine engine(sys, opt);
    r.samplers.add(density_observable(basis));
    r.samplers.add(excitation_observable(basis));

    const MomentumGrid pk_grid = cfg.grid > 0 ? make_grid(cfg.grid, -kPi, kPi, cfg.kd) : default_pk_grid(cfg.kd);
    const StateVector inter_flipped = apply(up, inter).normalized_copy();
    auto emit = [&](const StateVector& psi, std::uint64_t salt, Ensemble& ens, PkResult& pk, const char* name) {
        ens = run_ensemble(engine, psi, cfg.traj, cfg.seed + salt, r.samplers);
        pk = pk_distribution(ens, r.samplers, pk_grid, N, 3.0);
        if (!pk.tail_converged) {
            r.warnings.push_back(fmt::format("{}: residual excitation {:.3e} at t = {} (P_k tail truncated)", name,
                                             pk.residual_excitation, opt.t_end));
        }
        log << fmt::format("scheme1: {} emitted fraction {:.5f}\n", name, pk.emitted_fraction);
    };
    emit(b000, 0, r.ens_boson, r.pk_boson, "B000");
    emit(inter_flipped, 1, r.ens_inter, r.pk_inter, "U_pi inter");
    emit(f0, 2, r.ens_fermion, r.pk_fermion, "F0_123");
    return r;
}

ProfileFeatures profile_features(const PkResult& pk)
{
    ProfileFeatures f;
    const auto& g = pk.grid;
    const int n = static_cast<int>(g.size());
    int i_peak = -1;
    for (int i = 0; i < n; ++i)
        if (g.light_cone[i] && (i_peak < 0 || pk.pk(i) > pk.pk(i_peak))) i_peak = i;
    if (i_peak < 0) return f;
    f.peak = pk.pk(i_peak);
    const double half = 0.5 * f.peak;
    auto cross = [&](int dir) {
        int i = i_peak;
        while (i + dir >= 0 && i + dir < n && pk.pk(i + dir) >= half) i += dir;
        if (i + dir < 0 || i + dir >= n) return g.k[i];
        const double y0 = pk.pk(i), y1 = pk.pk(i + dir);
        return g.k[i] + (g.k[i + dir] - g.k[i]) * (y0 - half) / (y0 - y1);
    };
    f.fwhm = cross(1) - cross(-1);
    for (int i = 1; i + 1 < n; ++i) {
        if (!g.light_cone[i] || !g.light_cone[i - 1] || !g.light_cone[i + 1]) continue;
        if (pk.pk(i) < pk.pk(i - 1) && pk.pk(i) < pk.pk(i + 1)) f.minima.push_back(std::abs(g.k[i]));
    }
    std::sort(f.minima.begin(), f.minima.end());
    return f;
}

// --------------------------------------------------------------------------
// Scheme 2

namespace {

struct Scheme2Run {
    SteadyState ss;
    double fid_f, fid_b, se_f, se_b;
};

} // namespace

Scheme2Result scheme2(const ExperimentConfig& cfg, std::ostream& log)
{
    const int n_max = cfg.n_max > 0 ? cfg.n_max : 2;
    if (n_max < 2) throw std::invalid_argument("scheme2 needs n_max >= 2");
    const BasisPtr basis = build_basis(cfg.geometry(), n_max);
    const BandEdge edge = band_edge(cfg.kd, EdgeTag::zero);

    const OpenSystem sys =
        cfg.model == "full"
            ? full_model(build_h_eff(basis, cfg.beta), drive_full_model(edge, cfg.omega))
            : minimal_model(basis, edge, cfg.beta, drive_minimal_model(edge, cfg.omega));

    Scheme2Result r;
    const double rate = sys.max_rate() + cfg.omega;
    const double bound = 0.01 / rate;
    r.dt = cfg.dt > 0.0 ? cfg.dt : round_down_125(bound);
    const double relax = 1.0 / (cfg.beta * edge.gamma_ex());
    const double settle = cfg.settle > 0.0 ? cfg.settle : std::ceil(12.0 * relax);
    const double t_end = cfg.t_end > 0.0 ? cfg.t_end : 2.0 * settle;
    if (settle >= t_end) throw std::invalid_argument("settle must be below t_end");

    const StateVector f12 = fermion_state(basis, {{1, 2}, EdgeTag::zero});
    const StateVector b00 = boson_state(basis, {0, 0}, EdgeTag::zero);
    const auto off2 = basis->sector_offset(2);
    const auto len2 = basis->sector_size(2);
    const Vec ff = f12.amplitudes.segment(off2, len2);
    const Vec bb = b00.amplitudes.segment(off2, len2);
    const MomentumGrid g2_grid = cfg.grid > 0 ? make_grid(cfg.grid, 0.0, 0.2 * kPi, cfg.kd) : default_g2_grid(cfg.kd);

    SamplerSet s;
    s.add({"n2", 1, [off2, len2](const Vec& p, cplx* o) { o[0] = p.segment(off2, len2).squaredNorm(); }});
    s.add({"fF", 1, [ff, off2, len2](const Vec& p, cplx* o) { o[0] = std::norm(ff.dot(p.segment(off2, len2))); }});
    s.add({"fB", 1, [bb, off2, len2](const Vec& p, cplx* o) { o[0] = std::norm(bb.dot(p.segment(off2, len2))); }});
    s.add(g2_observable(basis, g2_grid, g2_grid));

    auto run = [&](double dt) {
        McwfOptions opt;
        opt.dt = dt;
        opt.t_end = t_end;
        opt.sample_dt = std::max(dt, round_down_125(t_end / 400.0));
        opt.keep_series = true;
        opt.series_width = 3;
        SteadyStateOptions so;
        so.t_settle = settle;
        so.stationary_channels = {"n2", "fF", "fB"};
        Scheme2Run out{steady_state_ensemble(sys, opt, so, ground_state(basis), cfg.traj, cfg.seed, s), 0, 0, 0, 0};
        const Vec& m = out.ss.window_mean;
        if (!(m(0).real() > 0.0)) throw UndefinedFidelityError("steady state has no two-excitation weight");
        out.fid_f = m(1).real() / m(0).real();
        out.fid_b = m(2).real() / m(0).real();
        std::vector<Vec> per;
        for (const auto& rec : out.ss.ensemble.records) per.push_back(rec.integral.head(3));
        out.se_f = bootstrap_se(per, [](const Vec& v) { return v(1).real() / v(0).real(); }, 200, cfg.seed ^ 0x5eed);
        out.se_b = bootstrap_se(per, [](const Vec& v) { return v(2).real() / v(0).real(); }, 200, cfg.seed ^ 0x5eed);
        return out;
    };

    log << fmt::format("scheme2: {} model, beta = {}, omega = {}, dt = {}, settle = {}, t_end = {}\n", cfg.model,
                       cfg.beta, cfg.omega, r.dt, settle, t_end);
    Scheme2Run base = run(r.dt);
    r.fid_fermion = base.fid_f;
    r.fid_boson = base.fid_b;
    r.se_fermion = base.se_f;
    r.se_boson = base.se_b;
    r.two_excitation = base.ss.window_mean(0).real();

    const auto& recs = base.ss.ensemble.records;
    for (std::size_t i = 0; i < recs.front().series_times.size(); ++i) {
        double n2 = 0, a = 0, b = 0;
        for (const auto& rec : recs) {
            n2 += rec.series[i](0).real();
            a += rec.series[i](1).real();
            b += rec.series[i](2).real();
        }
        r.trace_t.push_back(recs.front().series_times[i]);
        r.trace_fermion.push_back(n2 > 0.0 ? a / n2 : std::numeric_limits<double>::quiet_NaN());
        r.trace_boson.push_back(n2 > 0.0 ? b / n2 : std::numeric_limits<double>::quiet_NaN());
    }
    r.g2 = g2_map(base.ss.window_mean, s.offset("g2"), g2_grid, g2_grid);
    for (const auto& rec : recs) r.leakage += rec.leakage;
    r.leakage /= double(recs.size());
    if (r.leakage > 1e-4) r.warnings.push_back(fmt::format("truncation leakage {:.3e} exceeds 1e-4", r.leakage));
    r.steady = std::move(base.ss);
    r.samplers = s;

    if (cfg.richardson) {
        const Scheme2Run half = run(0.5 * r.dt);
        r.richardson_delta_f = half.fid_f - r.fid_fermion;
        r.richardson_delta_b = half.fid_b - r.fid_boson;
        const double tol_f = 3.0 * std::hypot(half.se_f, r.se_fermion);
        const double tol_b = 3.0 * std::hypot(half.se_b, r.se_boson);
        if (std::abs(r.richardson_delta_f) > tol_f || std::abs(r.richardson_delta_b) > tol_b) {
            r.warnings.push_back(fmt::format("halving dt moved the fidelities by {:.4f} / {:.4f}, beyond 3 SE",
                                             r.richardson_delta_f, r.richardson_delta_b));
        }
    }
    log << fmt::format("scheme2: F(F12) = {:.4f} +- {:.4f}, F(B00) = {:.4f} +- {:.4f}\n", r.fid_fermion, r.se_fermion,
                       r.fid_boson, r.se_boson);
    return r;
}

// --------------------------------------------------------------------------

ScalingResult scaling_laws(const std::vector<int>& n_values, double kd)
{
    ScalingResult r;
    const BandEdge pi_edge = band_edge(kd, EdgeTag::pi);
    const BandEdge zero_edge = band_edge(kd, EdgeTag::zero);
    for (int N : n_values) {
        const BasisPtr basis = build_basis(make_geometry(N, kd), 2);
        const EffectiveHamiltonian h = build_h_eff(basis, 1.0);
        const std::vector<FermionString> strings = {{{1, 2}, EdgeTag::pi}, {{1, 4}, EdgeTag::pi}};
        const Mat dh = delta_h_elements(h, pi_edge, strings);
        const FermionString f12{{1, 2}, EdgeTag::zero};
        const double q1 = q_grid(N)[0];
        const MomentumGrid off = make_grid(1, kPi / 2.0, kPi / 2.0, kd);
        const MomentumGrid on = make_grid(1, zero_edge.k_ex + q1 + 0.5 * kPi / (N + 1), 0.0, kd);
        r.n_atoms.push_back(N);
        r.diag.push_back(std::abs(dh(0, 0)));
        r.offdiag.push_back(std::abs(dh(0, 1)));
        r.occupation.push_back(occupation_spectrum(f12, N, off)(0));
        r.on_edge.push_back(occupation_spectrum(f12, N, on)(0));
        r.spacing.push_back(std::abs((toy_h1_energy(pi_edge, N, {1, 3}) - toy_h1_energy(pi_edge, N, {1, 2})).real()));
    }
    r.slope_diag = loglog_slope(r.n_atoms, r.diag);
    r.slope_offdiag = loglog_slope(r.n_atoms, r.offdiag);
    r.slope_occupation = loglog_slope(r.n_atoms, r.occupation);
    r.slope_spacing = loglog_slope(r.n_atoms, r.spacing);
    return r;
}

BoundsResult bound_samples(int N, int n_samples, std::uint64_t seed, double kd)
{
    BoundsResult r;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uk(-kPi, kPi);
    const auto q = q_grid(N);
    const int xi_max = std::max(3, N / 4);
    const double gap = 0.25 * kPi / (N + 1);
    while (static_cast<int>(r.k.size()) < n_samples) {
        const int n_e = std::uniform_int_distribution<int>(1, 3)(gen);
        std::vector<int> pool(xi_max);
        for (int i = 0; i < xi_max; ++i) pool[i] = i + 1;
        std::shuffle(pool.begin(), pool.end(), gen);
        std::vector<int> idx(pool.begin(), pool.begin() + n_e);
        std::sort(idx.begin(), idx.end());
        const FermionString s{idx, std::bernoulli_distribution(0.5)(gen) ? EdgeTag::pi : EdgeTag::zero};
        const double k = uk(gen);
        bool near = false;
        for (int xi : idx)
            for (double sign : {1.0, -1.0})
                if (std::abs(std::remainder(k - edge_momentum(s.tag) - sign * q[xi - 1], 2.0 * kPi)) < gap) near = true;
        if (near) continue;
        const BoundSample b = sigma_k_norm_bound(s, k, N, kd);
        r.strings.push_back(s);
        r.k.push_back(k);
        r.lhs.push_back(b.lhs);
        r.rhs.push_back(b.rhs);
        if (!(b.lhs < b.rhs)) ++r.violations;
    }
    return r;
}

// --------------------------------------------------------------------------

ValidationReport validate_config(const ExperimentConfig& cfg)
{
    ValidationReport v;
    int n_max = cfg.n_max;
    if (n_max == 0) {
        if (cfg.experiment == "scheme1") n_max = 3;
        else if (cfg.experiment == "scheme2") n_max = 2;
        else if (cfg.experiment == "fidelity-scan") n_max = cfg.n_e > 0 ? cfg.n_e : 2;
        else n_max = 1;
    }
    n_max = std::min(n_max, cfg.n_atoms);
    std::size_t largest = 0;
    double binom = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) binom = binom * (cfg.n_atoms - n + 1) / n;
        const auto c = static_cast<std::size_t>(std::llround(binom));
        v.basis_size += c;
        largest = std::max(largest, c);
    }
    // dense complex blocks: H_eff, eigenvectors and their inverse for the largest sector
    v.memory_mb = 3.0 * 16.0 * double(largest) * double(largest) / (1024.0 * 1024.0);
    v.lines.push_back(fmt::format("basis size: {} (N = {}, n_max = {})", v.basis_size, cfg.n_atoms, n_max));
    v.lines.push_back(fmt::format("largest sector: {}, dense memory estimate: {:.1f} MB", largest, v.memory_mb));

    if (cfg.dipole == "parallel") {
        const BandEdge edge = band_edge(cfg.kd, EdgeTag::zero);
        v.rbeta = rbeta(edge, cfg.n_atoms, cfg.beta);
        v.lines.push_back(fmt::format("r_beta: {:.5f} (beta = {}, N = {})", v.rbeta, cfg.beta, cfg.n_atoms));
        // largest single-excitation rate sets the step bound
        const BasisPtr b1 = build_basis(cfg.geometry(), 1);
        double gmax = 0.0;
        if (cfg.experiment == "scheme2" && cfg.model == "minimal") {
            gmax = cfg.beta * edge.gamma_ex();
        } else {
            const double beta = cfg.experiment == "scheme2" ? cfg.beta : 1.0;
            const JumpSet j = derive_jumps(build_h_eff(b1, beta));
            gmax = j.rates.maxCoeff();
        }
        const double drive = cfg.experiment == "scheme2" ? cfg.omega : 0.0;
        v.dt_bound = 0.01 / (gmax + drive);
        v.lines.push_back(fmt::format("dt stability bound: {:.5g} (max rate {:.5g})", v.dt_bound, gmax));
        if (cfg.dt > v.dt_bound) {
            v.warnings.push_back(fmt::format("dt = {} exceeds the stability bound {:.5g}", cfg.dt, v.dt_bound));
        }
    }
    return v;
}

// --------------------------------------------------------------------------
// Artifact writers

namespace {

struct Writer {
    const ExperimentConfig& cfg;
    ExperimentOutput& out;

    CsvWriter open(const std::string& name)
    {
        const std::string path = (fs::path(cfg.out) / name).string();
        CsvWriter w(path);
        w.manifest("experiment", cfg.experiment);
        w.manifest("config_hash", digest(cfg.canonical()));
        w.manifest("seed", std::to_string(cfg.seed));
        w.manifest("units", "energies and rates in gamma0, lengths in d, time in 1/gamma0");
        out.files.push_back(path);
        return w;
    }
};

std::string string_label(const FermionString& s)
{
    std::string out = to_string(s.tag);
    out += ":";
    for (std::size_t i = 0; i < s.indices.size(); ++i) out += (i ? "-" : "") + std::to_string(s.indices[i]);
    return out;
}

void write_pk(Writer& w, const std::string& name, const Scheme1Result& r)
{
    CsvWriter c = w.open(name);
    c.header({"k_pi_per_d", "light_cone", "P_B000", "se_B000", "P_inter", "se_inter", "P_F123", "se_F123"});
    const auto& g = r.pk_boson.grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
        c.row(std::vector<double>{g.k[i] / kPi, g.light_cone[i] ? 1.0 : 0.0, r.pk_boson.pk(i), r.pk_boson.se(i),
                                  r.pk_inter.pk(i), r.pk_inter.se(i), r.pk_fermion.pk(i), r.pk_fermion.se(i)});
    }
}

void write_matrix(Writer& w, const std::string& name, const CorrelationMap& m, bool log10)
{
    CsvWriter c = w.open(name);
    c.manifest("layout", "rows k1, columns k2, first column k1 in pi/d");
    std::vector<std::string> head = {"k1_pi_per_d"};
    for (double k : m.k2.k) head.push_back(format_double(k / kPi));
    c.header(head);
    const RMat v = log10 ? m.log10() : m.values;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        std::vector<double> row = {m.k1.k[i] / kPi};
        for (Eigen::Index j = 0; j < v.cols(); ++j) row.push_back(v(i, j));
        c.row(row);
    }
}

void add_warnings(ExperimentOutput& out, const std::vector<std::string>& w)
{
    out.warnings.insert(out.warnings.end(), w.begin(), w.end());
}

} // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg, std::ostream& log)
{
    cfg.validate();
    fs::create_directories(cfg.out);
    ExperimentOutput out;
    Writer w{cfg, out};
    const std::string& e = cfg.experiment;

    if (e == "dispersion") {
        const DispersionTable t = dispersion_table(cfg.kd, cfg.grid > 0 ? cfg.grid : 401);
        CsvWriter c = w.open("dispersion.csv");
        for (const auto* edge : {&t.zero_edge, &t.pi_edge}) {
            const std::string tag = to_string(edge->tag);
            c.manifest("edge_" + tag, fmt::format("Re omega = {}, gamma = {}, Re a2 = {}, Im a2 = {}",
                                                  format_double(edge->omega_ex.real()), format_double(edge->gamma_ex()),
                                                  format_double(edge->a2.real()), format_double(edge->a2.imag())));
        }
        c.header({"k_pi_per_d", "re_omega_gamma0", "gamma_gamma0", "light_cone"});
        for (std::size_t i = 0; i < t.k.size(); ++i) {
            c.row(std::vector<double>{t.k[i] / kPi, t.omega[i].real(), decay_rate(t.omega[i]),
                                      t.light_cone[i] ? 1.0 : 0.0});
        }
        add_warnings(out, t.warnings);
        out.summary["re_omega_0"] = t.zero_edge.omega_ex.real();
        out.summary["gamma_0"] = t.zero_edge.gamma_ex();
        out.summary["re_a2_0"] = t.zero_edge.a2.real();
        out.summary["re_omega_pi"] = t.pi_edge.omega_ex.real();
        out.summary["re_a2_pi"] = t.pi_edge.a2.real();
    } else if (e == "spectrum" || e == "fidelity-scan") {
        const int n_e = cfg.n_e > 0 ? cfg.n_e : (e == "spectrum" ? 1 : 2);
        const int n_max = cfg.n_max > 0 ? cfg.n_max : n_e;
        if (n_max < n_e) throw std::invalid_argument("n_max must cover n_e");
        const BasisPtr basis = build_basis(cfg.geometry(), n_max);
        const FidelityScan scan = fidelity_scan(basis, n_e, 1.0, e == "spectrum" ? 0 : cfg.top_m);
        CsvWriter c = w.open(e == "spectrum" ? "spectrum.csv" : fmt::format("fidelity_scan_ne{}.csv", n_e));
        c.manifest("n_e", std::to_string(n_e));
        c.header({"rank", "re_energy_gamma0", "decay_gamma0", "best_string", "fidelity"});
        double best = 0.0;
        for (const auto& s : scan.entries) {
            c.row(std::vector<std::string>{std::to_string(s.rank), format_double(s.eigenvalue.real()),
                                           format_double(s.decay), string_label(s.best), format_double(s.fidelity)});
            best = std::max(best, s.fidelity);
        }
        out.summary["fidelity_most_subradiant"] = scan.entries.front().fidelity;
        out.summary["fidelity_most_superradiant"] = scan.entries.back().fidelity;
        out.summary["fidelity_best"] = best;
    } else if (e == "scheme1") {
        const Scheme1Result r = scheme1(cfg, log);
        {
            CsvWriter c = w.open("scheme1_fidelity.csv");
            c.manifest("arrest_time", format_double(r.arrest_time));
            c.header({"t_per_gamma0", "F_b", "F_f"});
            for (std::size_t i = 0; i < r.times.size(); ++i) c.row(std::vector<double>{r.times[i], r.f_b[i], r.f_f[i]});
        }
        write_pk(w, "scheme1_pk.csv", r);
        for (const auto& [name, ens] : {std::pair{"B000", &r.ens_boson}, std::pair{"inter", &r.ens_inter},
                                        std::pair{"F123", &r.ens_fermion}}) {
            const std::string path = (fs::path(cfg.out) / fmt::format("scheme1_{}.jsonl", name)).string();
            write_trajectory_jsonl(path, *ens, r.samplers);
            out.files.push_back(path);
        }
        add_warnings(out, r.warnings);
        const ProfileFeatures fb = profile_features(r.pk_boson), ff = profile_features(r.pk_fermion);
        out.summary["arrest_time"] = r.arrest_time;
        out.summary["crossings"] = r.crossings;
        out.summary["peak_ratio_F_over_B"] = ff.peak / fb.peak;
        out.summary["fwhm_ratio_F_over_B"] = ff.fwhm / fb.fwhm;
        if (!fb.minima.empty()) out.summary["B000_first_minimum_pi_per_d"] = fb.minima.front() / kPi;
    } else if (e == "scheme2") {
        const Scheme2Result r = scheme2(cfg, log);
        {
            CsvWriter c = w.open("scheme2_fidelity.csv");
            c.manifest("window_fidelity_F12", fmt::format("{} +- {}", format_double(r.fid_fermion), format_double(r.se_fermion)));
            c.manifest("window_fidelity_B00", fmt::format("{} +- {}", format_double(r.fid_boson), format_double(r.se_boson)));
            c.manifest("dt", format_double(r.dt));
            c.header({"t_per_gamma0", "F_F12", "F_B00"});
            for (std::size_t i = 0; i < r.trace_t.size(); ++i)
                c.row(std::vector<double>{r.trace_t[i], r.trace_fermion[i], r.trace_boson[i]});
        }
        write_matrix(w, "scheme2_g2_log10.csv", r.g2, true);
        {
            CsvWriter c = w.open("scheme2_g2_diagonal.csv");
            c.header({"k_pi_per_d", "G_kk"});
            for (std::size_t i = 0; i < r.g2.k1.size(); ++i)
                c.row(std::vector<double>{r.g2.k1.k[i] / kPi, r.g2.values(i, i)});
        }
        const std::string path = (fs::path(cfg.out) / "scheme2_trajectories.jsonl").string();
        write_trajectory_jsonl(path, r.steady.ensemble, r.samplers);
        out.files.push_back(path);
        add_warnings(out, r.warnings);
        out.summary["fidelity_F12"] = r.fid_fermion;
        out.summary["fidelity_B00"] = r.fid_boson;
        out.summary["se_F12"] = r.se_fermion;
        out.summary["se_B00"] = r.se_boson;
        out.summary["leakage"] = r.leakage;
        if (cfg.richardson) {
            out.summary["richardson_delta_F12"] = r.richardson_delta_f;
            out.summary["richardson_delta_B00"] = r.richardson_delta_b;
        }
    } else if (e == "bounds") {
        const BoundsResult r = bound_samples(cfg.n_atoms, cfg.samples, cfg.seed, cfg.kd);
        CsvWriter c = w.open("bounds.csv");
        c.header({"string", "k_pi_per_d", "lhs", "rhs"});
        for (std::size_t i = 0; i < r.k.size(); ++i)
            c.row(std::vector<std::string>{string_label(r.strings[i]), format_double(r.k[i] / kPi),
                                           format_double(r.lhs[i]), format_double(r.rhs[i])});
        out.summary["violations"] = r.violations;
    } else if (e == "scaling") {
        const ScalingResult r = scaling_laws({16, 24, 32, 48, 64}, cfg.kd);
        CsvWriter c = w.open("scaling.csv");
        c.manifest("slope_diag", format_double(r.slope_diag));
        c.manifest("slope_offdiag", format_double(r.slope_offdiag));
        c.manifest("slope_occupation", format_double(r.slope_occupation));
        c.manifest("slope_spacing", format_double(r.slope_spacing));
        c.header({"N", "abs_dH_F12_F12", "abs_dH_F12_F14", "occupation_k_half_pi", "occupation_near_edge",
                  "spacing_F12_F13"});
        for (std::size_t i = 0; i < r.n_atoms.size(); ++i)
            c.row(std::vector<double>{r.n_atoms[i], r.diag[i], r.offdiag[i], r.occupation[i], r.on_edge[i],
                                      r.spacing[i]});
        out.summary["slope_diag"] = r.slope_diag;
        out.summary["slope_offdiag"] = r.slope_offdiag;
        out.summary["slope_occupation"] = r.slope_occupation;
        out.summary["slope_spacing"] = r.slope_spacing;
    } else if (e == "spin-spectrum") {
        CsvWriter c = w.open("spin_spectrum.csv");
        c.header({"n_e", "x", "analytic", "numeric", "fitted_prefactor", "relative_residual"});
        const int top = cfg.n_e > 0 ? cfg.n_e : 3;
        const int N = std::min(cfg.n_atoms, 10);
        for (int n_e = 0; n_e <= top; ++n_e) {
            const SpinSpectrum s = collective_spin_spectrum(N, n_e);
            for (Eigen::Index x = 0; x < s.analytic.size(); ++x) {
                const double num = x < s.numeric.size() ? s.numeric(x) : std::numeric_limits<double>::quiet_NaN();
                c.row(std::vector<double>{double(n_e), double(x), s.analytic(x), num, s.prefactor, s.residual});
            }
            out.summary[fmt::format("prefactor_ne{}", n_e)] = s.prefactor;
        }
    }
    return out;
}

} // namespace atomarray
