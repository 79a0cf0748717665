// dynamics.cpp — Jump derivation, no-jump propagation and the MCWF engine

#include "atomarray/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "atomarray/linalg.hpp"

namespace atomarray {

JumpSet derive_jumps(const EffectiveHamiltonian& h)
{
    if (h.basis->n_max() < 1) throw std::invalid_argument("jump derivation needs the single-excitation sector");
    const Mat g = 2.0 * h.beta * h.h_im.block(1);
    if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw ModelInconsistencyError("dissipative part is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.info() != Eigen::Success) throw NotConvergedError("dissipator eigensolve failed");
    JumpSet j;
    j.rates = es.eigenvalues();
    for (Eigen::Index i = 0; i < j.rates.size(); ++i) {
        if (j.rates(i) < -1e-6) {
            throw ModelInconsistencyError(fmt::format("negative decay rate {:.3e}", j.rates(i)));
        }
        if (j.rates(i) < -1e-9) {
            fmt::print(stderr, "warning: clamping decay rate {:.3e} to zero\n", j.rates(i));
        }
        j.rates(i) = std::max(j.rates(i), 0.0);
    }
    j.modes = es.eigenvectors();
    return j;
}

void DriveSpec::validate() const
{
    if (!(rabi >= 0.0) || !std::isfinite(rabi)) throw std::invalid_argument("Rabi frequency must be >= 0");
    if (!std::isfinite(detuning)) throw std::invalid_argument("detuning must be finite");
}

DriveSpec drive_full_model(const BandEdge& edge, double rabi)
{
    return {rabi, edge.omega_ex.real()};
}

DriveSpec drive_minimal_model(const BandEdge& edge, double rabi)
{
    return {rabi, -2.0 * edge.a2.real()};
}

OperatorMatrix drive_operator(const BasisPtr& basis)
{
    const OperatorMatrix s = spin_wave_op(basis, 0.0);
    return s + s.adjoint();
}

BlockOperator OpenSystem::nonhermitian_blocks() const
{
    const Mat r = jumps.rate_matrix();
    BlockOperator out = coherent;
    for (int n = 1; n <= basis->n_max(); ++n) {
        Mat& b = out.block(n);
        b.diagonal().array() -= drive.detuning * n;
        b -= 0.5 * kI * assemble_sector(*basis, n, r);
    }
    return out;
}

Mat OpenSystem::nonhermitian_dense() const
{
    Mat h = nonhermitian_blocks().to_dense();
    if (drive.rabi > 0.0) h += drive.rabi * drive_operator(basis).to_dense();
    return h;
}

double OpenSystem::max_rate() const
{
    return jumps.size() ? jumps.rates.maxCoeff() : 0.0;
}

namespace {

JumpSet drop_channels(const JumpSet& in, double below)
{
    std::vector<int> keep;
    for (int i = 0; i < in.size(); ++i)
        if (in.rates(i) >= below) keep.push_back(i);
    JumpSet out;
    out.rates.resize(keep.size());
    out.modes.resize(in.modes.rows(), keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
        out.rates(j) = in.rates(keep[j]);
        out.modes.col(j) = in.modes.col(keep[j]);
    }
    return out;
}

} // namespace

OpenSystem full_model(const EffectiveHamiltonian& h, const DriveSpec& drive, double drop_below)
{
    drive.validate();
    return {h.basis, h.h_re, drop_channels(derive_jumps(h), drop_below), drive};
}

OpenSystem minimal_model(const BasisPtr& basis, const BandEdge& edge, double beta, const DriveSpec& drive)
{
    drive.validate();
    auto toy = toy_h1_dissipative(basis, edge, beta);
    const OperatorMatrix herm = cplx(0.5) * (toy.h + toy.h.adjoint());
    return {basis, BlockOperator::from_operator(herm), std::move(toy.jumps), drive};
}

// --------------------------------------------------------------------------

namespace {

int top_sector(const ExcitationBasis& b, const Vec& psi)
{
    for (int n = b.n_max(); n > 0; --n) {
        if (psi.segment(b.sector_offset(n), b.sector_size(n)).squaredNorm() > 0.0) return n;
    }
    return 0;
}

void require_normalized(const StateVector& v, const char* what)
{
    if (std::abs(v.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument(fmt::format("{} requires a normalized initial state", what));
    }
}

} // namespace

NoJumpResult no_jump_evolve(const BlockOperator& h_nh, const StateVector& psi0, const std::vector<double>& t_grid)
{
    require_same_basis(*h_nh.basis(), *psi0.basis, "no-jump evolution");
    require_normalized(psi0, "no-jump evolution");
    const auto& b = *psi0.basis;
    std::vector<bool> present(b.n_max() + 1, false);
    for (int n = 0; n <= b.n_max(); ++n)
        present[n] = psi0.amplitudes.segment(b.sector_offset(n), b.sector_size(n)).squaredNorm() > 0.0;

    std::map<long long, std::vector<Mat>> cache;
    auto step_blocks = [&](double tau) -> const std::vector<Mat>& {
        const long long key = std::llround(tau * 1e12);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        std::vector<Mat> blocks(b.n_max() + 1);
        for (int n = 0; n <= b.n_max(); ++n) {
            if (present[n]) blocks[n] = (Mat(-kI * tau * h_nh.block(n))).exp();
        }
        return cache.emplace(key, std::move(blocks)).first->second;
    };

    NoJumpResult out;
    Vec psi = psi0.amplitudes;
    double log_norm2 = 0.0;
    double t = 0.0;
    for (double target : t_grid) {
        if (target < t - 1e-12) throw std::invalid_argument("time grid must be non-decreasing from 0");
        const double tau = target - t;
        if (tau > 1e-14) {
            const auto& blocks = step_blocks(tau);
            for (int n = 0; n <= b.n_max(); ++n) {
                if (!present[n]) continue;
                auto seg = psi.segment(b.sector_offset(n), b.sector_size(n));
                seg = blocks[n] * Vec(seg);
            }
            const double n2 = psi.squaredNorm();
            if (!(n2 > 1e-150)) {
                throw PrecisionError(fmt::format("norm underflow at t = {} (|psi|^2 = {:.3e})", target, n2));
            }
            log_norm2 += std::log(n2);
            psi /= std::sqrt(n2);
            t = target;
        }
        out.times.push_back(target);
        out.states.emplace_back(psi0.basis, psi, true);
        out.log_norm2.push_back(log_norm2);
    }
    return out;
}

NoJumpResult no_jump_evolve(const EffectiveHamiltonian& h, const StateVector& psi0, const std::vector<double>& t_grid)
{
    BlockOperator blocks = BlockOperator::zeros(h.basis);
    for (int n = 1; n <= h.basis->n_max(); ++n) blocks.block(n) = h.sector(n);
    return no_jump_evolve(blocks, psi0, t_grid);
}

// --------------------------------------------------------------------------

void SamplerSet::add(Observable o)
{
    if (o.width < 1) throw std::invalid_argument("observable width must be positive");
    offsets_.push_back(width_);
    width_ += o.width;
    obs_.push_back(std::move(o));
}

int SamplerSet::offset(const std::string& name) const
{
    for (std::size_t i = 0; i < obs_.size(); ++i)
        if (obs_[i].name == name) return offsets_[i];
    throw std::invalid_argument(fmt::format("unknown observable '{}'", name));
}

void SamplerSet::eval(const Vec& psi, Vec& out) const
{
    out.resize(width_);
    for (std::size_t i = 0; i < obs_.size(); ++i) obs_[i].eval(psi, out.data() + offsets_[i]);
}

// --------------------------------------------------------------------------

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index)
{
    auto splitmix = [](std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    };
    return splitmix(master ^ splitmix(index));
}

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed)
    {
        std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32)};
        gen_.seed(seq);
    }
    /// Uniform on (0, 1).
    double uniform()
    {
        double u;
        do {
            u = double(gen_() >> 11) * 0x1.0p-53;
        } while (u == 0.0);
        return u;
    }

private:
    std::mt19937_64 gen_;
};

/// Trapezoid accumulation into [w0, w1] of the linear interpolant between (a, fa) and (b, fb).
void accumulate(Vec& acc, double w0, double w1, double a, double b, const Vec& fa, const Vec& fb)
{
    const double lo = std::max(a, w0), hi = std::min(b, w1);
    if (!(hi > lo) || !(b > a)) return;
    const double sa = (lo - a) / (b - a), sb = (hi - a) / (b - a);
    acc += (0.5 * (hi - lo)) * ((1.0 - sa) * fa + sa * fb + (1.0 - sb) * fa + sb * fb);
}

struct Accumulators {
    double t_start, t_mid, t_end;
    Vec total, first, second;
    bool have_prev = false;
    double t_prev = 0.0;
    Vec f_prev;

    Accumulators(double ts, double te, int width)
        : t_start(ts), t_mid(0.5 * (ts + te)), t_end(te), total(Vec::Zero(width)), first(Vec::Zero(width)),
          second(Vec::Zero(width))
    {
    }

    /// Adds the segment from the previous point; `restart` breaks continuity
    /// (value jumps at the same time are passed as a new point with restart).
    void point(double t, const Vec& f, bool restart = false)
    {
        if (have_prev && !restart) {
            accumulate(total, t_start, t_end, t_prev, t, f_prev, f);
            accumulate(first, t_start, t_mid, t_prev, t, f_prev, f);
            accumulate(second, t_mid, t_end, t_prev, t, f_prev, f);
        }
        have_prev = true;
        t_prev = t;
        f_prev = f;
    }
};

} // namespace

McwfEngine::McwfEngine(OpenSystem system, McwfOptions options) : sys_(std::move(system)), opt_(std::move(options)),
    raise0_(zero_op(sys_.basis))
{
    sys_.drive.validate();
    sys_.jumps.validate(1e-10);
    if (!(opt_.dt > 0.0) || !(opt_.t_end > 0.0)) throw std::invalid_argument("dt and t_end must be positive");
    if (opt_.t_start < 0.0 || opt_.t_start > opt_.t_end) throw std::invalid_argument("t_start outside [0, t_end]");
    driven_ = sys_.drive.rabi > 0.0;
    const auto& b = *sys_.basis;

    for (int i = 0; i < sys_.jumps.size(); ++i)
        if (sys_.jumps.rates(i) >= 1e-12) active_.push_back(i);
    site_lowering_modes_.resize(b.n_atoms(), active_.size());
    for (std::size_t j = 0; j < active_.size(); ++j)
        site_lowering_modes_.col(j) = sys_.jumps.modes.col(active_[j]).conjugate();

    if (opt_.spectral) {
        if (driven_) throw std::invalid_argument("spectral sampling requires an undriven system");
        const BlockOperator h = sys_.nonhermitian_blocks();
        spectra_.resize(b.n_max() + 1);
        for (int n = 1; n <= b.n_max(); ++n) {
            const Mat& hn = h.block(n);
            auto eig = eig_general(hn);
            SectorSpectrum s{eig.values, eig.vectors, eig.vectors.partialPivLu().inverse()};
            const double scale = std::max(hn.cwiseAbs().maxCoeff(), 1e-300);
            const double resid =
                (s.vectors * s.values.asDiagonal() * s.inverse - hn).cwiseAbs().maxCoeff() / scale;
            if (resid > 1e-8) {
                throw NumericalInconsistencyError(
                    fmt::format("sector {} eigenbasis reconstructs H_nh only to {:.2e}", n, resid));
            }
            spectra_[n] = std::move(s);
        }
        return;
    }

    const double bound = 0.01 / (sys_.max_rate() + sys_.drive.rabi);
    if (opt_.dt > bound * (1.0 + 1e-9)) {
        throw StepTooLargeError(fmt::format("dt = {} exceeds the stability bound {:.4g}", opt_.dt, bound));
    }
    if (driven_) {
        full_step_ = (Mat(-kI * opt_.dt * sys_.nonhermitian_dense())).exp();
        raise0_ = spin_wave_op(sys_.basis, 0.0);
    } else {
        const BlockOperator h = sys_.nonhermitian_blocks();
        block_step_.resize(b.n_max() + 1);
        for (int n = 0; n <= b.n_max(); ++n) block_step_[n] = (Mat(-kI * opt_.dt * h.block(n))).exp();
    }
}

namespace {

/// Column j holds sigma_{j+1} psi.
Mat site_lowered(const ExcitationBasis& b, const Vec& psi, int top)
{
    Mat a = Mat::Zero(b.size(), b.n_atoms());
    const std::size_t end = b.sector_offset(top) + b.sector_size(top);
    for (std::size_t i = b.sector_offset(1); i < end; ++i) {
        const cplx amp = psi(i);
        if (amp == cplx(0.0)) continue;
        const Mask s = b.state(i);
        Mask occ = s;
        while (occ) {
            const int j = std::countr_zero(occ);
            occ &= occ - 1;
            a(*b.index_of(s & ~(Mask{1} << j)), j) += amp;
        }
    }
    return a;
}

// Chooses a channel with probability proportional to gamma |sigma psi|^2 and
// returns the renormalized post-jump state.
Vec do_jump(const ExcitationBasis& b, const Vec& psi, const Mat& lowering, const RVec& rates,
                   const std::vector<int>& active, double u, int& channel)
{
    const int top = top_sector(b, psi);
    if (top == 0 || active.empty()) {
        channel = -1;
        return psi;
    }
    const Mat w = site_lowered(b, psi, top) * lowering;
    RVec p(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) p(j) = rates(active[j]) * w.col(j).squaredNorm();
    const double total = p.sum();
    if (!(total > 0.0)) {
        channel = -1;
        return psi;
    }
    double acc = 0.0;
    std::size_t pick = active.size() - 1;
    for (std::size_t j = 0; j < active.size(); ++j) {
        acc += p(j);
        if (u * total < acc) {
            pick = j;
            break;
        }
    }
    channel = active[pick];
    return w.col(pick) / w.col(pick).norm();
}

} // namespace

TrajectoryRecord McwfEngine::run(const StateVector& psi0, std::uint64_t seed, int index,
                                 const SamplerSet& samplers) const
{
    require_same_basis(*sys_.basis, *psi0.basis, "trajectory");
    require_normalized(psi0, "trajectory");
    return opt_.spectral ? run_spectral(psi0, seed, index, samplers) : run_stepping(psi0, seed, index, samplers);
}

TrajectoryRecord McwfEngine::run_stepping(const StateVector& psi0, std::uint64_t seed, int index,
                                          const SamplerSet& samplers) const
{
    const auto& b = *sys_.basis;
    Rng rng(seed);
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.index = index;

    const long n_steps = std::max(1L, std::lround(opt_.t_end / opt_.dt));
    const long every = opt_.sample_dt > 0.0 ? std::max(1L, std::lround(opt_.sample_dt / opt_.dt)) : 1L;
    std::vector<long> checkpoint_steps;
    for (double c : opt_.checkpoints) checkpoint_steps.push_back(std::lround(c / opt_.dt));
    rec.checkpoint_samples.resize(checkpoint_steps.size());

    Accumulators acc(opt_.t_start, n_steps * opt_.dt, samplers.width());
    Vec psi = psi0.amplitudes;
    int top = top_sector(b, psi);
    Vec f;
    double leak_sum = 0.0;
    long leak_count = 0;
    const int n_max = b.n_max();

    auto sample = [&](long k, bool force_series) {
        const double t = k * opt_.dt;
        const bool on_grid = (k % every == 0) || k == n_steps;
        bool is_checkpoint = false;
        for (std::size_t c = 0; c < checkpoint_steps.size(); ++c)
            if (checkpoint_steps[c] == k) is_checkpoint = true;
        if (!on_grid && !is_checkpoint && !force_series) return;
        samplers.eval(psi, f);
        for (std::size_t c = 0; c < checkpoint_steps.size(); ++c)
            if (checkpoint_steps[c] == k) rec.checkpoint_samples[c] = f;
        if (!on_grid) return;
        acc.point(t, f);
        if (opt_.keep_series) {
            rec.series_times.push_back(t);
            rec.series.push_back(opt_.series_width >= 0 ? Vec(f.head(opt_.series_width)) : f);
        }
        if (driven_ && n_max < b.n_atoms()) {
            const auto off = b.sector_offset(n_max);
            const auto len = b.sector_size(n_max);
            Vec upper = Vec::Zero(psi.size());
            upper.segment(off, len) = psi.segment(off, len);
            const double n2 = upper.squaredNorm();
            const double l2 = n2 > 0.0 ? raise0_.apply(upper).squaredNorm() + (1.0 - 2.0 * n_max / b.n_atoms()) * n2
                                       : 0.0;
            leak_sum += sys_.drive.rabi * sys_.drive.rabi * opt_.dt * opt_.dt * l2;
            ++leak_count;
        }
    };

    sample(0, false);
    Vec phi(psi.size());
    for (long k = 0; k < n_steps; ++k) {
        if (!driven_ && top == 0) {
            // |G> is stationary without drive
            if (rec.t_ground < 0.0) rec.t_ground = k * opt_.dt;
            for (long j = k + 1; j <= n_steps; ++j) sample(j, false);
            break;
        }
        if (driven_) {
            phi.noalias() = full_step_ * psi;
        } else {
            phi.setZero();
            for (int n = 0; n <= top; ++n) {
                const auto off = b.sector_offset(n);
                const auto len = b.sector_size(n);
                phi.segment(off, len).noalias() = block_step_[n] * psi.segment(off, len);
            }
        }
        const double keep = phi.squaredNorm();
        const double dp = 1.0 - keep;
        if (dp > 0.1) {
            throw StepTooLargeError(fmt::format("step norm loss {:.3f} exceeds 0.1 at t = {}", dp, k * opt_.dt));
        }
        if (rng.uniform() < dp) {
            int channel = -1;
            Vec next = do_jump(b, psi, site_lowering_modes_, sys_.jumps.rates, active_, rng.uniform(), channel);
            if (channel >= 0) {
                psi = std::move(next);
                rec.jumps.push_back({(k + 1) * opt_.dt, channel});
            } else {
                psi = phi / std::sqrt(keep);
            }
        } else {
            psi = phi / std::sqrt(keep);
        }
        if (!driven_) top = top_sector(b, psi);
        sample(k + 1, false);
    }
    rec.integral = acc.total;
    rec.first_half = acc.first;
    rec.second_half = acc.second;
    rec.final_sample = f;
    rec.leakage = leak_count ? leak_sum / leak_count : 0.0;
    if (opt_.keep_final_state) rec.final_state = StateVector(sys_.basis, psi, true);
    return rec;
}

TrajectoryRecord McwfEngine::run_spectral(const StateVector& psi0, std::uint64_t seed, int index,
                                          const SamplerSet& samplers) const
{
    const auto& b = *sys_.basis;
    Rng rng(seed);
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.index = index;
    const double t_end = opt_.t_end;
    const double grid_dt = opt_.sample_dt > 0.0 ? opt_.sample_dt : opt_.dt;

    // global evaluation times: uniform grid plus checkpoints
    std::vector<double> grid;
    for (long k = 0;; ++k) {
        const double t = k * grid_dt;
        if (t > t_end + 1e-12) break;
        grid.push_back(std::min(t, t_end));
    }
    if (grid.back() < t_end - 1e-12) grid.push_back(t_end);
    for (double c : opt_.checkpoints) grid.push_back(c);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
               grid.end());

    auto is_checkpoint = [&](double t) -> int {
        for (std::size_t c = 0; c < opt_.checkpoints.size(); ++c)
            if (std::abs(opt_.checkpoints[c] - t) < 1e-12) return int(c);
        return -1;
    };
    rec.checkpoint_samples.resize(opt_.checkpoints.size());

    Accumulators acc(opt_.t_start, t_end, samplers.width());
    Vec f;
    Vec psi = psi0.amplitudes;

    // segment state: coefficients in each sector's eigenbasis
    std::vector<Vec> coeff(b.n_max() + 1);
    cplx g0 = 0.0; // ground amplitude (zero energy)
    auto load = [&](const Vec& v) {
        g0 = v(0);
        for (int n = 1; n <= b.n_max(); ++n)
            coeff[n] = spectra_[n].inverse * v.segment(b.sector_offset(n), b.sector_size(n));
    };
    auto evolve = [&](double tau) {
        Vec out(b.size());
        out(0) = g0;
        for (int n = 1; n <= b.n_max(); ++n) {
            const auto& s = spectra_[n];
            Vec e = (s.values.array() * (-kI * tau)).exp() * coeff[n].array();
            out.segment(b.sector_offset(n), b.sector_size(n)).noalias() = s.vectors * e;
        }
        return out;
    };

    auto record_point = [&](double t, const Vec& normalized, bool restart, bool on_grid) {
        samplers.eval(normalized, f);
        acc.point(t, f, restart);
        if (on_grid) {
            const int c = is_checkpoint(t);
            if (c >= 0) rec.checkpoint_samples[c] = f;
            if (opt_.keep_series) {
                rec.series_times.push_back(t);
                rec.series.push_back(opt_.series_width >= 0 ? Vec(f.head(opt_.series_width)) : f);
            }
        }
    };

    double t0 = 0.0;
    load(psi);
    double r = rng.uniform();
    std::size_t next_grid = 0;
    record_point(0.0, psi, false, true);
    while (next_grid < grid.size() && grid[next_grid] <= 1e-12) ++next_grid;
    double local = opt_.dt;
    double t_cur = 0.0;
    double ln_cur = 0.0; // ln |psi~(t_cur)|^2 in the current segment

    while (next_grid < grid.size()) {
        if (top_sector(b, psi) == 0) {
            if (rec.t_ground < 0.0) rec.t_ground = t_cur;
            for (; next_grid < grid.size(); ++next_grid) record_point(grid[next_grid], psi, false, true);
            break;
        }
        const double t_local = t0 + local;
        const bool grid_point = grid[next_grid] <= t_local + 1e-12;
        const double t_next = grid_point ? grid[next_grid] : t_local;
        Vec v = evolve(t_next - t0);
        const double n2 = v.squaredNorm();
        if (n2 > r) {
            psi = v / std::sqrt(n2);
            record_point(t_next, psi, false, grid_point);
            t_cur = t_next;
            ln_cur = std::log(n2);
            if (grid_point) ++next_grid;
            else local *= opt_.spectral_growth;
            continue;
        }
        // jump inside (t_cur, t_next]: Illinois iteration on ln |psi~|^2 - ln r
        const double ln_r = std::log(r);
        double a = t_cur, fa = ln_cur - ln_r;
        double c = t_next, fc = std::log(std::max(n2, 1e-300)) - ln_r;
        int side = 0;
        double t_star = c;
        for (int it = 0; it < 100; ++it) {
            t_star = (a * fc - c * fa) / (fc - fa);
            if (!(t_star > a && t_star < c)) t_star = 0.5 * (a + c);
            const double fs = std::log(std::max(evolve(t_star - t0).squaredNorm(), 1e-300)) - ln_r;
            if (std::abs(fs) < 1e-12 || (c - a) < 1e-12) break;
            if ((fs > 0) == (fa > 0)) {
                a = t_star;
                fa = fs;
                if (side == 1) fc *= 0.5;
                side = 1;
            } else {
                c = t_star;
                fc = fs;
                if (side == -1) fa *= 0.5;
                side = -1;
            }
        }
        Vec pre = evolve(t_star - t0);
        pre /= pre.norm();
        record_point(t_star, pre, false, false);
        int channel = -1;
        Vec post = do_jump(b, pre, site_lowering_modes_, sys_.jumps.rates, active_, rng.uniform(), channel);
        if (channel < 0) {
            throw NumericalInconsistencyError("norm decayed without an available jump channel");
        }
        rec.jumps.push_back({t_star, channel});
        psi = std::move(post);
        record_point(t_star, psi, true, false);
        t0 = t_star;
        t_cur = t_star;
        ln_cur = 0.0;
        load(psi);
        r = rng.uniform();
        local = opt_.dt;
    }
    rec.integral = acc.total;
    rec.first_half = acc.first;
    rec.second_half = acc.second;
    rec.final_sample = f;
    if (opt_.keep_final_state) rec.final_state = StateVector(sys_.basis, psi, true);
    return rec;
}

TrajectoryRecord mcwf_run(const OpenSystem& system, const StateVector& psi0, const McwfOptions& options,
                          std::uint64_t seed, const SamplerSet& samplers)
{
    McwfEngine engine(system, options);
    return engine.run(psi0, seed, 0, samplers);
}

// --------------------------------------------------------------------------

namespace {

Vec mean_of(const std::vector<TrajectoryRecord>& recs, int width, const std::function<const Vec&(const TrajectoryRecord&)>& get)
{
    Vec m = Vec::Zero(width);
    for (const auto& r : recs) m += get(r);
    return recs.empty() ? m : Vec(m / double(recs.size()));
}

} // namespace

Vec Ensemble::mean_integral() const
{
    return mean_of(records, width, [](const TrajectoryRecord& r) -> const Vec& { return r.integral; });
}

Vec Ensemble::mean_first_half() const
{
    return mean_of(records, width, [](const TrajectoryRecord& r) -> const Vec& { return r.first_half; });
}

Vec Ensemble::mean_second_half() const
{
    return mean_of(records, width, [](const TrajectoryRecord& r) -> const Vec& { return r.second_half; });
}

Vec Ensemble::mean_checkpoint(std::size_t i) const
{
    return mean_of(records, width, [i](const TrajectoryRecord& r) -> const Vec& { return r.checkpoint_samples.at(i); });
}

Ensemble run_ensemble(const McwfEngine& engine, const StateVector& psi0, int n_traj, std::uint64_t master_seed,
                      const SamplerSet& samplers, bool progress)
{
    if (n_traj < 1) throw std::invalid_argument("trajectory count must be positive");
    Ensemble ens;
    ens.master_seed = master_seed;
    ens.width = samplers.width();
    ens.records.resize(n_traj);
    std::exception_ptr error;
    int done = 0;
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n_traj; ++i) {
        if (error) continue;
        try {
            ens.records[i] = engine.run(psi0, trajectory_seed(master_seed, i), i, samplers);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
        if (progress) {
#pragma omp critical
            {
                ++done;
                if (done % std::max(1, n_traj / 10) == 0) fmt::print(stderr, "  {}/{} trajectories\n", done, n_traj);
            }
        }
    }
    if (error) std::rethrow_exception(error);
    return ens;
}

std::vector<Vec> bootstrap_means(const std::vector<Vec>& per_traj, int n_boot, std::uint64_t seed)
{
    if (per_traj.empty()) throw std::invalid_argument("bootstrap needs samples");
    const std::size_t n = per_traj.size();
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<Vec> out(n_boot);
    for (int k = 0; k < n_boot; ++k) {
        Vec m = Vec::Zero(per_traj[0].size());
        for (std::size_t i = 0; i < n; ++i) m += per_traj[pick(gen)];
        out[k] = m / double(n);
    }
    return out;
}

double bootstrap_se(const std::vector<Vec>& per_traj, const std::function<double(const Vec&)>& f, int n_boot,
                    std::uint64_t seed)
{
    std::vector<double> vals;
    for (const auto& m : bootstrap_means(per_traj, n_boot, seed)) vals.push_back(f(m));
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n_boot;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    return std::sqrt(var / std::max(1, n_boot - 1));
}

SteadyState steady_state_ensemble(const OpenSystem& system, const McwfOptions& options,
                                  const SteadyStateOptions& ss, const StateVector& psi0, int n_traj,
                                  std::uint64_t master_seed, const SamplerSet& samplers)
{
    if (!(ss.t_settle >= 0.0) || !(ss.t_settle < options.t_end)) {
        throw std::invalid_argument("settle time must lie inside [0, t_end)");
    }
    McwfOptions opt = options;
    opt.t_start = ss.t_settle;
    McwfEngine engine(system, opt);
    SteadyState out;
    out.ensemble = run_ensemble(engine, psi0, n_traj, master_seed, samplers);
    const double window = opt.t_end - ss.t_settle;
    out.window_mean = out.ensemble.mean_integral() / window;

    std::string diagnostics;
    for (const auto& name : ss.stationary_channels) {
        const int k = samplers.offset(name);
        const int n = n_traj;
        double m1 = 0, m2 = 0, s1 = 0, s2 = 0;
        for (const auto& r : out.ensemble.records) {
            m1 += r.first_half(k).real();
            m2 += r.second_half(k).real();
        }
        m1 /= n;
        m2 /= n;
        for (const auto& r : out.ensemble.records) {
            s1 += std::pow(r.first_half(k).real() - m1, 2);
            s2 += std::pow(r.second_half(k).real() - m2, 2);
        }
        const double se = std::sqrt((s1 + s2) / std::max(1, n - 1) / n);
        const double diff = std::abs(m1 - m2);
        const double z = se > 0.0 ? diff / se : (diff <= 1e-12 * std::max(std::abs(m1), 1e-300) ? 0.0 : 1e300);
        out.z_scores.push_back(z);
        if (z > ss.z_threshold) {
            out.stationary = false;
            diagnostics += fmt::format(" {}: first half {:.4e}, second half {:.4e}, z = {:.2f};", name,
                                       m1 / (0.5 * window), m2 / (0.5 * window), z);
        }
    }
    if (!out.stationary && ss.require_stationary) {
        throw NotConvergedError("observables not stationary after settle time:" + diagnostics);
    }
    return out;
}

} // namespace atomarray
