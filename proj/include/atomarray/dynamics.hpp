// dynamics.hpp — No-jump evolution and Monte Carlo wave-function trajectories
//
// All dynamics run in the frame rotating at the drive frequency: every
// excitation is shifted by -detuning and the coherent drive is time independent.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atomarray/ansatz.hpp"
#include "atomarray/hilbert.hpp"
#include "atomarray/jump_set.hpp"
#include "atomarray/lightfield.hpp"

namespace atomarray {

/// Jump channels from the single-excitation block of 2 beta H_im.
/// Throws ModelInconsistencyError for a rate below -1e-6.
JumpSet derive_jumps(const EffectiveHamiltonian& h);

struct DriveSpec {
    double rabi = 0.0;      ///< Omega
    double detuning = 0.0;  ///< rotating-frame shift per excitation
    void validate() const;
};

/// Detuning that puts Re omega_eff(k_ex) at zero energy.
DriveSpec drive_full_model(const BandEdge& edge, double rabi);
/// Detuning that puts the lower edge -2 Re a2 of the minimal chain at zero energy.
DriveSpec drive_minimal_model(const BandEdge& edge, double rabi);

/// sigma_{k=0}^dag + sigma_{k=0} on the working basis (truncated).
OperatorMatrix drive_operator(const BasisPtr& basis);

/// Coherent part + jump channels + drive, ready for propagation.
struct OpenSystem {
    BasisPtr basis;
    BlockOperator coherent;  ///< Hermitian, excitation conserving, lab-frame energies
    JumpSet jumps;
    DriveSpec drive;

    /// H_nh = coherent - detuning N_e - (i/2) sum gamma sigma^dag sigma, per sector.
    BlockOperator nonhermitian_blocks() const;
    /// Full H_nh including the drive, dense.
    Mat nonhermitian_dense() const;
    double max_rate() const;
};

/// Jump channels below `drop_below` are removed from both sampling and H_nh.
OpenSystem full_model(const EffectiveHamiltonian& h, const DriveSpec& drive, double drop_below = 1e-12);
OpenSystem minimal_model(const BasisPtr& basis, const BandEdge& edge, double beta, const DriveSpec& drive);

// --------------------------------------------------------------------------
// No-jump evolution

struct NoJumpResult {
    std::vector<double> times;
    std::vector<StateVector> states;  ///< renormalized
    std::vector<double> log_norm2;    ///< ln of the unnormalized |psi(t)|^2
};

/// e^{-i H t} psi0 renormalized at each grid time. Step exponentials are cached
/// by step length and reapplied; H is taken block by block.
NoJumpResult no_jump_evolve(const BlockOperator& h_nh, const StateVector& psi0, const std::vector<double>& t_grid);
NoJumpResult no_jump_evolve(const EffectiveHamiltonian& h, const StateVector& psi0, const std::vector<double>& t_grid);

// --------------------------------------------------------------------------
// Observables sampled along trajectories

struct Observable {
    std::string name;
    int width = 1;
    std::function<void(const Vec& psi, cplx* out)> eval;
};

class SamplerSet {
public:
    void add(Observable o);
    int width() const { return width_; }
    const std::vector<Observable>& observables() const { return obs_; }
    /// Offset of the named observable in the flat channel vector.
    int offset(const std::string& name) const;
    void eval(const Vec& psi, Vec& out) const;

private:
    std::vector<Observable> obs_;
    std::vector<int> offsets_;
    int width_ = 0;
};

struct JumpEvent {
    double t;
    int channel;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    int index = 0;
    std::vector<JumpEvent> jumps;
    Vec integral;        ///< trapezoid of the samples over [t_start, t_end]
    Vec first_half;      ///< ... over [t_start, t_mid]
    Vec second_half;     ///< ... over [t_mid, t_end]
    std::vector<Vec> checkpoint_samples;
    std::vector<double> series_times;
    std::vector<Vec> series;
    Vec final_sample;
    std::optional<StateVector> final_state;
    double leakage = 0.0;   ///< time-averaged norm projected out per step by the drive
    double t_ground = -1.0; ///< time the trajectory reached |G>, or -1
};

struct McwfOptions {
    double dt = 0.01;
    double t_end = 1.0;
    double t_start = 0.0;           ///< integrals start here
    double sample_dt = 0.0;         ///< 0: every step
    std::vector<double> checkpoints;
    bool keep_series = false;
    int series_width = -1;          ///< leading channels kept in the series, -1 for all
    bool keep_final_state = false;
    /// Undriven runs: diagonalize each sector once and sample jump times from
    /// the decaying norm instead of stepping.
    bool spectral = false;
    /// Spectral path: local sample spacing after each jump grows by this ratio.
    double spectral_growth = 1.25;
};

/// Deterministic 64-bit seed of trajectory `index` under `master`.
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

class McwfEngine {
public:
    McwfEngine(OpenSystem system, McwfOptions options);

    TrajectoryRecord run(const StateVector& psi0, std::uint64_t seed, int index,
                         const SamplerSet& samplers) const;

    const OpenSystem& system() const { return sys_; }
    const McwfOptions& options() const { return opt_; }

private:
    TrajectoryRecord run_stepping(const StateVector& psi0, std::uint64_t seed, int index,
                                  const SamplerSet& samplers) const;
    TrajectoryRecord run_spectral(const StateVector& psi0, std::uint64_t seed, int index,
                                  const SamplerSet& samplers) const;

    OpenSystem sys_;
    McwfOptions opt_;
    std::vector<int> active_;   ///< channel indices kept for sampling
    Mat full_step_;             ///< dense step propagator when driven
    std::vector<Mat> block_step_;
    bool driven_ = false;
    OperatorMatrix raise0_;     ///< for leakage bookkeeping
    struct SectorSpectrum {
        Vec values;
        Mat vectors;
        Mat inverse;
    };
    std::vector<SectorSpectrum> spectra_;
    Mat site_lowering_modes_;   ///< conj(phi) columns of the active channels
};

/// Single trajectory convenience wrapper.
TrajectoryRecord mcwf_run(const OpenSystem& system, const StateVector& psi0, const McwfOptions& options,
                          std::uint64_t seed, const SamplerSet& samplers = {});

struct Ensemble {
    std::vector<TrajectoryRecord> records;
    std::uint64_t master_seed = 0;
    int width = 0;

    Vec mean_integral() const;
    Vec mean_first_half() const;
    Vec mean_second_half() const;
    Vec mean_checkpoint(std::size_t i) const;
};

/// Runs n_traj trajectories in parallel; records stay ordered by index.
Ensemble run_ensemble(const McwfEngine& engine, const StateVector& psi0, int n_traj, std::uint64_t master_seed,
                      const SamplerSet& samplers, bool progress = false);

/// Means of n_boot resamples (with replacement) of the per-trajectory vectors.
std::vector<Vec> bootstrap_means(const std::vector<Vec>& per_traj, int n_boot, std::uint64_t seed);

/// Bootstrap standard error of f(resampled mean of per-trajectory vectors).
double bootstrap_se(const std::vector<Vec>& per_traj, const std::function<double(const Vec&)>& f, int n_boot,
                    std::uint64_t seed);

struct SteadyStateOptions {
    double t_settle = 100.0;
    /// Channel names checked for stationarity (first vs second half of the window).
    std::vector<std::string> stationary_channels;
    double z_threshold = 4.0;
    bool require_stationary = true;
};

struct SteadyState {
    Ensemble ensemble;
    Vec window_mean;        ///< per-channel time average after t_settle
    std::vector<double> z_scores;  ///< one per checked channel
    bool stationary = true;
};

/// Time-averaged observables over [t_settle, t_end]. Throws NotConvergedError
/// when a checked channel differs between window halves beyond z_threshold.
SteadyState steady_state_ensemble(const OpenSystem& system, const McwfOptions& options,
                                  const SteadyStateOptions& ss, const StateVector& psi0, int n_traj,
                                  std::uint64_t master_seed, const SamplerSet& samplers);

} // namespace atomarray
