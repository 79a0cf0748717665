// observables.hpp — Emission spectra, photon correlations, fidelities and scaling diagnostics

#pragma once

#include <string>
#include <vector>

#include "atomarray/ansatz.hpp"
#include "atomarray/dynamics.hpp"
#include "atomarray/lightfield.hpp"

namespace atomarray {

struct MomentumGrid {
    std::vector<double> k;
    std::vector<bool> light_cone;  ///< |k| <= k0

    std::size_t size() const { return k.size(); }
    /// Uniform spacing (0 for a single point).
    double spacing() const;
    void validate() const;
};

/// n points uniformly covering [lo, hi] (both ends included).
MomentumGrid make_grid(int n, double lo, double hi, double kd);
/// 201 points over [-pi, pi].
MomentumGrid default_pk_grid(double kd);
/// 41 points over [0, 0.2 pi].
MomentumGrid default_g2_grid(double kd);

/// <sigma_k^dag sigma_k> = (1/N) sum_mn e^{ik(m-n)} rho(m, n) on each grid point.
RVec pk_from_density(const Mat& rho1, const MomentumGrid& grid);

/// "rho1" (N*N entries, column major) and "n_exc" samplers.
Observable density_observable(const BasisPtr& basis);
Observable excitation_observable(const BasisPtr& basis);

struct PkResult {
    MomentumGrid grid;
    RVec pk;              ///< scaled so sum pk * dk over the light cone = emitted fraction
    RVec se;              ///< bootstrap standard error per point
    double emitted_fraction = 0.0;
    double residual_excitation = 0.0;  ///< ensemble <N_e> at t_end
    bool tail_converged = true;        ///< residual below 1e-4
};

/// Time-integrated emission distribution from an ensemble sampled with the
/// "rho1" and "n_exc" observables. `n_initial` is <N_e> of the initial state.
PkResult pk_distribution(const Ensemble& ens, const SamplerSet& samplers, const MomentumGrid& grid,
                         int n_atoms, double n_initial, int n_boot = 200, std::uint64_t seed = 7);

struct CorrelationMap {
    MomentumGrid k1, k2;
    RMat values;  ///< G(k1, k2) = N^2 <sigma_k1^dag sigma_k2^dag sigma_k2 sigma_k1>

    RMat log10() const;
    double max() const { return values.maxCoeff(); }
};

/// G(k1, k2) of a pure state (flattened column-major over (k1, k2) into `out`).
void g2_values(const ExcitationBasis& basis, const Vec& psi, const MomentumGrid& k1, const MomentumGrid& k2,
               double* out);
CorrelationMap g2_map(const StateVector& psi, const MomentumGrid& k1, const MomentumGrid& k2);
/// Ensemble map from the time-averaged "g2" sampler channel.
CorrelationMap g2_map(const Vec& mean_channels, int offset, const MomentumGrid& k1, const MomentumGrid& k2);
Observable g2_observable(const BasisPtr& basis, const MomentumGrid& k1, const MomentumGrid& k2);

/// |<a|b>|^2 / (|a|^2 |b|^2). Throws UndefinedFidelityError on a zero vector.
double fidelity(const StateVector& a, const StateVector& b);
/// Fidelity of the renormalized sector-n components.
double sector_fidelity(const StateVector& a, const StateVector& b, int n);

struct ScanEntry {
    int rank = 0;               ///< position in the decay-rate ordering
    cplx eigenvalue;
    double decay = 0.0;         ///< -2 Im eigenvalue
    FermionString best;
    double fidelity = 0.0;
};

struct FidelityScan {
    int n_e = 0;
    Vec eigenvalues;                ///< sorted by decay, ties by Re ascending
    std::vector<ScanEntry> entries; ///< scanned states, in the same order
};

/// Eigenstates of H_eff in sector n_e with their best free-fermion match over
/// strings with entries up to xi_max at both band edges. top_m > 0 restricts
/// to the top_m most subradiant and top_m most superradiant states.
FidelityScan fidelity_scan(const BasisPtr& basis, int n_e, double beta, int top_m, int xi_max = 12);

struct BoundSample {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// |sigma_k F| from the constructed state against the cotangent bound.
/// Throws SingularInputError within 1e-8 of a pole k = +-q.
BoundSample sigma_k_norm_bound(const FermionString& s, double k, int N, double kd = kPi / 2.0);

/// <F_i|(H_eff - H_1)|F_j> by dense application.
Mat delta_h_elements(const EffectiveHamiltonian& h, const BandEdge& edge, const std::vector<FermionString>& strings);

/// <F|sigma_k^dag sigma_k|F> over the grid.
RVec occupation_spectrum(const FermionString& s, int N, const MomentumGrid& grid);

struct SpinSpectrum {
    RVec analytic;   ///< (4/N) x (N - 2 n_e + x + 1), x = 0..n_e
    RVec numeric;    ///< distinct eigenvalues of S^dag S in the sector, ascending
    double prefactor = 1.0;  ///< least-squares factor numeric / analytic
    double residual = 0.0;   ///< relative residual of the fit
};

SpinSpectrum collective_spin_spectrum(int N, int n_e);

/// Re a2 / N^2 / (beta gamma_ex).
double rbeta(const BandEdge& edge, int N, double beta);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace atomarray
