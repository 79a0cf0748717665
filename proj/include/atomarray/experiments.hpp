// experiments.hpp — Configuration and drivers for the batch experiments
//
// Each driver returns its data as a struct; write_* functions emit the CSV
// and JSONL artifacts. Zero-valued numeric controls mean "pick the default
// for this experiment".

#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "atomarray/dynamics.hpp"
#include "atomarray/observables.hpp"

namespace atomarray {

const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
    std::string experiment = "dispersion";
    int n_atoms = 20;
    double kd = kPi / 2.0;
    std::string dipole = "parallel";  ///< parallel | perpendicular
    int n_max = 0;
    int n_e = 0;
    double beta = 1.0 / 25.0;
    double omega = 0.01;
    std::string model = "full";       ///< full | minimal
    int traj = 1000;
    double dt = 0.0;
    double t_end = 0.0;
    double settle = 0.0;
    double arrest = 0.0;              ///< scheme1: 0 = detect F_b = F_f
    std::uint64_t seed = 20220917;
    int grid = 0;
    int top_m = 100;
    int samples = 200;                ///< bounds: random (string, k) draws
    bool richardson = false;
    std::string out = "out";

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    /// Deterministic key = value listing, used for the config hash.
    std::string canonical() const;
    ArrayGeometry geometry() const;
};

struct ExperimentOutput {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    std::map<std::string, double> summary;
};

/// Runs the configured experiment and writes its artifacts under cfg.out.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// --------------------------------------------------------------------------

struct DispersionTable {
    std::vector<double> k;
    std::vector<cplx> omega;        ///< nan at the light-cone singularities
    std::vector<bool> light_cone;
    std::vector<std::string> warnings;
    BandEdge zero_edge, pi_edge;
};

DispersionTable dispersion_table(double kd, int n_points);

struct Scheme1Result {
    std::vector<double> times;
    std::vector<double> f_b, f_f;
    int crossings = 0;
    double arrest_time = 0.0;
    PkResult pk_boson, pk_inter, pk_fermion;
    Ensemble ens_boson, ens_inter, ens_fermion;
    SamplerSet samplers;
    std::vector<std::string> warnings;
};

Scheme1Result scheme1(const ExperimentConfig& cfg, std::ostream& log);

struct ProfileFeatures {
    double peak = 0.0;
    double fwhm = 0.0;                 ///< width of the central lobe at half maximum
    std::vector<double> minima;        ///< |k| of local minima inside the light cone, ascending
};

ProfileFeatures profile_features(const PkResult& pk);

struct Scheme2Result {
    double fid_fermion = 0.0, fid_boson = 0.0;
    double se_fermion = 0.0, se_boson = 0.0;
    double two_excitation = 0.0;       ///< window mean of the n_e = 2 weight
    double dt = 0.0;
    std::vector<double> trace_t, trace_fermion, trace_boson;
    CorrelationMap g2;
    SteadyState steady;
    SamplerSet samplers;
    double leakage = 0.0;
    double richardson_delta_f = 0.0, richardson_delta_b = 0.0;  ///< halved-dt minus base
    std::vector<std::string> warnings;
};

Scheme2Result scheme2(const ExperimentConfig& cfg, std::ostream& log);

struct ScalingResult {
    std::vector<double> n_atoms;
    std::vector<double> diag, offdiag, occupation, spacing, on_edge;
    double slope_diag = 0.0, slope_offdiag = 0.0, slope_occupation = 0.0, slope_spacing = 0.0;
};

ScalingResult scaling_laws(const std::vector<int>& n_values, double kd);

struct BoundsResult {
    std::vector<FermionString> strings;
    std::vector<double> k, lhs, rhs;
    int violations = 0;
};

/// Random strings (n_e <= 3, entries <= N/4) and momenta outside the pole neighborhoods.
BoundsResult bound_samples(int N, int n_samples, std::uint64_t seed, double kd);

struct ValidationReport {
    std::size_t basis_size = 0;
    double memory_mb = 0.0;
    double dt_bound = 0.0;
    double rbeta = 0.0;
    std::vector<std::string> lines;
    std::vector<std::string> warnings;
};

ValidationReport validate_config(const ExperimentConfig& cfg);

/// Largest of {1, 2, 5} x 10^k not above x.
double round_down_125(double x);

} // namespace atomarray
