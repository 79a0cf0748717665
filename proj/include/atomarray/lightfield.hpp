// lightfield.hpp — Free-space Green's tensor, dispersion relation and H_eff assembly
//
// Units: gamma_0 = 1 for energies and rates, d = 1 for lengths, so k0 = kd.

#pragma once

#include <Eigen/Dense>

#include "atomarray/hilbert.hpp"

namespace atomarray {

using GreensTensor = Eigen::Matrix3cd;

/// G(r, omega_0) in free space. Throws SingularInputError at r = 0.
GreensTensor greens_free_space(const Eigen::Vector3d& r, double k0);

/// Atomic coupling matrix J_mn (0-based), J_mm = -i/2.
/// H_eff = sum_mn J_mn sigma_m^dag sigma_n before beta scaling.
Mat coupling_matrix(const ArrayGeometry& geometry);

/// Infinite-array omega_eff(k) for dipoles parallel to the array, including the
/// single-atom -i/2 self term.
cplx dispersion(double kd, double k);
/// d^2 omega_eff / dk^2 from the closed Li_0 / Li_1 form.
cplx dispersion_second_derivative(double kd, double k);

inline double decay_rate(cplx omega) { return -2.0 * omega.imag(); }

enum class EdgeTag { zero, pi };

const char* to_string(EdgeTag tag);
EdgeTag parse_edge_tag(const std::string& s);
inline double edge_momentum(EdgeTag tag) { return tag == EdgeTag::zero ? 0.0 : kPi; }

struct BandEdge {
    EdgeTag tag = EdgeTag::zero;
    double kd = kPi / 2.0;
    double k_ex = 0.0;
    cplx omega_ex;
    cplx a2;
    double gamma_ex() const { return decay_rate(omega_ex); }
};

/// Throws NumericalInconsistencyError when the analytic curvature and a
/// five-point finite difference of `dispersion` differ by more than 1e-6 relative.
BandEdge band_edge(double kd, EdgeTag which);

/// H_eff = H_re - i beta H_im. Both parts are Hermitian (real symmetric in the
/// site basis) and stored as one dense block per excitation sector.
struct EffectiveHamiltonian {
    BasisPtr basis;
    BlockOperator h_re;
    BlockOperator h_im;
    double beta = 1.0;
    Mat coupling; ///< J_mn, unscaled

    Mat sector(int n) const;
    Vec apply(const Vec& v) const;
    OperatorMatrix to_operator() const;
};

EffectiveHamiltonian build_h_eff(const BasisPtr& basis, double beta = 1.0);

/// sum_{mn} c_mn sigma_m^dag sigma_n restricted to sector n of `basis`.
RMat assemble_sector(const ExcitationBasis& basis, int n, const RMat& c);
Mat assemble_sector(const ExcitationBasis& basis, int n, const Mat& c);

/// H_eff restricted to sector n without building the other sectors.
Mat sector_h_eff(const ExcitationBasis& basis, int n, double beta = 1.0);

} // namespace atomarray
