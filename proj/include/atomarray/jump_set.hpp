// jump_set.hpp — Decay channels sigma_phi = sum_j phi_j^* sigma_j with their rates

#pragma once

#include <vector>

#include "atomarray/hilbert.hpp"

namespace atomarray {

struct JumpSet {
    RVec rates;  ///< gamma_xi >= 0
    Mat modes;   ///< N x M, column xi holds the site amplitudes of phi_xi

    int size() const { return static_cast<int>(rates.size()); }
    /// Orthonormal columns, matching dimensions, non-negative rates.
    void validate(double tol = 1e-10) const;
    /// Lowering operator of channel xi on `basis`.
    OperatorMatrix op(const BasisPtr& basis, int xi) const;
    /// sum_xi gamma_xi sigma_xi^dag sigma_xi restricted to single-excitation amplitudes (N x N).
    Mat rate_matrix() const;
};

} // namespace atomarray
