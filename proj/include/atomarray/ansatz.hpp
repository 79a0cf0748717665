// ansatz.hpp — Sine modes, free-fermion and free-boson states, U_pi, toy Hamiltonians

#pragma once

#include <vector>

#include "atomarray/hilbert.hpp"
#include "atomarray/jump_set.hpp"
#include "atomarray/lightfield.hpp"

namespace atomarray {

/// q_xi = xi * pi / (d (N+1)), xi = 1..N.
std::vector<double> q_grid(int N, double d = 1.0);

/// Site amplitudes (index m-1) of mode xi at band edge `tag`:
/// sqrt(2/(N+1)) e^{i k_ex m} sin(xi pi m/(N+1)). xi = 0 gives the plane wave e^{i k_ex m}/sqrt(N).
Vec mode_amplitudes(int N, int xi, EdgeTag tag);

struct ModeVector {
    StateVector state;
    int xi = 1;
    double q = 0.0;
};

ModeVector mode(const BasisPtr& basis, int xi, EdgeTag tag);

struct FermionString {
    std::vector<int> indices;
    EdgeTag tag = EdgeTag::zero;

    void validate(int N) const;
    int size() const { return static_cast<int>(indices.size()); }
};

/// Determinant of [phi_j(x_l)] on every configuration of the sector matching
/// the number of columns; no strictness check on the column set.
Vec slater_amplitudes(const ExcitationBasis& basis, const Mat& site_modes);
/// Permanent counterpart of slater_amplitudes (unnormalized).
Vec permanent_amplitudes(const ExcitationBasis& basis, const Mat& site_modes);

/// Columns are mode_amplitudes for each index.
Mat mode_matrix(int N, const std::vector<int>& indices, EdgeTag tag);

StateVector fermion_state(const BasisPtr& basis, const FermionString& s);
StateVector boson_state(const BasisPtr& basis, const std::vector<int>& indices, EdgeTag tag);

/// Diagonal phase prod_{m not in S} (-1)^m on the basis state with excited set S.
OperatorMatrix u_pi(const BasisPtr& basis);
/// Same phases as a vector, for elementwise application.
Vec u_pi_phases(const ExcitationBasis& basis);

/// H_1 = c_1 N_e - a_2 sum_j (e^{-i k_ex} sigma_j^dag sigma_{j+1} + h.c.), c_1 = omega_ex + 2 a_2.
OperatorMatrix toy_h1(const BasisPtr& basis, const BandEdge& edge);
/// sum_xi omega_1(k_ex + q_xi) for the string.
cplx toy_h1_energy(const BandEdge& edge, int N, const std::vector<int>& indices);

struct DissipativeToyModel {
    OperatorMatrix h;
    JumpSet jumps;
};

/// H_1 minimal model: -i (beta gamma_ex / 2) N_e - Re a_2 sum_j (sigma_j sigma_{j+1}^dag + h.c.),
/// with jump operators sigma_{psi_xi} at rate beta gamma_ex.
DissipativeToyModel toy_h1_dissipative(const BasisPtr& basis, const BandEdge& edge, double beta);

/// All strictly increasing strings of length n_e with entries in 1..xi_max.
std::vector<FermionString> enumerate_strings(int n_e, int xi_max, EdgeTag tag);

} // namespace atomarray
