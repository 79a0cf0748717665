// ansatz.cpp — Slater determinants, permanents, U_pi and the toy chain Hamiltonians

#include "atomarray/ansatz.hpp"

#include <cmath>

#include <fmt/format.h>

namespace atomarray {

std::vector<double> q_grid(int N, double d)
{
    if (N < 1) throw std::invalid_argument("q_grid needs N >= 1");
    std::vector<double> q(N);
    for (int xi = 1; xi <= N; ++xi) q[xi - 1] = xi * kPi / (d * (N + 1));
    return q;
}

Vec mode_amplitudes(int N, int xi, EdgeTag tag)
{
    if (xi < 0 || xi > N) throw std::invalid_argument(fmt::format("mode index {} outside 0..{}", xi, N));
    Vec a(N);
    for (int m = 1; m <= N; ++m) {
        const cplx phase = tag == EdgeTag::zero ? cplx(1.0) : cplx(m % 2 ? -1.0 : 1.0);
        if (xi == 0) {
            a(m - 1) = phase / std::sqrt(double(N));
        } else {
            a(m - 1) = phase * std::sqrt(2.0 / (N + 1)) * std::sin(xi * kPi * m / (N + 1));
        }
    }
    return a;
}

ModeVector mode(const BasisPtr& basis, int xi, EdgeTag tag)
{
    const int N = basis->n_atoms();
    if (xi < 1 || xi > N) throw std::invalid_argument(fmt::format("mode index {} outside 1..{}", xi, N));
    if (basis->n_max() < 1) throw std::invalid_argument("basis has no single-excitation sector");
    Vec amp = Vec::Zero(basis->size());
    amp.segment(basis->sector_offset(1), N) = mode_amplitudes(N, xi, tag);
    return {StateVector(basis, std::move(amp), true), xi, q_grid(N)[xi - 1]};
}

void FermionString::validate(int N) const
{
    if (indices.empty()) throw std::invalid_argument("fermion string must be non-empty");
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 1 || indices[i] > N) {
            throw std::invalid_argument(fmt::format("string index {} outside 1..{}", indices[i], N));
        }
        if (i > 0 && indices[i] <= indices[i - 1]) {
            throw std::invalid_argument("fermion string must be strictly increasing");
        }
    }
}

Mat mode_matrix(int N, const std::vector<int>& indices, EdgeTag tag)
{
    Mat m(N, indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) m.col(j) = mode_amplitudes(N, indices[j], tag);
    return m;
}

namespace {

cplx small_det(const Mat& m)
{
    switch (m.rows()) {
    case 0: return 1.0;
    case 1: return m(0, 0);
    case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3: return Eigen::Matrix3cd(m).determinant();
    case 4: return Eigen::Matrix4cd(m).determinant();
    default: return m.partialPivLu().determinant();
    }
}

// Ryser's formula
cplx permanent(const Mat& m)
{
    const int n = static_cast<int>(m.rows());
    if (n == 0) return 1.0;
    cplx total = 0.0;
    for (unsigned subset = 1; subset < (1u << n); ++subset) {
        cplx prod = 1.0;
        for (int i = 0; i < n; ++i) {
            cplx row = 0.0;
            for (int j = 0; j < n; ++j)
                if (subset & (1u << j)) row += m(i, j);
            prod *= row;
        }
        total += (std::popcount(subset) % 2 ? -1.0 : 1.0) * prod;
    }
    return (n % 2 ? -1.0 : 1.0) * total;
}

template <class F>
Vec sector_amplitudes(const ExcitationBasis& basis, const Mat& site_modes, F&& f)
{
    const int n = static_cast<int>(site_modes.cols());
    if (site_modes.rows() != basis.n_atoms()) throw std::invalid_argument("mode rows must equal N");
    if (n > basis.n_max()) {
        throw std::invalid_argument(fmt::format("{} excitations exceed basis truncation {}", n, basis.n_max()));
    }
    Vec amp = Vec::Zero(basis.size());
    const auto off = basis.sector_offset(n);
    const auto len = basis.sector_size(n);
    Mat sub(n, n);
    for (std::size_t i = 0; i < len; ++i) {
        Mask occ = basis.state(off + i);
        int l = 0;
        while (occ) {
            sub.row(l++) = site_modes.row(std::countr_zero(occ));
            occ &= occ - 1;
        }
        amp(off + i) = f(sub);
    }
    return amp;
}

} // namespace

Vec slater_amplitudes(const ExcitationBasis& basis, const Mat& site_modes)
{
    return sector_amplitudes(basis, site_modes, small_det);
}

Vec permanent_amplitudes(const ExcitationBasis& basis, const Mat& site_modes)
{
    return sector_amplitudes(basis, site_modes, permanent);
}

StateVector fermion_state(const BasisPtr& basis, const FermionString& s)
{
    s.validate(basis->n_atoms());
    if (s.size() > basis->n_max()) {
        throw std::invalid_argument(fmt::format("string length {} exceeds n_max {}", s.size(), basis->n_max()));
    }
    Vec amp = slater_amplitudes(*basis, mode_matrix(basis->n_atoms(), s.indices, s.tag));
    const double norm = amp.norm();
    if (std::abs(norm - 1.0) > 1e-10) {
        throw NumericalInconsistencyError(fmt::format("Slater state norm {} differs from 1", norm));
    }
    return {basis, std::move(amp), true};
}

StateVector boson_state(const BasisPtr& basis, const std::vector<int>& indices, EdgeTag tag)
{
    if (indices.empty()) throw std::invalid_argument("boson index list must be non-empty");
    const int N = basis->n_atoms();
    if (static_cast<int>(indices.size()) > basis->n_max()) {
        throw std::invalid_argument("boson state length exceeds n_max");
    }
    for (int xi : indices)
        if (xi < 0 || xi > N) throw std::invalid_argument(fmt::format("mode index {} outside 0..{}", xi, N));
    Vec amp = permanent_amplitudes(*basis, mode_matrix(N, indices, tag));
    StateVector v(basis, std::move(amp), false);
    if (!(v.norm() > 1e-14)) throw UndefinedFidelityError("boson state vanishes on the hard-core subspace");
    v.normalize();
    return v;
}

Vec u_pi_phases(const ExcitationBasis& basis)
{
    const int N = basis.n_atoms();
    // parity of sum_{m not in S} m
    const int total = (N * (N + 1) / 2) % 2;
    Vec p(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        int odd_inside = 0;
        Mask occ = basis.state(i);
        while (occ) {
            odd_inside += (std::countr_zero(occ) + 1) % 2;
            occ &= occ - 1;
        }
        p(i) = ((total + odd_inside) % 2) ? -1.0 : 1.0;
    }
    return p;
}

OperatorMatrix u_pi(const BasisPtr& basis)
{
    const Vec p = u_pi_phases(*basis);
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) t.emplace_back(i, i, p(i));
    return OperatorMatrix::from_triplets(basis, t);
}

namespace {

OperatorMatrix chain_operator(const BasisPtr& basis, cplx onsite, cplx hop_right, cplx hop_left)
{
    // hop_right multiplies sigma_j^dag sigma_{j+1}, hop_left multiplies sigma_{j+1}^dag sigma_j
    std::vector<Eigen::Triplet<cplx>> t;
    for (std::size_t i = 0; i < basis->size(); ++i) {
        const Mask s = basis->state(i);
        const int n = std::popcount(s);
        if (n == 0) continue;
        t.emplace_back(i, i, onsite * double(n));
        for (int j = 1; j < basis->n_atoms(); ++j) {
            const Mask a = site_bit(j), b = site_bit(j + 1);
            if ((s & b) && !(s & a)) t.emplace_back(*basis->index_of((s & ~b) | a), i, hop_right);
            if ((s & a) && !(s & b)) t.emplace_back(*basis->index_of((s & ~a) | b), i, hop_left);
        }
    }
    return OperatorMatrix::from_triplets(basis, t);
}

} // namespace

OperatorMatrix toy_h1(const BasisPtr& basis, const BandEdge& edge)
{
    const cplx c1 = edge.omega_ex + 2.0 * edge.a2;
    const cplx right = -edge.a2 * std::exp(-kI * edge.k_ex);
    const cplx left = -edge.a2 * std::exp(kI * edge.k_ex);
    return chain_operator(basis, c1, right, left);
}

cplx toy_h1_energy(const BandEdge& edge, int N, const std::vector<int>& indices)
{
    const cplx c1 = edge.omega_ex + 2.0 * edge.a2;
    cplx e = 0.0;
    for (int xi : indices) e += c1 - 2.0 * edge.a2 * std::cos(xi * kPi / (N + 1));
    return e;
}

DissipativeToyModel toy_h1_dissipative(const BasisPtr& basis, const BandEdge& edge, double beta)
{
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
    const double gamma_ex = edge.gamma_ex();
    const double re_a2 = edge.a2.real();
    OperatorMatrix h = chain_operator(basis, -kI * beta * gamma_ex / 2.0, -re_a2, -re_a2);
    const int N = basis->n_atoms();
    JumpSet jumps;
    jumps.rates = RVec::Constant(N, beta * gamma_ex);
    jumps.modes.resize(N, N);
    for (int xi = 1; xi <= N; ++xi) jumps.modes.col(xi - 1) = mode_amplitudes(N, xi, EdgeTag::zero);
    return {std::move(h), std::move(jumps)};
}

std::vector<FermionString> enumerate_strings(int n_e, int xi_max, EdgeTag tag)
{
    std::vector<FermionString> out;
    if (n_e < 1 || n_e > xi_max) return out;
    std::vector<int> c(n_e);
    for (int i = 0; i < n_e; ++i) c[i] = i + 1;
    while (true) {
        out.push_back({c, tag});
        int i = n_e - 1;
        while (i >= 0 && c[i] == xi_max - n_e + i + 1) --i;
        if (i < 0) break;
        ++c[i];
        for (int j = i + 1; j < n_e; ++j) c[j] = c[j - 1] + 1;
    }
    return out;
}

// --------------------------------------------------------------------------

void JumpSet::validate(double tol) const
{
    if (rates.size() != modes.cols()) throw std::invalid_argument("one rate per jump mode required");
    for (Eigen::Index i = 0; i < rates.size(); ++i) {
        if (!(rates(i) >= 0.0)) throw ModelInconsistencyError("negative jump rate");
    }
    const Mat gram = modes.adjoint() * modes;
    if ((gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > tol) {
        throw ModelInconsistencyError("jump modes are not orthonormal");
    }
}

OperatorMatrix JumpSet::op(const BasisPtr& basis, int xi) const
{
    if (xi < 0 || xi >= size()) throw std::invalid_argument("jump index out of range");
    return collective_lowering_op(basis, modes.col(xi).conjugate());
}

Mat JumpSet::rate_matrix() const
{
    return modes * rates.cast<cplx>().asDiagonal() * modes.adjoint();
}

} // namespace atomarray
