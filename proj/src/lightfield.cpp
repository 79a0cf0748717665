// lightfield.cpp — Dipole-dipole couplings, polylog dispersion and band-edge data

#include "atomarray/lightfield.hpp"

#include <cmath>

#include <fmt/format.h>

#include "atomarray/polylog.hpp"

namespace atomarray {

GreensTensor greens_free_space(const Eigen::Vector3d& r_vec, double k0)
{
    const double r = r_vec.norm();
    if (r == 0.0) throw SingularInputError("free-space Green's tensor is singular at r = 0");
    if (!(k0 > 0.0)) throw std::invalid_argument("k0 must be positive");
    const double kr = k0 * r;
    const Eigen::Vector3d u = r_vec / r;
    const cplx pre = std::exp(kI * kr) / (4.0 * kPi * k0 * k0 * r * r * r);
    const cplx a = kr * kr + kI * kr - 1.0;
    const cplx b = -kr * kr - 3.0 * kI * kr + 3.0;
    GreensTensor g = a * GreensTensor::Identity() + b * (u * u.transpose()).cast<cplx>();
    return pre * g;
}

Mat coupling_matrix(const ArrayGeometry& geometry)
{
    geometry.validate();
    const int N = geometry.n_atoms;
    const double k0 = geometry.kd;
    const Eigen::Vector3cd dip = geometry.dipole.cast<cplx>();
    // gamma_0 = k0^3 |d|^2 / (3 pi eps0) fixes the prefactor to -(3 pi / k0)
    Eigen::VectorXcd row(N);
    row(0) = cplx(0.0, -0.5);
    for (int s = 1; s < N; ++s) {
        const GreensTensor g = greens_free_space(Eigen::Vector3d(0.0, 0.0, double(s)), k0);
        row(s) = -(3.0 * kPi / k0) * dip.dot(g * dip);
    }
    Mat J(N, N);
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n) J(m, n) = row(std::abs(m - n));
    return J;
}

namespace {

void require_off_edge(double kd, double k)
{
    for (int eps : {1, -1}) {
        const cplx z = std::exp(kI * (kd + eps * k));
        if (std::abs(z - 1.0) < 1e-12) {
            throw SingularInputError(fmt::format("k = {} lies on the light-cone edge for kd = {}", k, kd));
        }
    }
}

} // namespace

cplx dispersion(double kd, double k)
{
    if (!(kd > 0.0)) throw std::invalid_argument("kd must be positive");
    require_off_edge(kd, k);
    cplx sum = 0.0;
    for (int eps : {1, -1}) {
        const cplx z = std::exp(kI * (kd + eps * k));
        for (int xi : {2, 3}) sum += std::pow(kI / kd, xi) * polylog(xi, z);
    }
    return -kI * 1.5 * sum - kI * 0.5;
}

cplx dispersion_second_derivative(double kd, double k)
{
    if (!(kd > 0.0)) throw std::invalid_argument("kd must be positive");
    require_off_edge(kd, k);
    cplx sum = 0.0;
    for (int eps : {1, -1}) {
        const cplx z = std::exp(kI * (kd + eps * k));
        for (int xi : {0, 1}) sum += std::pow(kI / kd, xi + 2) * polylog(xi, z);
    }
    return kI * 1.5 * sum;
}

const char* to_string(EdgeTag tag)
{
    return tag == EdgeTag::zero ? "zero" : "pi";
}

EdgeTag parse_edge_tag(const std::string& s)
{
    if (s == "zero" || s == "0") return EdgeTag::zero;
    if (s == "pi") return EdgeTag::pi;
    throw std::invalid_argument(fmt::format("unknown band-edge tag '{}'", s));
}

BandEdge band_edge(double kd, EdgeTag which)
{
    BandEdge e;
    e.tag = which;
    e.kd = kd;
    e.k_ex = edge_momentum(which);
    e.omega_ex = dispersion(kd, e.k_ex);
    const cplx w2 = dispersion_second_derivative(kd, e.k_ex);
    e.a2 = 0.5 * w2;

    const double h = 2e-3;
    auto f = [&](double dk) { return dispersion(kd, e.k_ex + dk); };
    const cplx fd = (-f(2 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2 * h)) / (12.0 * h * h);
    const double rel = std::abs(fd - w2) / std::max(std::abs(w2), 1e-300);
    if (rel > 1e-6) {
        throw NumericalInconsistencyError(fmt::format(
            "band-edge curvature at k = {}: analytic {} vs finite difference {} (relative {:.3g})",
            e.k_ex, w2.real(), fd.real(), rel));
    }
    return e;
}

// --------------------------------------------------------------------------

namespace {

template <class M>
M assemble_sector_impl(const ExcitationBasis& basis, int n, const M& c)
{
    if (c.rows() != basis.n_atoms() || c.cols() != basis.n_atoms()) {
        throw std::invalid_argument("coupling matrix must be N x N");
    }
    const auto off = basis.sector_offset(n);
    const auto len = static_cast<Eigen::Index>(basis.sector_size(n));
    M out = M::Zero(len, len);
    for (Eigen::Index i = 0; i < len; ++i) {
        typename M::Scalar diag = 0.0;
        Mask occ = basis.state(off + i);
        while (occ) {
            const int s = std::countr_zero(occ);
            occ &= occ - 1;
            diag += c(s, s);
        }
        out(i, i) = diag;
    }
    for_each_hop(basis, n, [&](std::size_t from, std::size_t to, int m, int nn) {
        out(to - off, from - off) += c(m - 1, nn - 1);
    });
    return out;
}

} // namespace

RMat assemble_sector(const ExcitationBasis& basis, int n, const RMat& c)
{
    return assemble_sector_impl(basis, n, c);
}

Mat assemble_sector(const ExcitationBasis& basis, int n, const Mat& c)
{
    return assemble_sector_impl(basis, n, c);
}

Mat sector_h_eff(const ExcitationBasis& basis, int n, double beta)
{
    const Mat J = coupling_matrix(basis.geometry());
    const RMat re = J.real();
    const RMat im = -J.imag();
    Mat out = assemble_sector(basis, n, re).cast<cplx>();
    out.imag() -= beta * assemble_sector(basis, n, im);
    return out;
}

EffectiveHamiltonian build_h_eff(const BasisPtr& basis, double beta)
{
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    EffectiveHamiltonian h;
    h.basis = basis;
    h.beta = beta;
    h.coupling = coupling_matrix(basis->geometry());
    const RMat re = h.coupling.real();
    const RMat im = -h.coupling.imag();
    h.h_re = BlockOperator::zeros(basis);
    h.h_im = BlockOperator::zeros(basis);
    for (int n = 1; n <= basis->n_max(); ++n) {
        h.h_re.block(n) = assemble_sector(*basis, n, re).cast<cplx>();
        h.h_im.block(n) = assemble_sector(*basis, n, im).cast<cplx>();
    }
    return h;
}

Mat EffectiveHamiltonian::sector(int n) const
{
    return h_re.block(n) - kI * beta * h_im.block(n);
}

Vec EffectiveHamiltonian::apply(const Vec& v) const
{
    return h_re.apply(v) - kI * beta * h_im.apply(v);
}

OperatorMatrix EffectiveHamiltonian::to_operator() const
{
    return {basis, Mat(h_re.to_dense() - kI * beta * h_im.to_dense())};
}

} // namespace atomarray
