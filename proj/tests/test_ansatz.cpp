#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atomarray/ansatz.hpp"
#include "atomarray/observables.hpp"

using namespace atomarray;

TEST_CASE("sine modes are orthonormal")
{
    const int N = 11;
    for (EdgeTag tag : {EdgeTag::zero, EdgeTag::pi}) {
        std::vector<int> all;
        for (int xi = 1; xi <= N; ++xi) all.push_back(xi);
        const Mat m = mode_matrix(N, all, tag);
        CHECK((m.adjoint() * m - Mat::Identity(N, N)).norm() < 1e-12);
    }
    CHECK(mode_amplitudes(N, 0, EdgeTag::zero).norm() == doctest::Approx(1.0));
    const auto q = q_grid(N);
    CHECK(q[0] == doctest::Approx(kPi / 12.0));
}

TEST_CASE("Slater amplitudes are antisymmetric in the modes")
{
    const BasisPtr b = build_basis(make_geometry(7, kPi / 2), 3);
    const Mat m = mode_matrix(7, {1, 3, 4}, EdgeTag::zero);
    Mat swapped = m;
    swapped.col(0).swap(swapped.col(2));
    CHECK((slater_amplitudes(*b, m) + slater_amplitudes(*b, swapped)).norm() < 1e-13);
    CHECK((permanent_amplitudes(*b, m) - permanent_amplitudes(*b, swapped)).norm() < 1e-13);
}

TEST_CASE("fermion states")
{
    const BasisPtr b = build_basis(make_geometry(8, kPi / 2), 3);
    const StateVector f = fermion_state(b, {{1, 2, 3}, EdgeTag::zero});
    CHECK(f.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sector_component(f, 3).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(fermion_state(b, {{2, 1}, EdgeTag::zero}));
    CHECK_THROWS(fermion_state(b, {{1, 9}, EdgeTag::zero}));
    CHECK_THROWS(fermion_state(b, {{1, 2, 3, 4}, EdgeTag::zero}));
    const StateVector g = fermion_state(b, {{1, 2, 4}, EdgeTag::zero});
    CHECK(std::abs(f.dot(g)) < 1e-12);
}

TEST_CASE("boson state B_000 is the symmetric Dicke state")
{
    const BasisPtr b = build_basis(make_geometry(6, kPi / 2), 3);
    const StateVector s = boson_state(b, {0, 0, 0}, EdgeTag::zero);
    const auto off = b->sector_offset(3);
    for (std::size_t i = 0; i < b->sector_size(3); ++i)
        CHECK(std::abs(s.amplitudes(off + i) - 1.0 / std::sqrt(20.0)) < 1e-12);
}

TEST_CASE("U_pi exchanges the band-edge families")
{
    const BasisPtr b = build_basis(make_geometry(10, kPi / 2), 3);
    const OperatorMatrix u = u_pi(b);
    CHECK(((u * u).to_dense() - Mat::Identity(b->size(), b->size())).norm() < 1e-12);
    const StateVector f0 = fermion_state(b, {{1, 2, 3}, EdgeTag::zero});
    const StateVector fp = fermion_state(b, {{1, 2, 3}, EdgeTag::pi});
    CHECK(fidelity(apply(u, f0), fp) == doctest::Approx(1.0).epsilon(1e-12));
    const Vec ph = u_pi_phases(*b);
    CHECK((ph.asDiagonal() * f0.amplitudes - apply(u, f0).amplitudes).norm() < 1e-12);
}

TEST_CASE("toy chain diagonalized by free fermions")
{
    const int N = 6;
    const BasisPtr b = build_basis(make_geometry(N, kPi / 2), 2);
    const BandEdge e = band_edge(kPi / 2, EdgeTag::pi);
    const OperatorMatrix h1 = toy_h1(b, e);
    for (const auto& s : enumerate_strings(2, N, EdgeTag::pi)) {
        const StateVector f = fermion_state(b, s);
        const cplx E = toy_h1_energy(e, N, s.indices);
        CHECK((h1.apply(f.amplitudes) - E * f.amplitudes).norm() < 1e-12);
    }
    CHECK(enumerate_strings(3, 12, EdgeTag::zero).size() == 220);
}

TEST_CASE("dissipative toy model")
{
    const BasisPtr b = build_basis(make_geometry(5, kPi / 2), 2);
    const BandEdge e = band_edge(kPi / 2, EdgeTag::zero);
    const DissipativeToyModel t = toy_h1_dissipative(b, e, 0.1);
    CHECK(t.jumps.size() == 5);
    for (Eigen::Index i = 0; i < t.jumps.rates.size(); ++i)
        CHECK(t.jumps.rates(i) == doctest::Approx(0.1 * e.gamma_ex()));
    t.jumps.validate();
}
