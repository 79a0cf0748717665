#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atomarray/observables.hpp"

using namespace atomarray;

TEST_CASE("momentum grids")
{
    const MomentumGrid g = default_pk_grid(kPi / 2);
    CHECK(g.size() == 201);
    CHECK(g.k.front() == doctest::Approx(-kPi));
    CHECK(g.spacing() == doctest::Approx(kPi / 100));
    CHECK(g.light_cone[100]);
    CHECK_FALSE(g.light_cone[0]);
    CHECK(default_g2_grid(kPi / 2).size() == 41);
    CHECK_THROWS(make_grid(5, 1.0, 0.0, 1.0));
    CHECK_THROWS(make_grid(5, -4.0, 0.0, 1.0));
}

TEST_CASE("fidelity")
{
    const BasisPtr b = build_basis(make_geometry(12, kPi / 2), 2);
    const StateVector f = fermion_state(b, {{1, 2}, EdgeTag::zero});
    CHECK(fidelity(f, f) == doctest::Approx(1.0));
    CHECK(fidelity(f, fermion_state(b, {{1, 3}, EdgeTag::zero})) < 1e-12);
    CHECK_THROWS_AS(fidelity(f, StateVector(b, Vec::Zero(b->size()))), UndefinedFidelityError);
    CHECK_THROWS_AS(sector_fidelity(f, ground_state(b), 2), UndefinedFidelityError);
}

TEST_CASE("P_k is reflection symmetric for a symmetric state")
{
    const BasisPtr b = build_basis(make_geometry(10, kPi / 2), 2);
    const StateVector s = boson_state(b, {0, 0}, EdgeTag::zero);
    const MomentumGrid g = default_pk_grid(kPi / 2);
    const RVec p = pk_from_density(one_body_density(*b, s.amplitudes), g);
    for (int i = 0; i < 201; ++i) CHECK(std::abs(p(i) - p(200 - i)) < 1e-12);
    // direct <sigma_k^dag sigma_k>
    const Vec v = spin_wave_op(b, g.k[120]).apply(s.amplitudes);
    CHECK(p(120) == doctest::Approx(v.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("G map symmetry and direct value")
{
    const BasisPtr b = build_basis(make_geometry(8, kPi / 2), 2);
    const StateVector s = fermion_state(b, {{1, 2}, EdgeTag::zero});
    const MomentumGrid g = make_grid(9, -1.0, 1.0, kPi / 2);
    const CorrelationMap m = g2_map(s, g, g);
    CHECK((m.values - m.values.transpose()).cwiseAbs().maxCoeff() < 1e-10 * m.max());
    CHECK(m.values.minCoeff() > -1e-12);
    const Vec v = spin_wave_op(b, g.k[6]).apply(spin_wave_op(b, g.k[2]).apply(s.amplitudes));
    CHECK(m.values(2, 6) == doctest::Approx(64.0 * v.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("spin spectrum")
{
    const SpinSpectrum s0 = collective_spin_spectrum(8, 0);
    CHECK(s0.numeric.size() == 1);
    const SpinSpectrum s1 = collective_spin_spectrum(8, 1);
    REQUIRE(s1.numeric.size() == 2);
    CHECK(std::abs(s1.numeric(0)) < 1e-12);
    CHECK(s1.numeric(1) == doctest::Approx(1.0));
    const SpinSpectrum s2 = collective_spin_spectrum(8, 2);
    CHECK(s2.residual < 1e-10);
    CHECK(s2.prefactor == doctest::Approx(0.25));
}

TEST_CASE("r_beta")
{
    const BandEdge e = band_edge(kPi / 2, EdgeTag::zero);
    CHECK(rbeta(e, 40, 0.04) == doctest::Approx(rbeta(e, 20, 0.04) / 4.0));
    CHECK_THROWS(rbeta(band_edge(kPi / 2, EdgeTag::pi), 20, 0.04));
}

TEST_CASE("sigma_k bound")
{
    const BoundSample s = sigma_k_norm_bound({{1, 2}, EdgeTag::zero}, kPi / 2, 40);
    CHECK(s.lhs < s.rhs);
    const double q1 = q_grid(40)[0];
    CHECK_THROWS_AS(sigma_k_norm_bound({{1, 2}, EdgeTag::zero}, q1, 40), SingularInputError);
}

TEST_CASE("delta H elements do not depend on the state phase")
{
    const BasisPtr b = build_basis(make_geometry(10, kPi / 2), 2);
    const EffectiveHamiltonian h = build_h_eff(b, 1.0);
    const BandEdge e = band_edge(kPi / 2, EdgeTag::pi);
    const Mat dh = delta_h_elements(h, e, {{{1, 2}, EdgeTag::pi}});
    const Vec f = std::exp(kI * 0.77) * fermion_state(b, {{1, 2}, EdgeTag::pi}).amplitudes;
    const cplx direct = f.dot(h.apply(f) - toy_h1(b, e).apply(f));
    CHECK(std::abs(std::abs(dh(0, 0)) - std::abs(direct)) < 1e-12);
}

TEST_CASE("single-excitation fidelity scan improves with N")
{
    double last = 0.0;
    for (int N : {10, 20, 40}) {
        const FidelityScan s = fidelity_scan(build_basis(make_geometry(N, kPi / 2), 1), 1, 1.0, 0);
        CHECK(s.entries.front().fidelity > last);
        last = s.entries.front().fidelity;
        for (std::size_t i = 1; i < s.entries.size(); ++i) CHECK(s.entries[i].decay >= s.entries[i - 1].decay);
    }
}

TEST_CASE("occupation near the edge stays finite")
{
    const FermionString s{{1, 2}, EdgeTag::zero};
    double lo = 1e9;
    for (int N : {16, 32, 64}) {
        const double k = q_grid(N)[0] + 0.5 * kPi / (N + 1);
        lo = std::min(lo, occupation_spectrum(s, N, make_grid(1, k, k, kPi / 2))(0));
    }
    CHECK(lo > 0.05);
}
