#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atomarray/lightfield.hpp"
#include "atomarray/polylog.hpp"

using namespace atomarray;

namespace {

// J(r) for parallel dipoles along the array
cplx pair_coupling(double r, double k0)
{
    const double x = k0 * r;
    return -1.5 * std::exp(kI * x) * (1.0 - kI * x) / (x * x * x);
}

} // namespace

TEST_CASE("polylog against closed forms")
{
    const double catalan = 0.915965594177219015;
    const cplx li2i = polylog(2, kI);
    CHECK(std::abs(li2i - cplx(-kPi * kPi / 48.0, catalan)) < 1e-14);
    CHECK(std::abs(polylog(2, 1.0) - kPi * kPi / 6.0) < 1e-14);
    CHECK(std::abs(polylog(3, -1.0) + 0.75 * kZeta3) < 1e-14);
    CHECK(std::abs(polylog(1, 0.3) + std::log(0.7)) < 1e-15);
    // brute-force series inside the disk
    const cplx z = 0.7 * std::exp(kI * 0.4);
    cplx sum = 0.0, p = 1.0;
    for (int n = 1; n < 400; ++n) {
        p *= z;
        sum += p / (double(n) * n * n);
    }
    CHECK(std::abs(polylog(3, z) - sum) < 1e-14);
}

TEST_CASE("coupling matrix")
{
    const Mat J = coupling_matrix(make_geometry(6, kPi / 2));
    CHECK((J - J.transpose()).norm() < 1e-14);
    for (int m = 0; m < 6; ++m) CHECK(std::abs(J(m, m) - cplx(0.0, -0.5)) < 1e-15);
    CHECK(std::abs(J(0, 1) - pair_coupling(1.0, kPi / 2)) < 1e-14);
    CHECK(std::abs(J(1, 4) - pair_coupling(3.0, kPi / 2)) < 1e-14);
}

TEST_CASE("dispersion matches the lattice sum of a long array")
{
    const int N = 400;
    const Mat J = coupling_matrix(make_geometry(N, kPi / 2));
    for (double k : {0.0, 0.2, 2.0, kPi}) {
        // bulk plane wave energy at the array center
        cplx s = 0.0;
        const int c = N / 2;
        for (int n = 0; n < N; ++n) s += J(c, n) * std::exp(kI * k * double(n - c));
        CHECK(std::abs(s - dispersion(kPi / 2, k)) < 2e-3);
    }
}

TEST_CASE("dispersion lattice sum converges")
{
    for (double k : {0.0, 0.3, 2.5, kPi}) {
        cplx s = cplx(0.0, -0.5);
        for (int r = 1; r < 200000; ++r) s += 2.0 * pair_coupling(r, kPi / 2) * std::cos(k * r);
        CHECK(std::abs(s - dispersion(kPi / 2, k)) < 1e-4);
    }
}

TEST_CASE("band edges")
{
    const BandEdge z = band_edge(kPi / 2, EdgeTag::zero);
    CHECK(z.omega_ex.real() == doctest::Approx(-1.02645221402575).epsilon(1e-10));
    CHECK(z.gamma_ex() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(z.a2.real() == doctest::Approx(0.169833189960388).epsilon(1e-10));
    const BandEdge p = band_edge(kPi / 2, EdgeTag::pi);
    CHECK(p.omega_ex.real() == doctest::Approx(1.20090902223888).epsilon(1e-10));
    CHECK(std::abs(p.gamma_ex()) < 1e-12);
    CHECK(p.a2.real() == doctest::Approx(-0.438093911893639).epsilon(1e-10));
    CHECK(parse_edge_tag("pi") == EdgeTag::pi);
    CHECK_THROWS(parse_edge_tag("half"));
}

TEST_CASE("dispersion diverges on the light cone")
{
    CHECK_THROWS_AS(dispersion(kPi / 2, kPi / 2), SingularInputError);
    CHECK_THROWS_AS(dispersion(kPi / 2, -kPi / 2), SingularInputError);
    CHECK(std::abs(decay_rate(dispersion(kPi / 2, 2.0))) < 1e-12);
}

TEST_CASE("effective Hamiltonian parts are real symmetric")
{
    const BasisPtr b = build_basis(make_geometry(6, kPi / 2), 3);
    const EffectiveHamiltonian h = build_h_eff(b, 0.5);
    for (int n = 0; n <= 3; ++n) {
        const Mat re = h.h_re.block(n), im = h.h_im.block(n);
        CHECK((re - re.transpose()).norm() < 1e-13);
        CHECK(re.imag().norm() < 1e-15);
        CHECK((im - im.transpose()).norm() < 1e-13);
        CHECK((h.sector(n) - sector_h_eff(*b, n, 0.5)).norm() < 1e-12);
    }
    // single excitation block is J itself with beta on the imaginary part
    const Mat one = h.sector(1);
    const Mat J = coupling_matrix(b->geometry());
    CHECK((one - (J.real().cast<cplx>() + 0.5 * kI * J.imag().cast<cplx>())).norm() < 1e-13);
    Vec v = Vec::Random(b->size());
    CHECK((h.apply(v) - h.to_operator().apply(v)).norm() < 1e-12);
}
