#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "atomarray/hilbert.hpp"

using namespace atomarray;

TEST_CASE("sector sizes follow binomial coefficients")
{
    const BasisPtr b = build_basis(make_geometry(20, kPi / 2), 3);
    CHECK(b->sector_size(0) == 1);
    CHECK(b->sector_size(1) == 20);
    CHECK(b->sector_size(2) == 190);
    CHECK(b->sector_size(3) == 1140);
    CHECK(b->size() == 1351);
}

TEST_CASE("index_of inverts the enumeration")
{
    const BasisPtr b = build_basis(make_geometry(9, kPi / 2), 4);
    for (std::size_t i = 0; i < b->size(); ++i) {
        REQUIRE(b->index_of(b->state(i)).value() == i);
        const auto s = b->sites(i);
        CHECK(b->index_of_sites(s) == i);
    }
    const std::vector<int> five = {1, 2, 3, 4, 5};
    CHECK_FALSE(b->index_of(sites_mask(five)).has_value());
}

TEST_CASE("states within a sector are lexicographic")
{
    const BasisPtr b = build_basis(make_geometry(5, kPi / 2), 2);
    const auto off = b->sector_offset(2);
    CHECK(b->sites(off) == std::vector<int>{1, 2});
    CHECK(b->sites(off + 1) == std::vector<int>{1, 3});
    CHECK(b->sites(off + b->sector_size(2) - 1) == std::vector<int>{4, 5});
}

TEST_CASE("geometry validation")
{
    CHECK_THROWS_AS(make_geometry(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_geometry(4, -1.0), std::invalid_argument);
    CHECK_THROWS(build_basis(make_geometry(65, 1.0), 1));
    CHECK_THROWS(build_basis(make_geometry(4, 1.0), 5));
}

TEST_CASE("number operator and lowering operators")
{
    const BasisPtr b = build_basis(make_geometry(5, kPi / 2), 5);
    const Mat n = number_op(b).to_dense();
    for (std::size_t i = 0; i < b->size(); ++i) CHECK(n(i, i).real() == doctest::Approx(b->excitation(i)));
    Mat sum = Mat::Zero(b->size(), b->size());
    for (int m = 1; m <= 5; ++m) {
        const Mat s = lowering_op(b, m).to_dense();
        sum += s.adjoint() * s;
        // single-site su(2): s s^dag + s^dag s = 1
        const Mat anti = s * s.adjoint() + s.adjoint() * s;
        CHECK((anti - Mat::Identity(b->size(), b->size())).norm() < 1e-14);
    }
    CHECK((sum - n).norm() < 1e-12);
}

TEST_CASE("spin wave normalization on a single excitation")
{
    const BasisPtr b = build_basis(make_geometry(7, kPi / 2), 2);
    const OperatorMatrix sk = spin_wave_op(b, 0.3);
    const StateVector w = apply(sk.adjoint(), ground_state(b));
    CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-12));
    // sigma_k sigma_k^dag |G> = |G>
    CHECK(std::abs(sk.apply(w.amplitudes)(0) - 1.0) < 1e-12);
}

TEST_CASE("raising leakage counts the norm pushed past n_max")
{
    const BasisPtr small = build_basis(make_geometry(6, kPi / 2), 2);
    const BasisPtr big = build_basis(make_geometry(6, kPi / 2), 3);
    const std::vector<int> sites = {2, 5};
    const StateVector v = basis_state(small, sites);
    const StateVector vb = basis_state(big, sites);
    const Vec up = spin_wave_op(big, 0.2).adjoint().apply(vb.amplitudes);
    const double expected = up.segment(big->sector_offset(3), big->sector_size(3)).squaredNorm();
    CHECK(raising_leakage_norm2(v, 0.2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("one-body density")
{
    const BasisPtr b = build_basis(make_geometry(6, kPi / 2), 3);
    Vec psi = Vec::Random(b->size());
    psi.normalize();
    const Mat rho = one_body_density(*b, psi);
    CHECK(std::abs(rho.trace() - psi.dot(number_op(b).apply(psi))) < 1e-12);
    CHECK((rho - rho.adjoint()).norm() < 1e-12);
    const Mat direct = (raising_op(b, 2) * lowering_op(b, 5)).to_dense();
    CHECK(std::abs(rho(1, 4) - psi.dot(direct * psi)) < 1e-12);
}

TEST_CASE("state vectors")
{
    const BasisPtr b = build_basis(make_geometry(3, kPi / 2), 1);
    StateVector z(b, Vec::Zero(b->size()));
    CHECK_THROWS(z.normalize());
    const StateVector g = ground_state(b);
    CHECK(g.norm() == 1.0);
    const BasisPtr other = build_basis(make_geometry(4, kPi / 2), 1);
    CHECK_THROWS(require_same_basis(*b, *other, "test"));
}

TEST_CASE("block operators reject sector-changing terms")
{
    const BasisPtr b = build_basis(make_geometry(4, kPi / 2), 2);
    CHECK_THROWS_AS(BlockOperator::from_operator(lowering_op(b, 1)), std::invalid_argument);
    const BlockOperator n = BlockOperator::from_operator(number_op(b));
    Vec v = Vec::Random(b->size());
    CHECK((n.apply(v) - number_op(b).apply(v)).norm() < 1e-12);
    CHECK((n.to_dense() - number_op(b).to_dense()).norm() < 1e-12);
}

TEST_CASE("sparse and dense storage agree")
{
    const BasisPtr b = build_basis(make_geometry(5, kPi / 2), 3);
    const OperatorMatrix s = spin_wave_op(b, 1.1);
    const OperatorMatrix d(b, s.to_dense());
    Vec v = Vec::Random(b->size());
    CHECK((s.apply(v) - d.apply(v)).norm() < 1e-12);
    CHECK(((s * d).to_dense() - s.to_dense() * d.to_dense()).norm() < 1e-12);
}
