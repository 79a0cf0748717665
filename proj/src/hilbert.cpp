// hilbert.cpp — Truncated basis enumeration, ranking and operator assembly

#include "atomarray/hilbert.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace atomarray {

void ArrayGeometry::validate() const
{
    if (n_atoms < 1) {
        throw std::invalid_argument(fmt::format("n_atoms must be positive, got {}", n_atoms));
    }
    if (!(kd > 0.0) || !std::isfinite(kd)) {
        throw std::invalid_argument("kd must be positive and finite");
    }
    if (std::abs(dipole.norm() - 1.0) > 1e-12) {
        throw std::invalid_argument("dipole orientation must be a unit vector");
    }
}

bool ArrayGeometry::dipole_parallel() const
{
    return std::abs(std::abs(dipole.z()) - 1.0) < 1e-12;
}

ArrayGeometry make_geometry(int n_atoms, double kd, const Eigen::Vector3d& dipole)
{
    ArrayGeometry g{n_atoms, kd, dipole};
    g.validate();
    return g;
}

std::vector<int> mask_sites(Mask m)
{
    std::vector<int> out;
    out.reserve(std::popcount(m));
    while (m) {
        out.push_back(std::countr_zero(m) + 1);
        m &= m - 1;
    }
    return out;
}

Mask sites_mask(std::span<const int> sites)
{
    Mask m = 0;
    for (int s : sites) m |= site_bit(s);
    return m;
}

// --------------------------------------------------------------------------

ExcitationBasis::ExcitationBasis(const ArrayGeometry& geometry, int n_max)
    : geometry_(geometry), n_max_(n_max)
{
    geometry_.validate();
    const int N = geometry_.n_atoms;
    if (N > 64) throw std::invalid_argument("occupation masks support at most 64 atoms");
    if (n_max < 0 || n_max > N) {
        throw std::invalid_argument(fmt::format("n_max must be in 0..{}, got {}", N, n_max));
    }

    std::vector<std::vector<std::size_t>> binom(N + 1, std::vector<std::size_t>(N + 1, 0));
    for (int a = 0; a <= N; ++a) {
        binom[a][0] = 1;
        for (int b = 1; b <= a; ++b) binom[a][b] = binom[a - 1][b - 1] + (b <= a - 1 ? binom[a - 1][b] : 0);
    }
    prefix_.assign(n_max + 1, std::vector<std::size_t>(N + 1, 0));
    for (int r = 0; r <= n_max; ++r) {
        for (int j = 1; j <= N; ++j) {
            const int top = N - j;
            prefix_[r][j] = prefix_[r][j - 1] + (r <= top ? binom[top][r] : 0);
        }
    }

    offsets_.push_back(0);
    for (int n = 0; n <= n_max; ++n) {
        // lexicographic enumeration of n-subsets of 1..N
        std::vector<int> c(n);
        for (int i = 0; i < n; ++i) c[i] = i + 1;
        while (true) {
            states_.push_back(sites_mask(c));
            int i = n - 1;
            while (i >= 0 && c[i] == N - n + i + 1) --i;
            if (i < 0) break;
            ++c[i];
            for (int j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
        }
        offsets_.push_back(states_.size());
    }
}

int ExcitationBasis::excitation(std::size_t i) const
{
    return std::popcount(states_[i]);
}

std::size_t ExcitationBasis::rank_in_sector(Mask m, int n) const
{
    std::size_t rank = 0;
    int previous = 0;
    int i = 1;
    while (m) {
        const int c = std::countr_zero(m) + 1;
        m &= m - 1;
        const auto& s = prefix_[n - i];
        rank += s[c - 1] - s[previous];
        previous = c;
        ++i;
    }
    return rank;
}

std::optional<std::size_t> ExcitationBasis::index_of(Mask m) const
{
    const int N = geometry_.n_atoms;
    if (N < 64 && (m >> N) != 0) return std::nullopt;
    const int n = std::popcount(m);
    if (n > n_max_) return std::nullopt;
    return offsets_[n] + rank_in_sector(m, n);
}

std::size_t ExcitationBasis::index_of_sites(std::span<const int> sites) const
{
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (sites[i] < 1 || sites[i] > n_atoms() || (i > 0 && sites[i] <= sites[i - 1])) {
            throw std::invalid_argument("site list must be strictly increasing within 1..N");
        }
    }
    const auto idx = index_of(sites_mask(sites));
    if (!idx) throw std::invalid_argument("site list exceeds the basis truncation");
    return *idx;
}

bool ExcitationBasis::same_as(const ExcitationBasis& other) const
{
    return this == &other ||
           (n_max_ == other.n_max_ && geometry_.n_atoms == other.geometry_.n_atoms &&
            geometry_.kd == other.geometry_.kd && geometry_.dipole == other.geometry_.dipole);
}

BasisPtr build_basis(const ArrayGeometry& geometry, int n_max)
{
    return std::make_shared<const ExcitationBasis>(geometry, n_max);
}

// --------------------------------------------------------------------------

StateVector::StateVector(BasisPtr b, Vec a, bool is_normalized)
    : basis(std::move(b)), amplitudes(std::move(a)), normalized(is_normalized)
{
    if (!basis) throw std::invalid_argument("state vector requires a basis");
    if (static_cast<std::size_t>(amplitudes.size()) != basis->size()) {
        throw std::invalid_argument("amplitude count does not match basis size");
    }
    if (!amplitudes.allFinite()) throw std::invalid_argument("state amplitudes must be finite");
}

StateVector& StateVector::normalize()
{
    const double n = amplitudes.norm();
    if (!(n > 0.0)) throw std::invalid_argument("cannot normalize a zero vector");
    amplitudes /= n;
    normalized = true;
    return *this;
}

StateVector StateVector::normalized_copy() const
{
    StateVector c = *this;
    c.normalize();
    return c;
}

cplx StateVector::dot(const StateVector& other) const
{
    require_same_basis(*basis, *other.basis, "inner product");
    return amplitudes.dot(other.amplitudes);
}

StateVector ground_state(const BasisPtr& basis)
{
    Vec a = Vec::Zero(basis->size());
    a(0) = 1.0;
    return {basis, std::move(a), true};
}

StateVector basis_state(const BasisPtr& basis, std::span<const int> sites)
{
    Vec a = Vec::Zero(basis->size());
    a(basis->index_of_sites(sites)) = 1.0;
    return {basis, std::move(a), true};
}

StateVector sector_component(const StateVector& v, int n)
{
    if (n < 0 || n > v.basis->n_max()) throw std::invalid_argument("sector outside basis");
    Vec a = Vec::Zero(v.amplitudes.size());
    const auto off = v.basis->sector_offset(n);
    const auto len = v.basis->sector_size(n);
    a.segment(off, len) = v.amplitudes.segment(off, len);
    return {v.basis, std::move(a), false};
}

void require_same_basis(const ExcitationBasis& a, const ExcitationBasis& b, const char* what)
{
    if (!a.same_as(b)) throw std::invalid_argument(fmt::format("basis mismatch in {}", what));
}

// --------------------------------------------------------------------------

StoragePolicy& default_storage_policy()
{
    static StoragePolicy policy;
    return policy;
}

OperatorMatrix::OperatorMatrix(BasisPtr basis, SpMat m) : basis_(std::move(basis)), data_(std::move(m))
{
    if (static_cast<std::size_t>(sparse().rows()) != basis_->size() ||
        static_cast<std::size_t>(sparse().cols()) != basis_->size()) {
        throw std::invalid_argument("operator dimension does not match basis");
    }
}

OperatorMatrix::OperatorMatrix(BasisPtr basis, Mat m) : basis_(std::move(basis)), data_(std::move(m))
{
    if (static_cast<std::size_t>(dense().rows()) != basis_->size() ||
        static_cast<std::size_t>(dense().cols()) != basis_->size()) {
        throw std::invalid_argument("operator dimension does not match basis");
    }
    if (dense().hasNaN()) throw std::invalid_argument("operator entries contain NaN");
}

OperatorMatrix OperatorMatrix::from_triplets(BasisPtr basis,
                                             const std::vector<Eigen::Triplet<cplx>>& triplets,
                                             const StoragePolicy& policy)
{
    const auto n = static_cast<Eigen::Index>(basis->size());
    SpMat s(n, n);
    s.setFromTriplets(triplets.begin(), triplets.end());
    s.makeCompressed();
    const double fraction = n == 0 ? 0.0 : double(s.nonZeros()) / (double(n) * double(n));
    if (fraction > policy.dense_fraction) return {std::move(basis), Mat(s)};
    return {std::move(basis), std::move(s)};
}

Mat OperatorMatrix::to_dense() const
{
    return is_sparse() ? Mat(sparse()) : dense();
}

SpMat OperatorMatrix::to_sparse() const
{
    return is_sparse() ? sparse() : SpMat(dense().sparseView());
}

OperatorMatrix OperatorMatrix::adjoint() const
{
    if (is_sparse()) return {basis_, SpMat(sparse().adjoint())};
    return {basis_, Mat(dense().adjoint())};
}

Vec OperatorMatrix::apply(const Vec& v) const
{
    if (static_cast<std::size_t>(v.size()) != dim()) throw std::invalid_argument("vector size mismatch");
    if (is_sparse()) return sparse() * v;
    return dense() * v;
}

cplx OperatorMatrix::coeff(std::size_t row, std::size_t col) const
{
    if (is_sparse()) return sparse().coeff(row, col);
    return dense()(row, col);
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b)
{
    require_same_basis(*a.basis_, *b.basis_, "operator product");
    if (a.is_sparse() && b.is_sparse()) return {a.basis_, SpMat(a.sparse() * b.sparse())};
    if (a.is_sparse()) return {a.basis_, Mat(a.sparse() * b.dense())};
    if (b.is_sparse()) return {a.basis_, Mat(a.dense() * b.sparse())};
    return {a.basis_, Mat(a.dense() * b.dense())};
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b)
{
    require_same_basis(*a.basis_, *b.basis_, "operator sum");
    if (a.is_sparse() && b.is_sparse()) return {a.basis_, SpMat(a.sparse() + b.sparse())};
    return {a.basis_, Mat(a.to_dense() + b.to_dense())};
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b)
{
    return a + cplx(-1.0) * b;
}

OperatorMatrix operator*(cplx s, const OperatorMatrix& a)
{
    if (a.is_sparse()) return {a.basis_, SpMat(s * a.sparse())};
    return {a.basis_, Mat(s * a.dense())};
}

OperatorMatrix identity_op(const BasisPtr& basis)
{
    const auto n = static_cast<Eigen::Index>(basis->size());
    SpMat s(n, n);
    s.setIdentity();
    return {basis, std::move(s)};
}

OperatorMatrix zero_op(const BasisPtr& basis)
{
    const auto n = static_cast<Eigen::Index>(basis->size());
    return {basis, SpMat(n, n)};
}

OperatorMatrix number_op(const BasisPtr& basis)
{
    std::vector<Eigen::Triplet<cplx>> t;
    for (std::size_t i = 0; i < basis->size(); ++i) {
        const int n = basis->excitation(i);
        if (n) t.emplace_back(i, i, double(n));
    }
    return OperatorMatrix::from_triplets(basis, t);
}

OperatorMatrix collective_lowering_op(const BasisPtr& basis, const Vec& c)
{
    if (c.size() != basis->n_atoms()) throw std::invalid_argument("one coefficient per site required");
    std::vector<Eigen::Triplet<cplx>> t;
    for (std::size_t i = 0; i < basis->size(); ++i) {
        Mask s = basis->state(i);
        Mask occ = s;
        while (occ) {
            const int site = std::countr_zero(occ) + 1;
            occ &= occ - 1;
            if (c(site - 1) == cplx(0.0)) continue;
            t.emplace_back(*basis->index_of(s & ~site_bit(site)), i, c(site - 1));
        }
    }
    return OperatorMatrix::from_triplets(basis, t);
}

OperatorMatrix lowering_op(const BasisPtr& basis, int site)
{
    if (site < 1 || site > basis->n_atoms()) {
        throw std::invalid_argument(fmt::format("site {} outside 1..{}", site, basis->n_atoms()));
    }
    Vec c = Vec::Zero(basis->n_atoms());
    c(site - 1) = 1.0;
    return collective_lowering_op(basis, c);
}

OperatorMatrix raising_op(const BasisPtr& basis, int site)
{
    return lowering_op(basis, site).adjoint();
}

OperatorMatrix spin_wave_op(const BasisPtr& basis, double k)
{
    const int N = basis->n_atoms();
    Vec c(N);
    for (int m = 1; m <= N; ++m) c(m - 1) = std::polar(1.0 / std::sqrt(double(N)), -k * m);
    return collective_lowering_op(basis, c);
}

StateVector apply(const OperatorMatrix& op, const StateVector& v)
{
    require_same_basis(*op.basis(), *v.basis, "operator application");
    return {v.basis, op.apply(v.amplitudes), false};
}

double raising_leakage_norm2(const StateVector& v, double k)
{
    // On the n-excitation sector sigma_k sigma_k^dag = sigma_k^dag sigma_k + 1 - 2n/N,
    // so the leaked norm follows from sigma_k applied to the top sector alone.
    const auto& b = *v.basis;
    const int top = b.n_max();
    if (top == b.n_atoms()) return 0.0;
    const StateVector upper = sector_component(v, top);
    const double n2 = upper.amplitudes.squaredNorm();
    if (n2 == 0.0) return 0.0;
    const Vec lowered = spin_wave_op(v.basis, k).apply(upper.amplitudes);
    return lowered.squaredNorm() + (1.0 - 2.0 * top / double(b.n_atoms())) * n2;
}

Mat one_body_density(const ExcitationBasis& basis, const Vec& psi)
{
    const int N = basis.n_atoms();
    Mat rho = Mat::Zero(N, N);
    for (int n = 1; n <= basis.n_max(); ++n) {
        const std::size_t begin = basis.sector_offset(n);
        const std::size_t end = begin + basis.sector_size(n);
        for (std::size_t i = begin; i < end; ++i) {
            const cplx a = psi(i);
            if (a == cplx(0.0)) continue;
            const double p = std::norm(a);
            Mask occ = basis.state(i);
            while (occ) {
                const int s = std::countr_zero(occ);
                occ &= occ - 1;
                rho(s, s) += p;
            }
        }
        for_each_hop(basis, n, [&](std::size_t from, std::size_t to, int m, int nn) {
            rho(m - 1, nn - 1) += std::conj(psi(to)) * psi(from);
        });
    }
    return rho;
}

// --------------------------------------------------------------------------

BlockOperator::BlockOperator(BasisPtr basis, std::vector<Mat> blocks)
    : basis_(std::move(basis)), blocks_(std::move(blocks))
{
    if (static_cast<int>(blocks_.size()) != basis_->n_max() + 1) {
        throw std::invalid_argument("one block per excitation sector required");
    }
    for (int n = 0; n <= basis_->n_max(); ++n) {
        const auto len = static_cast<Eigen::Index>(basis_->sector_size(n));
        if (blocks_[n].rows() != len || blocks_[n].cols() != len) {
            throw std::invalid_argument("block dimension does not match sector size");
        }
    }
}

BlockOperator BlockOperator::zeros(const BasisPtr& basis)
{
    std::vector<Mat> blocks;
    for (int n = 0; n <= basis->n_max(); ++n) {
        const auto len = static_cast<Eigen::Index>(basis->sector_size(n));
        blocks.emplace_back(Mat::Zero(len, len));
    }
    return {basis, std::move(blocks)};
}

BlockOperator BlockOperator::from_operator(const OperatorMatrix& op, double tol)
{
    BlockOperator out = zeros(op.basis());
    const auto& b = *op.basis();
    const SpMat s = op.to_sparse();
    for (int col = 0; col < s.outerSize(); ++col) {
        for (SpMat::InnerIterator it(s, col); it; ++it) {
            const int nr = b.excitation(it.row());
            const int nc = b.excitation(it.col());
            if (nr != nc) {
                if (std::abs(it.value()) > tol) {
                    throw std::invalid_argument("operator does not conserve excitation number");
                }
                continue;
            }
            const auto off = b.sector_offset(nr);
            out.blocks_[nr](it.row() - off, it.col() - off) += it.value();
        }
    }
    return out;
}

Vec BlockOperator::apply(const Vec& v) const
{
    if (static_cast<std::size_t>(v.size()) != basis_->size()) throw std::invalid_argument("vector size mismatch");
    Vec out(v.size());
    for (int n = 0; n <= basis_->n_max(); ++n) {
        const auto off = basis_->sector_offset(n);
        const auto len = basis_->sector_size(n);
        out.segment(off, len).noalias() = blocks_[n] * v.segment(off, len);
    }
    return out;
}

Mat BlockOperator::to_dense() const
{
    Mat m = Mat::Zero(basis_->size(), basis_->size());
    for (int n = 0; n <= basis_->n_max(); ++n) {
        const auto off = basis_->sector_offset(n);
        const auto len = basis_->sector_size(n);
        m.block(off, off, len, len) = blocks_[n];
    }
    return m;
}

OperatorMatrix BlockOperator::to_operator() const
{
    return {basis_, to_dense()};
}

BlockOperator BlockOperator::adjoint() const
{
    std::vector<Mat> b;
    for (const auto& m : blocks_) b.emplace_back(m.adjoint());
    return {basis_, std::move(b)};
}

BlockOperator operator+(const BlockOperator& a, const BlockOperator& b)
{
    require_same_basis(*a.basis_, *b.basis_, "block sum");
    std::vector<Mat> out;
    for (std::size_t n = 0; n < a.blocks_.size(); ++n) out.emplace_back(a.blocks_[n] + b.blocks_[n]);
    return {a.basis_, std::move(out)};
}

BlockOperator operator-(const BlockOperator& a, const BlockOperator& b)
{
    return a + cplx(-1.0) * b;
}

BlockOperator operator*(cplx s, const BlockOperator& a)
{
    std::vector<Mat> out;
    for (const auto& m : a.blocks_) out.emplace_back(s * m);
    return {a.basis_, std::move(out)};
}

} // namespace atomarray
