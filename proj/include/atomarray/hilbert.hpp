// hilbert.hpp — Excitation-number-truncated Hilbert space of N two-level atoms
//
// Basis states are occupation masks (bit m-1 set <=> atom m excited) ordered by
// excitation number and then lexicographically by their sorted site lists. Sites
// are 1-based throughout, positions are z_m = m (lengths in units of d).

#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "atomarray/types.hpp"

namespace atomarray {

struct ArrayGeometry {
    int n_atoms = 1;
    double kd = kPi / 2.0; ///< k0 * d
    Eigen::Vector3d dipole = Eigen::Vector3d::UnitZ(); ///< array axis is z

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;
    bool dipole_parallel() const;
};

ArrayGeometry make_geometry(int n_atoms, double kd,
                            const Eigen::Vector3d& dipole = Eigen::Vector3d::UnitZ());

using Mask = std::uint64_t;

inline constexpr Mask site_bit(int site) { return Mask{1} << (site - 1); }
std::vector<int> mask_sites(Mask m);
Mask sites_mask(std::span<const int> sites);

class ExcitationBasis {
public:
    ExcitationBasis(const ArrayGeometry& geometry, int n_max);

    const ArrayGeometry& geometry() const { return geometry_; }
    int n_atoms() const { return geometry_.n_atoms; }
    int n_max() const { return n_max_; }
    std::size_t size() const { return states_.size(); }

    Mask state(std::size_t i) const { return states_[i]; }
    std::vector<int> sites(std::size_t i) const { return mask_sites(states_[i]); }
    int excitation(std::size_t i) const;

    std::size_t sector_offset(int n) const { return offsets_.at(n); }
    std::size_t sector_size(int n) const { return offsets_.at(n + 1) - offsets_.at(n); }

    /// Dense index of a mask, or nullopt when it lies outside the truncated space.
    std::optional<std::size_t> index_of(Mask m) const;
    std::size_t index_of_sites(std::span<const int> sites) const;

    bool same_as(const ExcitationBasis& other) const;

private:
    std::size_t rank_in_sector(Mask m, int n) const;

    ArrayGeometry geometry_;
    int n_max_;
    std::vector<Mask> states_;
    std::vector<std::size_t> offsets_;
    // prefix_[r][j] = sum_{j'=1..j} C(N - j', r)
    std::vector<std::vector<std::size_t>> prefix_;
};

using BasisPtr = std::shared_ptr<const ExcitationBasis>;

BasisPtr build_basis(const ArrayGeometry& geometry, int n_max);

// --------------------------------------------------------------------------
// States

struct StateVector {
    BasisPtr basis;
    Vec amplitudes;
    bool normalized = false;

    StateVector() = default;
    StateVector(BasisPtr b, Vec a, bool is_normalized = false);

    double norm() const { return amplitudes.norm(); }
    /// Divides by the norm; throws on a zero vector.
    StateVector& normalize();
    StateVector normalized_copy() const;
    cplx dot(const StateVector& other) const; ///< <this|other>
};

StateVector ground_state(const BasisPtr& basis);
StateVector basis_state(const BasisPtr& basis, std::span<const int> sites);
/// Projection onto the fixed-excitation sector n (unnormalized, flag cleared).
StateVector sector_component(const StateVector& v, int n);

void require_same_basis(const ExcitationBasis& a, const ExcitationBasis& b, const char* what);

// --------------------------------------------------------------------------
// Operators

/// Operators whose nonzero fraction is above `dense_fraction` are stored dense.
struct StoragePolicy {
    double dense_fraction = 0.05;
};

StoragePolicy& default_storage_policy();

class OperatorMatrix {
public:
    OperatorMatrix(BasisPtr basis, SpMat m);
    OperatorMatrix(BasisPtr basis, Mat m);

    static OperatorMatrix from_triplets(BasisPtr basis,
                                        const std::vector<Eigen::Triplet<cplx>>& triplets,
                                        const StoragePolicy& policy = default_storage_policy());

    const BasisPtr& basis() const { return basis_; }
    std::size_t dim() const { return basis_->size(); }
    bool is_sparse() const { return std::holds_alternative<SpMat>(data_); }
    const SpMat& sparse() const { return std::get<SpMat>(data_); }
    const Mat& dense() const { return std::get<Mat>(data_); }
    Mat to_dense() const;
    SpMat to_sparse() const;

    OperatorMatrix adjoint() const;
    Vec apply(const Vec& v) const;
    cplx coeff(std::size_t row, std::size_t col) const;

    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
    friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
    friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a);

private:
    BasisPtr basis_;
    std::variant<SpMat, Mat> data_;
};

OperatorMatrix identity_op(const BasisPtr& basis);
OperatorMatrix zero_op(const BasisPtr& basis);
OperatorMatrix number_op(const BasisPtr& basis);
/// sigma_site; amplitude +1 on every state containing `site`.
OperatorMatrix lowering_op(const BasisPtr& basis, int site);
OperatorMatrix raising_op(const BasisPtr& basis, int site);
/// sigma_k = N^{-1/2} sum_m e^{-i k z_m} sigma_m. Adjoint gives sigma_k^dagger.
OperatorMatrix spin_wave_op(const BasisPtr& basis, double k);
/// sum_m c_m sigma_m over the working basis.
OperatorMatrix collective_lowering_op(const BasisPtr& basis, const Vec& site_coefficients);

StateVector apply(const OperatorMatrix& op, const StateVector& v);

/// |sigma_k^dagger v|^2 carried by components with n_e > n_max, i.e. the norm
/// that the truncation projects out when sigma_k^dagger acts on v.
double raising_leakage_norm2(const StateVector& v, double k);

/// rho(m, n) = <psi| sigma_m^dagger sigma_n |psi>, N x N (0-based indices).
Mat one_body_density(const ExcitationBasis& basis, const Vec& psi);

/// Calls f(from, to, m, n) for every hop |s> -> sigma_m^dagger sigma_n |s>
/// with n occupied and m empty inside sector `sector`.
template <class F>
void for_each_hop(const ExcitationBasis& basis, int sector, F&& f);

// --------------------------------------------------------------------------
// Excitation-conserving operators stored as one dense block per sector.

class BlockOperator {
public:
    BlockOperator() = default;
    BlockOperator(BasisPtr basis, std::vector<Mat> blocks);
    static BlockOperator zeros(const BasisPtr& basis);
    /// Throws std::invalid_argument when `op` couples different sectors.
    static BlockOperator from_operator(const OperatorMatrix& op, double tol = 1e-14);

    const BasisPtr& basis() const { return basis_; }
    const Mat& block(int n) const { return blocks_.at(n); }
    Mat& block(int n) { return blocks_.at(n); }
    int sectors() const { return static_cast<int>(blocks_.size()); }

    Vec apply(const Vec& v) const;
    Mat to_dense() const;
    OperatorMatrix to_operator() const;
    BlockOperator adjoint() const;

    friend BlockOperator operator+(const BlockOperator& a, const BlockOperator& b);
    friend BlockOperator operator-(const BlockOperator& a, const BlockOperator& b);
    friend BlockOperator operator*(cplx s, const BlockOperator& a);

private:
    BasisPtr basis_;
    std::vector<Mat> blocks_;
};

// --------------------------------------------------------------------------

template <class F>
void for_each_hop(const ExcitationBasis& basis, int sector, F&& f)
{
    if (sector == 0) return;
    const int n_atoms = basis.n_atoms();
    const Mask full = n_atoms == 64 ? ~Mask{0} : (site_bit(n_atoms + 1) - 1);
    const std::size_t begin = basis.sector_offset(sector);
    const std::size_t end = begin + basis.sector_size(sector);
    for (std::size_t i = begin; i < end; ++i) {
        const Mask s = basis.state(i);
        Mask occ = s;
        while (occ) {
            const int n = std::countr_zero(occ) + 1;
            occ &= occ - 1;
            Mask empty = ~s & full;
            while (empty) {
                const int m = std::countr_zero(empty) + 1;
                empty &= empty - 1;
                const Mask t = (s & ~site_bit(n)) | site_bit(m);
                f(i, *basis.index_of(t), m, n);
            }
        }
    }
}

} // namespace atomarray
