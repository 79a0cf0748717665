// observables.cpp — P_k, G(k1,k2), fidelity scans, the sigma_k bound and spin spectra

#include "atomarray/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "atomarray/linalg.hpp"

namespace atomarray {

double MomentumGrid::spacing() const
{
    return k.size() > 1 ? (k.back() - k.front()) / double(k.size() - 1) : 0.0;
}

void MomentumGrid::validate() const
{
    if (k.empty()) throw std::invalid_argument("momentum grid is empty");
    if (light_cone.size() != k.size()) throw std::invalid_argument("light-cone flags must match grid");
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (k[i] < -kPi - 1e-12 || k[i] > kPi + 1e-12) {
            throw std::invalid_argument("grid point outside the Brillouin zone");
        }
        if (i > 0 && !(k[i] > k[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
    }
}

MomentumGrid make_grid(int n, double lo, double hi, double kd)
{
    if (n < 1) throw std::invalid_argument("grid needs at least one point");
    if (n > 1 && !(hi > lo)) throw std::invalid_argument("grid bounds must be increasing");
    MomentumGrid g;
    for (int i = 0; i < n; ++i) {
        const double k = n == 1 ? lo : lo + (hi - lo) * i / double(n - 1);
        g.k.push_back(k);
        g.light_cone.push_back(std::abs(k) <= kd);
    }
    g.validate();
    return g;
}

MomentumGrid default_pk_grid(double kd)
{
    return make_grid(201, -kPi, kPi, kd);
}

MomentumGrid default_g2_grid(double kd)
{
    return make_grid(41, 0.0, 0.2 * kPi, kd);
}

RVec pk_from_density(const Mat& rho1, const MomentumGrid& grid)
{
    const int N = static_cast<int>(rho1.rows());
    // sum_mn e^{ik(m-n)} rho(m, n) = conj(p)^T rho^T p with p_m = e^{ikm}
    RVec out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Vec phase(N);
        for (int m = 0; m < N; ++m) phase(m) = std::exp(kI * grid.k[i] * double(m + 1));
        out(i) = (phase.adjoint() * rho1.transpose() * phase)(0).real() / N;
    }
    return out;
}

Observable density_observable(const BasisPtr& basis)
{
    const int N = basis->n_atoms();
    return {"rho1", N * N, [basis, N](const Vec& psi, cplx* out) {
                const Mat r = one_body_density(*basis, psi);
                std::copy(r.data(), r.data() + N * N, out);
            }};
}

Observable excitation_observable(const BasisPtr& basis)
{
    return {"n_exc", 1, [basis](const Vec& psi, cplx* out) {
                double s = 0.0;
                for (int n = 1; n <= basis->n_max(); ++n)
                    s += n * psi.segment(basis->sector_offset(n), basis->sector_size(n)).squaredNorm();
                out[0] = s;
            }};
}

PkResult pk_distribution(const Ensemble& ens, const SamplerSet& samplers, const MomentumGrid& grid, int n_atoms,
                         double n_initial, int n_boot, std::uint64_t seed)
{
    if (ens.records.empty()) throw std::invalid_argument("empty ensemble");
    if (!(n_initial > 0.0)) throw std::invalid_argument("initial excitation must be positive");
    const int off = samplers.offset("rho1");
    const int off_n = samplers.offset("n_exc");

    std::vector<Vec> per_traj;
    double residual = 0.0;
    for (const auto& r : ens.records) {
        const Mat rho = Eigen::Map<const Mat>(r.integral.data() + off, n_atoms, n_atoms);
        per_traj.emplace_back(pk_from_density(rho, grid).cast<cplx>());
        residual += r.final_sample(off_n).real();
    }
    residual /= double(ens.records.size());

    Vec mean = Vec::Zero(grid.size());
    for (const auto& v : per_traj) mean += v;
    mean /= double(per_traj.size());

    PkResult out;
    out.grid = grid;
    out.residual_excitation = residual;
    out.emitted_fraction = (n_initial - residual) / n_initial;
    out.tail_converged = residual < 1e-4;
    double area = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.light_cone[i]) area += mean(i).real() * grid.spacing();
    const double scale = area > 0.0 ? out.emitted_fraction / area : 0.0;
    out.pk = scale * mean.real();

    out.se = RVec::Zero(grid.size());
    const auto boots = bootstrap_means(per_traj, n_boot, seed);
    for (const auto& b : boots) out.se += (b - mean).cwiseAbs2();
    out.se = scale * (out.se / std::max(1, n_boot - 1)).cwiseSqrt();
    return out;
}

// --------------------------------------------------------------------------

RMat CorrelationMap::log10() const
{
    return values.unaryExpr([](double v) { return std::log10(std::max(v, 1e-300)); });
}

namespace {

Mat plane_wave_rows(const MomentumGrid& g, int N)
{
    Mat a(g.size(), N);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (int x = 0; x < N; ++x) a(i, x) = std::exp(-kI * g.k[i] * double(x + 1)) / std::sqrt(double(N));
    return a;
}

} // namespace

void g2_values(const ExcitationBasis& basis, const Vec& psi, const MomentumGrid& k1, const MomentumGrid& k2,
               double* out)
{
    const int N = basis.n_atoms();
    const Mat a1 = plane_wave_rows(k1, N);
    const Mat a2 = plane_wave_rows(k2, N);
    RMat g = RMat::Zero(k1.size(), k2.size());
    for (int n = 2; n <= basis.n_max(); ++n) {
        std::unordered_map<std::size_t, Mat> t;
        const auto off = basis.sector_offset(n);
        for (std::size_t i = off; i < off + basis.sector_size(n); ++i) {
            const cplx amp = psi(i);
            if (amp == cplx(0.0)) continue;
            const Mask s = basis.state(i);
            const auto sites = mask_sites(s);
            for (std::size_t p = 0; p < sites.size(); ++p) {
                for (std::size_t q = p + 1; q < sites.size(); ++q) {
                    const Mask c = s & ~site_bit(sites[p]) & ~site_bit(sites[q]);
                    const std::size_t target = *basis.index_of(c);
                    auto it = t.find(target);
                    if (it == t.end()) it = t.emplace(target, Mat::Zero(N, N)).first;
                    it->second(sites[p] - 1, sites[q] - 1) += amp;
                    it->second(sites[q] - 1, sites[p] - 1) += amp;
                }
            }
        }
        for (const auto& [target, m] : t) {
            (void)target;
            const Mat amp = a1 * m * a2.transpose();
            g += amp.cwiseAbs2();
        }
    }
    g *= double(N) * N;
    std::copy(g.data(), g.data() + g.size(), out);
}

CorrelationMap g2_map(const StateVector& psi, const MomentumGrid& k1, const MomentumGrid& k2)
{
    CorrelationMap m{k1, k2, RMat(k1.size(), k2.size())};
    g2_values(*psi.basis, psi.amplitudes, k1, k2, m.values.data());
    return m;
}

CorrelationMap g2_map(const Vec& mean_channels, int offset, const MomentumGrid& k1, const MomentumGrid& k2)
{
    CorrelationMap m{k1, k2, RMat(k1.size(), k2.size())};
    for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] = mean_channels(offset + i).real();
    return m;
}

Observable g2_observable(const BasisPtr& basis, const MomentumGrid& k1, const MomentumGrid& k2)
{
    const int width = static_cast<int>(k1.size() * k2.size());
    return {"g2", width, [basis, k1, k2, width](const Vec& psi, cplx* out) {
                std::vector<double> v(width);
                g2_values(*basis, psi, k1, k2, v.data());
                for (int i = 0; i < width; ++i) out[i] = v[i];
            }};
}

// --------------------------------------------------------------------------

double fidelity(const StateVector& a, const StateVector& b)
{
    require_same_basis(*a.basis, *b.basis, "fidelity");
    const double na = a.amplitudes.squaredNorm(), nb = b.amplitudes.squaredNorm();
    if (!(na > 0.0) || !(nb > 0.0)) throw UndefinedFidelityError("fidelity of a zero vector is undefined");
    return std::min(1.0, std::norm(a.amplitudes.dot(b.amplitudes)) / (na * nb));
}

double sector_fidelity(const StateVector& a, const StateVector& b, int n)
{
    return fidelity(sector_component(a, n), sector_component(b, n));
}

FidelityScan fidelity_scan(const BasisPtr& basis, int n_e, double beta, int top_m, int xi_max)
{
    if (n_e < 1 || n_e > basis->n_max()) throw std::invalid_argument("scan sector outside the basis");
    const int N = basis->n_atoms();
    const Mat h = sector_h_eff(*basis, n_e, beta);
    const int dim = static_cast<int>(h.rows());

    auto order_of = [](const Vec& w) {
        std::vector<int> idx(w.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            const double da = decay_rate(w(a)), db = decay_rate(w(b));
            if (da != db) return da < db;
            return w(a).real() < w(b).real();
        });
        return idx;
    };
    auto pick = [&](const std::vector<int>& order) {
        std::vector<int> sel;
        if (top_m <= 0 || 2 * top_m >= dim) return order;
        for (int i = 0; i < top_m; ++i) sel.push_back(order[i]);
        for (int i = dim - top_m; i < dim; ++i) sel.push_back(order[i]);
        return sel;
    };

    EigenDecomposition eig;
    if (dim <= 1500 || top_m <= 0 || 2 * top_m >= dim) {
        eig = eig_general(h);
    } else {
        eig = eig_selected(h, [&](const Vec& w) { return pick(order_of(w)); });
    }
    const std::vector<int> order = order_of(eig.values);
    std::vector<int> rank_of(dim);
    for (int r = 0; r < dim; ++r) rank_of[order[r]] = r;

    FidelityScan out;
    out.n_e = n_e;
    out.eigenvalues.resize(dim);
    for (int r = 0; r < dim; ++r) out.eigenvalues(r) = eig.values(order[r]);

    // candidate Slater states restricted to the sector
    std::vector<FermionString> strings;
    for (EdgeTag tag : {EdgeTag::zero, EdgeTag::pi}) {
        auto s = enumerate_strings(n_e, std::min(N, xi_max), tag);
        strings.insert(strings.end(), s.begin(), s.end());
    }
    const auto off = basis->sector_offset(n_e);
    Mat cand(dim, strings.size());
    for (std::size_t j = 0; j < strings.size(); ++j) {
        cand.col(j) = slater_amplitudes(*basis, mode_matrix(N, strings[j].indices, strings[j].tag)).segment(off, dim);
    }

    const std::vector<int> scanned = pick(order);
    std::vector<int> col_of(dim, -1);
    for (std::size_t c = 0; c < eig.which.size(); ++c) col_of[eig.which[c]] = int(c);

    Mat vecs(dim, scanned.size());
    for (std::size_t j = 0; j < scanned.size(); ++j) {
        const int c = col_of[scanned[j]];
        if (c < 0) throw NumericalInconsistencyError("missing eigenvector for a scanned state");
        vecs.col(j) = eig.vectors.col(c);
    }
    const RMat fid = (cand.adjoint() * vecs).cwiseAbs2();
    for (std::size_t j = 0; j < scanned.size(); ++j) {
        Eigen::Index best;
        const double f = fid.col(j).maxCoeff(&best);
        ScanEntry e;
        e.rank = rank_of[scanned[j]];
        e.eigenvalue = eig.values(scanned[j]);
        e.decay = decay_rate(e.eigenvalue);
        e.best = strings[best];
        e.fidelity = std::min(f, 1.0);
        out.entries.push_back(e);
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const ScanEntry& a, const ScanEntry& b) { return a.rank < b.rank; });
    return out;
}

// --------------------------------------------------------------------------

BoundSample sigma_k_norm_bound(const FermionString& s, double k, int N, double kd)
{
    s.validate(N);
    const double k_ex = edge_momentum(s.tag);
    const auto q = q_grid(N);
    auto wrap = [](double x) { return std::remainder(x, 2.0 * kPi); };
    for (int xi : s.indices) {
        for (double sign : {1.0, -1.0}) {
            if (std::abs(wrap(k - k_ex - sign * q[xi - 1])) < 1e-8) {
                throw SingularInputError(fmt::format("k = {} sits on the pole at q_{}", k, xi));
            }
        }
    }
    auto h = [&](double q1, double q2) {
        return 1.0 / std::tan((k - k_ex - q1) / 2.0) - 1.0 / std::tan((k - k_ex - q2) / 2.0);
    };
    const int n_e = s.size();
    double rhs = 0.0;
    for (int a = 0; a < n_e; ++a) {
        const double qa = q[s.indices[a] - 1];
        rhs += std::abs(h(-qa, qa)) / N;
    }
    for (int a = 0; a < n_e; ++a) {
        for (int b = a + 1; b < n_e; ++b) {
            const double qa = q[s.indices[a] - 1], qb = q[s.indices[b] - 1];
            for (double e1 : {1.0, -1.0})
                for (double e2 : {1.0, -1.0}) rhs += 2.0 * std::sqrt(double(n_e)) / N * std::abs(h(e1 * qa, e2 * qb));
        }
    }
    const BasisPtr basis = build_basis(make_geometry(N, kd), n_e);
    const StateVector f = fermion_state(basis, s);
    const double lhs = spin_wave_op(basis, k).apply(f.amplitudes).norm();
    return {lhs, rhs};
}

Mat delta_h_elements(const EffectiveHamiltonian& h, const BandEdge& edge, const std::vector<FermionString>& strings)
{
    const OperatorMatrix h1 = toy_h1(h.basis, edge);
    std::vector<Vec> f;
    for (const auto& s : strings) f.push_back(fermion_state(h.basis, s).amplitudes);
    Mat out(strings.size(), strings.size());
    for (std::size_t j = 0; j < strings.size(); ++j) {
        const Vec v = h.apply(f[j]) - h1.apply(f[j]);
        for (std::size_t i = 0; i < strings.size(); ++i) out(i, j) = f[i].dot(v);
    }
    return out;
}

RVec occupation_spectrum(const FermionString& s, int N, const MomentumGrid& grid)
{
    const BasisPtr basis = build_basis(make_geometry(N, kPi / 2.0), s.size());
    const StateVector f = fermion_state(basis, s);
    return pk_from_density(one_body_density(*basis, f.amplitudes), grid);
}

SpinSpectrum collective_spin_spectrum(int N, int n_e)
{
    if (n_e < 0 || n_e > N) throw std::invalid_argument("n_e outside 0..N");
    SpinSpectrum out;
    out.analytic.resize(n_e + 1);
    for (int x = 0; x <= n_e; ++x) out.analytic(x) = 4.0 / N * x * (N - 2.0 * n_e + x + 1.0);
    if (n_e == 0) {
        out.numeric = RVec::Zero(1);
        out.analytic = RVec::Zero(1);
        return out;
    }
    const BasisPtr basis = build_basis(make_geometry(N, kPi / 2.0), n_e);
    const OperatorMatrix s = spin_wave_op(basis, 0.0);
    const Mat full = (s.adjoint() * s).to_dense();
    const auto off = basis->sector_offset(n_e);
    const auto len = basis->sector_size(n_e);
    Eigen::SelfAdjointEigenSolver<Mat> es(full.block(off, off, len, len), Eigen::EigenvaluesOnly);
    std::vector<double> distinct;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double v = es.eigenvalues()(i);
        if (distinct.empty() || std::abs(v - distinct.back()) > 1e-8 * std::max(1.0, std::abs(v))) {
            distinct.push_back(v);
        }
    }
    out.numeric = Eigen::Map<RVec>(distinct.data(), distinct.size());
    if (out.numeric.size() != out.analytic.size()) {
        out.prefactor = std::nan("");
        out.residual = 1.0;
        return out;
    }
    out.prefactor = out.numeric.dot(out.analytic) / out.analytic.squaredNorm();
    out.residual = (out.numeric - out.prefactor * out.analytic).norm() / out.numeric.norm();
    return out;
}

double rbeta(const BandEdge& edge, int N, double beta)
{
    const double g = edge.gamma_ex();
    if (!(g > 0.0)) throw std::invalid_argument("r_beta needs a radiating band edge (gamma_ex > 0)");
    if (!(beta > 0.0) || N < 1) throw std::invalid_argument("r_beta needs beta > 0 and N >= 1");
    return edge.a2.real() / (double(N) * N) / (beta * g);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs matching samples");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace atomarray
