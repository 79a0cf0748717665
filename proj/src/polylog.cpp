// polylog.cpp — Series and logarithmic expansions for Li_0..Li_3

#include "atomarray/polylog.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>

namespace atomarray {

namespace {

constexpr int kMaxTerms = 120;
constexpr double kTol = 1e-17;

std::array<double, kMaxTerms + 1> make_zeta_table()
{
    std::array<double, kMaxTerms + 1> t{};
    t[1] = kPi * kPi / 6.0;
    t[2] = std::pow(kPi, 4) / 90.0;
    for (int j = 3; j <= kMaxTerms; ++j) {
        // terms fall off like n^{-6} or faster; partial sum is exact to rounding by n = 2000
        double s = 0.0;
        for (int n = 2000; n >= 1; --n) s += std::pow(double(n), -2.0 * j);
        t[j] = s;
    }
    return t;
}

const std::array<double, kMaxTerms + 1>& zeta_table()
{
    static const auto table = make_zeta_table();
    return table;
}

cplx power_series(int s, cplx z)
{
    cplx sum = 0.0;
    cplx zk = z;
    const double r = std::abs(z);
    for (int k = 1; k < 10000; ++k) {
        const cplx term = zk / std::pow(double(k), s);
        sum += term;
        // remaining tail is bounded by |z|^{k+1} / (1 - |z|)
        if (std::abs(zk) * r / (1.0 - r) <= kTol * std::abs(sum)) break;
        zk *= z;
        if (zk == cplx(0.0)) break;
    }
    return sum;
}

// Li_s(e^mu) = sum_k zeta(s-k) mu^k / k! with the k = s-1 term carrying ln(-mu).
// The odd negative zeta values are folded into c_j = 2 zeta(2j) / (2 pi)^{2j}.
cplx log_series(int s, cplx mu)
{
    const cplx lg = std::log(-mu);
    const double z2 = kPi * kPi / 6.0;
    cplx sum;
    if (s == 2) {
        sum = z2 + mu * (1.0 - lg) - mu * mu / 4.0;
    } else {
        sum = kZeta3 + z2 * mu + 0.5 * mu * mu * (1.5 - lg) - mu * mu * mu / 12.0;
    }
    const cplx mu2 = mu * mu;
    const double inv2pi2 = 1.0 / (4.0 * kPi * kPi);
    cplx p = (s == 2) ? mu : mu2; // mu^{2j+1} or mu^{2j+2} before the j loop
    double scale = 1.0;
    for (int j = 1; j <= kMaxTerms; ++j) {
        p *= mu2;
        scale *= inv2pi2;
        const double c = 2.0 * zeta_table()[j] * scale;
        double denom = 2.0 * j * (2.0 * j + 1.0);
        if (s == 3) denom *= 2.0 * j + 2.0;
        const cplx term = (j % 2 ? -1.0 : 1.0) * c * p / denom;
        sum += term;
        if (std::abs(term) <= kTol * std::abs(sum)) break;
    }
    return sum;
}

} // namespace

double zeta_even(int j)
{
    if (j < 1 || j > kMaxTerms) throw std::invalid_argument("zeta_even index out of range");
    return zeta_table()[j];
}

cplx polylog(int s, cplx z)
{
    if (s < 0 || s > 3) throw std::invalid_argument(fmt::format("polylog order {} not in 0..3", s));
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw std::invalid_argument("polylog argument must be finite");
    }
    const double r = std::abs(z);
    if (r > 1.0 + 1e-12) throw std::invalid_argument("polylog argument outside the unit disk");
    const bool at_one = std::abs(z - 1.0) < 1e-15;

    switch (s) {
    case 0:
        if (at_one) throw SingularInputError("Li_0 has a pole at z = 1");
        return z / (1.0 - z);
    case 1:
        if (at_one) throw SingularInputError("Li_1 has a logarithmic branch point at z = 1");
        return -std::log(1.0 - z);
    default:
        break;
    }
    if (at_one) return s == 2 ? kPi * kPi / 6.0 : kZeta3;
    if (r < 0.5) return power_series(s, z);
    cplx mu = std::log(z);
    if (mu.real() > 0.0) mu.real(0.0); // |z| marginally above 1 from rounding
    return log_series(s, mu);
}

} // namespace atomarray
