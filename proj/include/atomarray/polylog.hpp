// polylog.hpp — Polylogarithms Li_s(z) of integer order 0..3 on the closed unit disk

#pragma once

#include "atomarray/types.hpp"

namespace atomarray {

/// Li_s(z) for s in {0,1,2,3} and |z| <= 1.
///
/// Li_2 and Li_3 use the power series for |z| < 1/2 and the expansion in
/// mu = ln z otherwise, so values next to z = 1 cost as much as anywhere else.
/// Throws SingularInputError for s in {0,1} at z = 1.
cplx polylog(int s, cplx z);

/// Riemann zeta at even argument 2j (j >= 1).
double zeta_even(int j);

inline constexpr double kZeta3 = 1.2020569031595942853997;

} // namespace atomarray
