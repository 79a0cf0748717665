// types.hpp — Scalar/matrix aliases and the error hierarchy shared by all modules

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace atomarray {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// Invalid arguments are reported with std::invalid_argument. The classes below
// cover numerical failure modes that callers (the CLI in particular) map onto
// distinct exit statuses.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation at a pole or branch point of a closed-form expression.
class SingularInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Two independent evaluation routes disagree beyond tolerance.
class NumericalInconsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Model data violates a physical requirement (e.g. negative decay rate).
class ModelInconsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PrecisionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Time step too coarse for the first-order jump sampling.
class StepTooLargeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotConvergedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UndefinedFidelityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace atomarray
