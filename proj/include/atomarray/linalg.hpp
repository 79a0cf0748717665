// linalg.hpp — Dense complex eigensolvers (LAPACK backed)

#pragma once

#include <functional>
#include <vector>

#include "atomarray/types.hpp"

namespace atomarray {

struct EigenDecomposition {
    Vec values;
    Mat vectors;             ///< unit 2-norm right eigenvectors, one per column
    std::vector<int> which;  ///< column j belongs to values(which[j])
};

/// All eigenvalues and right eigenvectors of a general complex matrix.
EigenDecomposition eig_general(const Mat& a);

/// All eigenvalues, plus right eigenvectors only for the indices returned by
/// `select` (called with the full eigenvalue list). Reduces once to Hessenberg
/// form so large sectors avoid the cost of a full eigenvector computation.
EigenDecomposition eig_selected(Mat a, const std::function<std::vector<int>(const Vec&)>& select);

} // namespace atomarray
