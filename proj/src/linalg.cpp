// linalg.cpp — zgeev and Hessenberg/inverse-iteration eigen paths

#include "atomarray/linalg.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <lapacke.h>

namespace atomarray {

namespace {

lapack_complex_double* lp(cplx* p)
{
    return reinterpret_cast<lapack_complex_double*>(p);
}

void check(lapack_int info, const char* routine)
{
    if (info < 0) throw std::invalid_argument(fmt::format("{}: illegal argument {}", routine, -info));
    if (info > 0) throw NotConvergedError(fmt::format("{} failed to converge (info = {})", routine, info));
}

} // namespace

EigenDecomposition eig_general(const Mat& a_in)
{
    if (a_in.rows() != a_in.cols()) throw std::invalid_argument("eigenproblem needs a square matrix");
    const lapack_int n = static_cast<lapack_int>(a_in.rows());
    Mat a = a_in;
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    if (n == 0) return out;
    cplx dummy;
    check(LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, lp(a.data()), n, lp(out.values.data()),
                        lp(&dummy), 1, lp(out.vectors.data()), n),
          "zgeev");
    out.vectors.colwise().normalize();
    out.which.resize(n);
    for (lapack_int j = 0; j < n; ++j) out.which[j] = j;
    return out;
}

EigenDecomposition eig_selected(Mat a, const std::function<std::vector<int>(const Vec&)>& select)
{
    if (a.rows() != a.cols()) throw std::invalid_argument("eigenproblem needs a square matrix");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    EigenDecomposition out;
    out.values.resize(n);
    if (n == 0) return out;

    Vec tau(std::max<lapack_int>(n - 1, 1));
    check(LAPACKE_zgehrd(LAPACK_COL_MAJOR, n, 1, n, lp(a.data()), n, lp(tau.data())), "zgehrd");

    // a keeps the reflectors below the subdiagonal; h is the clean Hessenberg factor
    Mat h = a;
    for (lapack_int j = 0; j < n; ++j)
        for (lapack_int i = j + 2; i < n; ++i) h(i, j) = 0.0;
    {
        Mat t = h;
        cplx dummy;
        check(LAPACKE_zhseqr(LAPACK_COL_MAJOR, 'E', 'N', n, 1, n, lp(t.data()), n,
                             lp(out.values.data()), lp(&dummy), 1),
              "zhseqr");
    }

    out.which = select(out.values);
    const lapack_int m = static_cast<lapack_int>(out.which.size());
    if (m == 0) return out;
    std::vector<lapack_logical> sel(n, 0);
    for (int j : out.which) {
        if (j < 0 || j >= n) throw std::invalid_argument("selected eigenvalue index out of range");
        sel[j] = 1;
    }
    // zhsein returns columns in eigenvalue order
    std::sort(out.which.begin(), out.which.end());
    out.which.erase(std::unique(out.which.begin(), out.which.end()), out.which.end());

    Vec w = out.values;
    Mat vr(n, out.which.size());
    lapack_int used = 0;
    std::vector<lapack_int> ifaill(out.which.size()), ifailr(out.which.size());
    cplx dummy;
    const lapack_int info = LAPACKE_zhsein(LAPACK_COL_MAJOR, 'R', 'Q', 'N', sel.data(), n, lp(h.data()), n,
                                           lp(w.data()), lp(&dummy), 1, lp(vr.data()), n,
                                           static_cast<lapack_int>(out.which.size()), &used, ifaill.data(),
                                           ifailr.data());
    check(info, "zhsein");
    check(LAPACKE_zunmhr(LAPACK_COL_MAJOR, 'L', 'N', n, used, 1, n, lp(a.data()), n, lp(tau.data()),
                         lp(vr.data()), n),
          "zunmhr");
    vr.colwise().normalize();
    out.vectors = std::move(vr);
    return out;
}

} // namespace atomarray
