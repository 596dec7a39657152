#pragma once

#include "swmor/common.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace swmor {

// Matrix-free linear operator acting on column blocks.
struct LinOp {
    Index rows = 0;
    Index cols = 0;
    std::function<Mat(const Mat&)> apply;
    std::function<Mat(const Mat&)> applyT;

    static LinOp dense(Mat m);
    static LinOp zero(Index rows, Index cols);
    LinOp transposed() const { return LinOp{cols, rows, applyT, apply}; }
    Mat materialize() const;
    Mat operator*(const Mat& x) const { return apply(x); }
};

struct RankResult {
    Mat basis;              // orthonormal columns
    Vec singular_values;    // all singular values, descending
    double threshold = 0;   // absolute cut used
    bool ambiguous = false; // some singular value within a factor 10 of the cut
};

// Orthonormal basis of the column space, cut at rel_tol * sigma_max.
RankResult range_basis(const Mat& m, double rel_tol);
// Orthonormal basis of the null space, cut at rel_tol * sigma_max.
RankResult null_basis(const Mat& m, double rel_tol);

Mat orth(const Mat& m, double rel_tol = 1e-12);

// Largest sine of the principal angles between two subspaces given by
// orthonormal bases. Returns 1 when dimensions differ and one side is nonempty.
double subspace_distance(const Mat& u, const Mat& v);

// Solve T X + X W^T = C for quasi-upper-triangular T, W (real Schur factors).
Mat solve_quasi_triangular_sylvester(const Mat& t, const Mat& w, const Mat& c);

// Dense Bartels-Stewart solve of A X + X A^T + Q = 0.
Mat solve_lyapunov_dense(const Mat& a, const Mat& q);

// Largest eigenvalue of a symmetric positive semidefinite operator by Lanczos
// with full reorthogonalization.
double lanczos_max_eig(const std::function<Vec(const Vec&)>& op, Index n, double rel_tol,
                       Index max_steps, std::uint64_t seed);

double norm2(const Mat& m);
double sigma_min(const Mat& m);

// Orthonormalize the columns of `block` against `basis` (already orthonormal)
// and among themselves with two passes of modified Gram-Schmidt. Columns whose
// norm drops below drop_tol times their original norm are discarded.
Mat orthonormalize_against(const Mat& basis, const Mat& block, double drop_tol);

}  // namespace swmor
