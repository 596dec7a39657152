#pragma once

#include "swmor/common.hpp"
#include "swmor/linalg.hpp"

#include <cstdint>
#include <memory>
#include <utility>

namespace swmor {

struct Pencil {
    SpMat E;
    SpMat A;
    Index n() const { return A.rows(); }
};

bool regularity_check(const Pencil& p, int trials = 3, std::uint64_t seed = 1);

// Limits of the Wong sequences. 𝒱* is kept implicitly as the orthogonal
// complement of span(Phi); 𝒲* has the orthonormal basis What.
struct WongSpaces {
    Mat Phi;   // n x n_N, orthonormal basis of (𝒱*)^⊥
    Mat What;  // n x n_N, orthonormal basis of 𝒲*
    int v_steps = 0;
    int w_steps = 0;
    bool structured = false;  // zero-row/column shortcut for ker E was used
    Index n_J() const { return Phi.rows() - Phi.cols(); }
    Index n_N() const { return What.cols(); }
    Mat Vhat() const;  // dense n x n_J orthonormal basis of 𝒱*
};

WongSpaces wong_sequences(const Pencil& p, double rank_tol = -1.0);

struct QwfOptions {
    double rank_tol = -1.0;          // <= 0 selects n * eps * 64
    std::uint64_t basis_seed = 0;    // nonzero: rotate both bases randomly
};

// Quasi-Weierstrass data for one pencil. T = [Vhat, What], S = [E Vhat, A What]^{-1}.
// Vhat is the trailing block of the Householder factor of Phi; S is a sparse LU
// of the bordered matrix [[E, A What], [Phi^T, 0]]. Copies share the factorizations.
class ModeDecomposition {
public:
    ModeDecomposition() = default;
    ModeDecomposition(const Pencil& p, const QwfOptions& opts = {});

    Index n() const;
    Index n_J() const;
    Index n_N() const;
    int nu() const;
    double rank_tol() const;
    const SpMat& E() const;
    const SpMat& A() const;
    const Mat& What() const;
    const Mat& Phi() const;
    const Mat& N() const;
    const WongSpaces& spaces() const;

    Mat V_apply(const Mat& c) const;    // Vhat * c
    Mat Vt_apply(const Mat& x) const;   // Vhat^T * x
    Mat Vhat() const;                   // dense n x n_J

    Mat Tinv_top(const Mat& x) const;     // [I 0] T^{-1} x
    Mat Tinv_top_T(const Mat& c) const;   // ([I 0] T^{-1})^T c
    Mat Tinv_bottom(const Mat& x) const;  // [0 I] T^{-1} x
    Mat Tinv_bottom_T(const Mat& d) const;  // ([0 I] T^{-1})^T d
    Mat T_apply(const Mat& z) const;      // T z

    // S b split into the differential (top) and nilpotent (bottom) parts.
    std::pair<Mat, Mat> S_solve(const Mat& b) const;
    Mat S_solve_T(const Mat& d1, const Mat& d2) const;  // S^T [d1; d2]

    Mat J_apply(const Mat& c) const;
    Mat Jt_apply(const Mat& c) const;
    LinOp J_op() const;
    Mat J_dense() const;
    // J^{-1} via [I 0] T^{-1} A^{-1} E Vhat; A is invertible iff J is.
    LinOp Jinv_op() const;

    Mat Pi_apply(const Mat& x) const;      // consistency projector
    Mat Pi_T_apply(const Mat& x) const;
    Mat Adiff_apply(const Mat& x) const;   // T diag(J,0) T^{-1}
    Mat Eimp_apply(const Mat& x) const;    // T diag(0,N) T^{-1}

    // Dense forms for n <= kDenseLimit (tests and small systems).
    Mat T_dense() const;
    Mat S_dense() const;
    Mat Pi_dense() const;

    double reconstruction_residual() const;  // ‖SET − diag(I,N)‖_F + ‖SAT − diag(J,I)‖_F

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

// Derived diff/imp matrices for one mode with input and output matrices.
class ProjectorSet {
public:
    ProjectorSet() = default;
    ProjectorSet(ModeDecomposition dec, Mat B, Mat C);

    const ModeDecomposition& dec() const { return dec_; }
    const Mat& B() const { return B_; }
    const Mat& C() const { return C_; }
    const Mat& B_J() const { return BJ_; }  // [I 0] S B
    const Mat& B_N() const { return BN_; }  // [0 I] S B
    const Mat& C_V() const { return CV_; }  // C Vhat = C T [I;0]
    const Mat& C_W() const { return CW_; }  // C What

    Mat Bdiff() const;
    Mat Bimp() const;
    Mat Cimp() const;  // dense p x n, low rank
    Mat Cdiff() const;
    // (E^imp)^i B^imp = What N^i B_N
    Mat imp_series(int i) const;
    // Feedthrough -[C^imp B^imp, C^imp E^imp B^imp, ..., C^imp (E^imp)^{nu-1} B^imp]
    Mat feedthrough() const;

    // Dense n x n forms, n <= kDenseLimit.
    Mat Pi() const { return dec_.Pi_dense(); }
    Mat Adiff() const;
    Mat Eimp() const;

private:
    ModeDecomposition dec_;
    Mat B_, C_, BJ_, BN_, CV_, CW_;
};

std::pair<ModeDecomposition, ProjectorSet> qwf_decompose(const Pencil& p, const Mat& B,
                                                         const Mat& C, const QwfOptions& opts = {});

}  // namespace swmor
