#pragma once

#include "swmor/common.hpp"
#include "swmor/linalg.hpp"

#include <optional>
#include <span>
#include <vector>

namespace swmor {

// A X + X A^T + sum_j F_j X F_j^T + B B^T = 0, with B = [B_1, ..., B_M].
struct GleProblem {
    LinOp A;
    std::vector<LinOp> F;
    Mat B;
    std::optional<LinOp> Ainv;  // needed for sigma_min when n > kDenseLimit

    double sigma_min_A = -1.0;
    double beta = -1.0;          // sum_j sigma_1(F_j)^2 / (2 sigma_min(A))
    double scale = 1.0;          // F and B were divided by sqrt(scale)
    double contraction = -1.0;   // upper bound on ||L^{-1} Pi||_2 for the current F
    bool scaled = false;

    Index n() const { return A.rows; }
    bool has_coupling() const;   // some F_j is nonzero
    double gamma() const;        // contraction / (1 - contraction), inf if >= 1
};

// Fills sigma_min_A, beta and contraction.
void compute_constants(GleProblem& p);

// F_j and B divided by sqrt(beta + delta). Throws NonPositiveDelta for delta <= 0.
GleProblem scale_problem(const GleProblem& p, double delta);

struct LyapOptions {
    double tol_res = 1e-10;   // target for the Frobenius residual of the truncated factor
    Index max_dim = 0;        // 0: n
    double trunc_tol = 0.0;   // drop eigenvalues of Y below this when the budget allows
    int stall_limit = 10;
};

struct LyapResult {
    Mat Z;                 // n x r
    double res_fro = 0.0;  // residual of Z Z^T (exact up to deflation terms)
    Index basis_dim = 0;
    int steps = 0;
    double dropped_eig = 0.0;  // largest discarded eigenvalue of Y
};

// Galerkin projection onto the block Krylov space K_l(A, B).
LyapResult solve_lyapunov_galerkin(const LinOp& a, const Mat& b, const LyapOptions& opts);
// Dense Schur solve of A X + X A^T + B B^T = 0, factored through its eigendecomposition.
LyapResult solve_lyapunov_dense_factor(const Mat& a, const Mat& b);

double lyap_error_bound(double res_fro, double sigma_min_A);

struct OuterRecord {
    Index rank = 0;
    Index basis_dim = 0;
    double z_fro = 0.0;
    double diff_fro = 0.0;  // ||Z_k Q - Z_{k-1}||_F after padding and Procrustes alignment
    double gram_diff_fro = -1.0;  // ||Z_k Z_k^T - Z_{k-1} Z_{k-1}^T||_F, negative when not computed
    double res_fro = 0.0;
    double bound = 0.0;     // err radius available after this iteration
};

// gamma d_k + ((1+gamma) R_k + gamma R_{k-1}) / (2 sigma_min), where d_k bounds
// ||X_k - X_{k-1}||_F: the smaller of (||Z_k|| + ||Z_{k-1}||) ||Z_k - Z_{k-1}||
// and the exact Gramian difference when it is recorded.
double outer_step_change(const OuterRecord& k, const OuterRecord& km1);
double gle_error_bound(std::span<const OuterRecord> run, double sigma_min_A, double gamma);

struct GleOptions {
    double tol = 1e-8;
    int max_outer = 200;
    Index max_dim = 0;
    bool dense_inner = false;     // exact dense inner solves (n <= kDenseLimit)
    bool keep_history = false;
    double trunc_tol = -1.0;      // <= 0 selects tol
};

struct LowRankGramian {
    Mat Z;
    double err_radius = 0.0;
    int iterations = 0;
    std::vector<double> inner_residuals;
    std::vector<OuterRecord> telemetry;
    std::vector<Mat> history;     // Z_k per outer iteration when requested
    double scale = 1.0;           // F_j and B were divided by sqrt(scale)
    double norm_factor = 1.0;     // Z was divided by this after normalization
    bool normalized = false;
};

LowRankGramian stationary_solve_gle(const GleProblem& p, const GleOptions& opts = {});

// ||Z_a Z_a^T - Z_b Z_b^T||_F through a thin QR of [Z_a, Z_b].
double gram_difference(const Mat& a, const Mat& b);

// Padded Procrustes distance min_Q ||[A 0] Q - [B 0]||_F over orthogonal Q.
double aligned_factor_distance(const Mat& a, const Mat& b);

}  // namespace swmor
