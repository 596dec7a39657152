#pragma once

#include "swmor/gle.hpp"
#include "swmor/model.hpp"

#include <string>
#include <vector>

namespace swmor {

// Bilinear reformulation in the coordinates of the reference mode (largest
// differential dimension, lowest index on ties).
struct BilinearData {
    int ref_mode = 0;
    Index n = 0;                 // n_J of the reference mode
    LinOp A;                     // J_ref
    std::optional<LinOp> Ainv;
    std::vector<LinOp> F;        // P_{1,j} J_j P_{j,1} - J_1; F[ref_mode] is zero
    std::vector<Mat> Bj;         // n x m per mode
    std::vector<Mat> Cj;         // p x n per mode
    std::vector<Mat> Bimp;       // n x (m nu_j) per mode, empty unless requested
    std::vector<Mat> Cimp;       // (p (nu_j - 1)) x n per mode, empty unless requested

    int M() const { return static_cast<int>(F.size()); }
    Mat B_all() const;  // [B_1, ..., B_M, Bimp_1, ..., Bimp_M]
    Mat C_all() const;  // [C_1; ...; C_M; Cimp_1; ...; Cimp_M]
};

BilinearData build_bilinear_matrices(const JumpFlowForm& jf, bool include_input_jumps = false,
                                     bool include_output_impulses = false);

// Reachability and observability problems (the latter with transposed operators).
GleProblem reach_problem(const BilinearData& bd);
GleProblem obs_problem(const BilinearData& bd);

struct GramianPair {
    LowRankGramian P, Q;
};

// Scales each problem with delta = beta, solves it and normalizes the factor
// to unit spectral norm. The two solves run concurrently.
GramianPair compute_gramians(const BilinearData& bd, const GleOptions& opts = {});

// Factor in the convention sqrt(scale) * norm_factor * Z.
Mat absolute_factor(const LowRankGramian& g);

struct PerturbationConstants {
    double C = 0.0;           // sum of the delta_i after cluster grouping
    double pinv_norm = 0.0;   // ||Z^+||_2
    double tail_sigma = 0.0;  // estimate of the first neglected singular value of the exact factor
    Vec eig;                  // eigenvalues of Z Z^T, descending
    Vec delta;
};

PerturbationConstants perturbation_constants(const Mat& Z, double tol);

struct RomBundle {
    Index r = 0;
    int ref_mode = 0;
    Mat V, W;            // n_ref x r, W^T V = I
    Mat V_full, W_full;  // lifted to the original coordinates, W_full^T E V_full = I
    Vec hankel;          // all computed values of H = S^T Z (absolute convention)
    // Reduced jump-flow data per mode, in the shared reference coordinates.
    std::vector<Mat> A, B, C, D;
    int M() const { return static_cast<int>(A.size()); }
    // Transition and input-jump maps for a switch l -> k.
    std::vector<std::vector<Mat>> jump, input_jump;
    // Output impulse coefficients of the state for a switch l -> k, indexed [k][l][i].
    std::vector<std::vector<std::vector<Mat>>> imp_state, imp_input;
    std::vector<std::string> warnings;
};

// Square-root balancing with H = S^T Z. r is reduced (with a warning) when it
// exceeds the numerical rank of H. Throws InvalidArgument for r < 1.
RomBundle balance_truncate(const JumpFlowForm& jf, const BilinearData& bd, const GramianPair& g, Index r);

struct BoundReport {
    Index r = 0;
    Index n_tilde = 0;
    double tol = 0.0;
    double tail = 0.0;          // 2 sum_{i>r}^{n_tilde} sigma_i(H)
    double floor = 0.0;         // 2 (n_tilde - r) 6 sqrt(tol)
    double practical = 0.0;     // floor + tail
    double structural = 0.0;    // first-order bound with c_1, c_2 and the certified radii
    double certificate = 0.0;   // max(practical, structural)
    bool structural_larger = false;
    double c1 = 0.0, c2 = 0.0;
    std::string note;
};

BoundReport certified_error_bound(const GramianPair& g, const Vec& hankel, Index r, double tol);

struct LmiReport {
    std::vector<double> lambda_P, lambda_Q;  // largest eigenvalue per mode
    double tol = 0.0;
    bool pass = false;
};

// Removes from the reachability factor every direction in the span of the
// input-jump vectors (the columns of the Bimp blocks). Used to show what a
// reduced model misses when it ignores input-driven state jumps.
LowRankGramian project_out_input_jumps(const LowRankGramian& P, const BilinearData& with_jumps);

// Dense check of (F_j + J_1) P + P (F_j + J_1)^T + B_j B_j^T <= 0 and its dual.
LmiReport check_lmis(const Mat& P_factor, const Mat& Q_factor, const BilinearData& bd, double rel_tol = 1e-8);

}  // namespace swmor
