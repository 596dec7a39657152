#pragma once

#include "swmor/common.hpp"
#include "swmor/gle.hpp"
#include "swmor/model.hpp"
#include "swmor/simulator.hpp"

#include <vector>

namespace swmor {

// Reference solvers for small instances. They form dense n^2 x n^2 or n x n
// systems and are meant for tests and acceptance checks only.

// (L + Pi) vec(X) = -vec(B B^T), symmetrized. n <= 60.
Mat gle_kron_oracle(const Mat& a, const std::vector<Mat>& f, const Mat& b);
Mat gle_kron_oracle(const GleProblem& p);

// A X + X A^T + B B^T = 0 by Bartels-Stewart. Throws UnstableA.
Mat dense_lyapunov_oracle(const Mat& a, const Mat& b);

// Exact ||L^{-1} Pi||_2 from the Kronecker matrices. n <= 30.
double kron_contraction(const Mat& a, const std::vector<Mat>& f);

struct ReachObsSets {
    Mat R;  // orthonormal basis of the reachable set, n x dim
    Mat O;  // orthonormal basis of the observable set, n x dim
};

// Reachable and observable sets of the projected switched system for a fixed
// signal, by the subspace recursions with matrix exponentials over each dwell
// interval. With use_projectors = false every consistency projector is
// replaced by the identity. n <= 60.
ReachObsSets reachable_observable_sets(const JumpFlowForm& jf, const SwitchingSignal& signal,
                                       bool use_projectors, double rank_tol = 1e-10);

// Smallest A-invariant subspace containing im(B): orthonormal basis.
Mat invariant_closure(const Mat& a, const Mat& b, double rank_tol);
// Largest A-invariant subspace inside ker(C): orthonormal basis.
Mat unobservable_subspace(const Mat& a, const Mat& c, double rank_tol);

// Dense quasi-Weierstrass data of one pencil from Wong sequences computed
// with plain SVD-based subspace operations.
struct DenseQwf {
    Mat T, S;    // S E T = diag(I, N), S A T = diag(J, I)
    Index n_J = 0;
    int nu = 0;
    Mat J, N;
};
DenseQwf dense_qwf(const Mat& E, const Mat& A, double rank_tol = 1e-10);

// The switched system simulated in original coordinates: the state is the
// differential component x_diff, jumps apply the consistency projector to
// x_diff + x_imp, and the output is C (x_diff + x_imp). n <= 60.
SwitchedOde dense_qwf_ode(const SwitchedSystem& sys, double rank_tol = 1e-10);

}  // namespace swmor
