#pragma once

#include "swmor/common.hpp"
#include "swmor/wong_qwf.hpp"

#include <functional>
#include <vector>

namespace swmor {

struct SystemMode {
    SpMat E;
    SpMat A;
    Mat B;
    Mat C;
};

struct SwitchedSystem {
    std::vector<SystemMode> modes;

    Index n() const { return modes.empty() ? 0 : modes.front().A.rows(); }
    Index m() const { return modes.empty() ? 0 : modes.front().B.cols(); }
    Index p() const { return modes.empty() ? 0 : modes.front().C.rows(); }
    int M() const { return static_cast<int>(modes.size()); }
    void check() const;  // throws DimensionMismatch
};

struct SwitchEvent {
    double t = 0.0;
    int mode = 0;  // zero-based
};

// Right-continuous piecewise-constant switching signal; the first event is at t0.
struct SwitchingSignal {
    double t0 = 0.0;
    double tFinal = 1.0;
    std::vector<SwitchEvent> events;

    int mode_at(double t) const;
    void check(int M) const;  // throws InvalidArgument
    // Evenly spaced switches cycling through modes 0..M-1.
    static SwitchingSignal periodic(double t0, double tFinal, double dwell, int M);
};

// Runs a callable for i = 0..count-1, on up to SWMOR_THREADS threads.
// Results must be written to per-index slots so output is order-independent.
void parallel_for(int count, const std::function<void(int)>& fn);
int thread_cap();

// Switched ODE with jumps in per-mode differential coordinates z_q = [I 0] T_q^{-1} x.
// Input-derivative stacks U = [u; u'; ...; u^{(nu_max-1)}] have m * nu_max rows.
class JumpFlowForm {
public:
    JumpFlowForm() = default;
    explicit JumpFlowForm(std::vector<ProjectorSet> modes);

    int M() const { return static_cast<int>(modes_.size()); }
    Index n() const { return n_; }
    Index m() const { return m_; }
    Index p() const { return p_; }
    int nu_max() const { return nu_max_; }
    Index u_len() const { return m_ * nu_max_; }
    const ProjectorSet& mode(int q) const { return modes_[static_cast<std::size_t>(q)]; }
    const ModeDecomposition& dec(int q) const { return mode(q).dec(); }
    Index n_J(int q) const { return dec(q).n_J(); }

    Mat J(int q) const { return dec(q).J_dense(); }
    const Mat& B_J(int q) const { return mode(q).B_J(); }
    const Mat& C_V(int q) const { return mode(q).C_V(); }
    Mat feedthrough(int q) const;  // p x u_len

    // P_{j,k} = [I 0] T_j^{-1} T_k [I; 0]
    Mat P(int j, int k) const;
    LinOp P_op(int j, int k) const;

    // Algebraic state part -sum_i (E^imp_q)^i B^imp_q u^{(i)} as an n x u_len map.
    Mat imp_state_map(int q) const;
    // z_k^+ = P_{k,l} z_l^- + input_jump(k,l) U; l < 0 means a start from rest.
    Mat input_jump(int k, int l) const;
    // Output impulse coefficient of δ^{(i)} at a switch l -> k:
    //   impulse_state(k,l,i) z_l^- + impulse_input(k,l,i) U.
    Mat impulse_state(int k, int l, int i) const;
    Mat impulse_input(int k, int l, int i) const;

private:
    std::vector<ProjectorSet> modes_;
    Index n_ = 0, m_ = 0, p_ = 0;
    int nu_max_ = 0;
};

JumpFlowForm reformulate_jumpflow(const SwitchedSystem& sys, const QwfOptions& opts = {});

struct ValidationOptions {
    bool check_stability = true;
    double tol_assume = 1e-10;  // relative to the operand scale
};

struct ModeReport {
    bool regular = false;
    int nu = 0;
    Index n_J = 0;
    bool stable = false;
    bool stability_sampled = false;  // Ritz estimate instead of a dense eigensolve
    double max_real_eig = 0.0;
};

struct PairReport {
    int k = 0;  // mode after the switch
    int l = 0;  // mode before the switch
    bool assumption_i = true;
    double residual_i = 0.0;
    bool assumption_ii = true;
    double residual_ii = 0.0;
};

struct ValidationReport {
    std::vector<ModeReport> modes;
    std::vector<PairReport> pairs;
    bool all_regular() const;
    bool all_stable() const;
    bool assumption_i() const;
    bool assumption_ii() const;
};

ValidationReport validate_jumpflow(const JumpFlowForm& jf, const ValidationOptions& opts = {});
// Throws NotRegular naming the first singular mode.
ValidationReport validate_system(const SwitchedSystem& sys, const ValidationOptions& opts = {},
                                 const QwfOptions& qwf = {});

}  // namespace swmor
