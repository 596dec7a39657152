#pragma once

#include "swmor/balancing.hpp"
#include "swmor/input.hpp"
#include "swmor/linalg.hpp"
#include "swmor/model.hpp"

#include <vector>

namespace swmor {

// Switched ODE with jumps:
//   x' = A_q x + B_q u,   y = C_q x + D_q U,
//   x(t_k^+) = jump[k][l] x(t_k^-) + input_jump[k][l] U(t_k)   for a switch l -> k,
// with U = [u; u'; ...; u^{(nu_max-1)}]. The state dimension may differ per mode.
struct SwitchedOde {
    Index m = 0, p = 0;
    int nu_max = 0;
    std::vector<LinOp> A;
    std::vector<Mat> B, C, D;
    std::vector<std::vector<LinOp>> jump;        // [k][l], unused for k == l
    std::vector<std::vector<Mat>> input_jump;    // [k][l], empty means zero
    // Impulse coefficient of delta^{(i)}: imp_state[k][l][i] x^- + imp_input[k][l][i] U.
    std::vector<std::vector<std::vector<Mat>>> imp_state, imp_input;

    int M() const { return static_cast<int>(A.size()); }
    Index dim(int q) const { return A[static_cast<std::size_t>(q)].rows; }
    Index u_len() const { return m * nu_max; }
    void check() const;  // throws DimensionMismatch
};

// Full-order jump-flow model; dense matrices when n_J <= kDenseLimit.
SwitchedOde fom_ode(const JumpFlowForm& jf);
// Reduced model in the shared reference coordinates.
SwitchedOde rom_ode(const RomBundle& rom);

struct SimOptions {
    double dt = 0.01;      // target output spacing; each segment gets an even count of equal steps
    double rtol = 1e-8;
    double atol = 1e-10;
    long max_steps = 20'000'000;
};

struct JumpEntry {
    double t = 0.0;
    int from = -1, to = 0;
    Vec x_pre, x_post;
    Vec y_pre, y_post;
};

struct ImpulseEntry {
    double t = 0.0;
    int order = 0;  // coefficient of the order-th derivative of the Dirac impulse
    Vec coef;
};

struct TrajectoryRecord {
    std::vector<double> t;            // strictly increasing; switch instants included
    Mat y;                            // t.size() x p, right limits at switch instants
    std::vector<Index> switch_index;  // grid index of every switch after t0
    std::vector<JumpEntry> jumps;     // one per switch after t0, aligned with switch_index
    std::vector<ImpulseEntry> impulses;
    double y_l2 = 0.0;  // on the integrator's dense output, 8 panels per accepted step
    double u_l2 = 0.0;
    long steps = 0, rejected = 0;
};

TrajectoryRecord simulate(const SwitchedOde& sys, const SwitchingSignal& signal, const InputSignal& input,
                          const SimOptions& opts = {});

struct OutputError {
    double abs_l2 = 0.0;
    double rel_to_input = 0.0;
    double impulse_diff = 0.0;  // largest coefficient difference over matching impulse entries
};

// L2 norm of y - yhat by composite Simpson per inter-switch segment. Impulse
// tables are compared entry by entry and never enter the L2 value.
OutputError output_error(const TrajectoryRecord& fom, const TrajectoryRecord& rom);

// Composite Simpson L2 norm of the grid samples of one record.
double grid_l2(const TrajectoryRecord& rec);

}  // namespace swmor
