#pragma once

#include "swmor/balancing.hpp"
#include "swmor/model.hpp"

namespace swmor {

struct ReduceOptions {
    double tol = 1e-12;
    bool input_jumps = false;      // add the input-jump vectors to the reachability problem
    bool output_impulses = false;  // add the impulse output rows to the observability problem
};

// Everything that does not depend on the reduced order.
struct Reduction {
    JumpFlowForm jf;
    BilinearData bd;
    GramianPair g;
    double tol = 0.0;
};

Reduction prepare_reduction(const SwitchedSystem& sys, const ReduceOptions& opts = {});

struct ReducedModel {
    RomBundle rom;
    BoundReport bound;  // evaluated at the order actually kept
};

ReducedModel reduce_to(const Reduction& red, Index r);

}  // namespace swmor
