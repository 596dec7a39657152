#pragma once

#include "swmor/model.hpp"

#include <cstdint>

namespace swmor {

// Constrained mass-spring-damper chain with g masses, n = 2g + 1, m = 1, p = 3.
// State ordering: positions, velocities, multiplier. Requires 3 <= g and
// 1 <= M <= g - 1.
SwitchedSystem gen_msd(Index g, int M, std::uint64_t seed);

// Two-mode variant where mode 2 loses the last mass equation. The input also
// acts on the last mass and the third output is that mass's velocity, so
// switches back to mode 1 carry input-driven state jumps. Throws
// RegularityRepairFailed if the repaired pencil is singular, not of index 3,
// has unstable finite spectrum or shows no input jumps.
SwitchedSystem gen_msd_jump_pair(Index g, std::uint64_t seed);

// Staggered-grid Stokes problem on the unit square with N x N cells.
// n = 2N(N-1) velocities plus N^2 - 1 pressures (one pressure fixed); m = p = 3.
// Viscosities are evenly spaced in [0.65, 1.35].
SwitchedSystem gen_stokes(Index N, int M, std::uint64_t seed);

// Smallest N whose Stokes dimension reaches n_target.
Index stokes_grid_for(Index n_target);

}  // namespace swmor
