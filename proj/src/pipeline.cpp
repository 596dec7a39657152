#include "swmor/pipeline.hpp"

namespace swmor {

Reduction prepare_reduction(const SwitchedSystem& sys, const ReduceOptions& opts) {
    Reduction red;
    red.tol = opts.tol;
    red.jf = reformulate_jumpflow(sys);
    red.bd = build_bilinear_matrices(red.jf, opts.input_jumps, opts.output_impulses);
    GleOptions go;
    go.tol = opts.tol;
    red.g = compute_gramians(red.bd, go);
    return red;
}

ReducedModel reduce_to(const Reduction& red, Index r) {
    ReducedModel out;
    out.rom = balance_truncate(red.jf, red.bd, red.g, r);
    out.bound = certified_error_bound(red.g, out.rom.hankel, out.rom.r, red.tol);
    return out;
}

}  // namespace swmor
