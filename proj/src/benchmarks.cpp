#include "swmor/benchmarks.hpp"

#include "swmor/rng.hpp"

#include <Eigen/Eigenvalues>

#include <vector>

namespace swmor {

namespace {

constexpr const char* kMod = "benchmarks";

using Triplets = std::vector<Eigen::Triplet<double>>;

SpMat from_triplets(Index r, Index c, const Triplets& t) {
    SpMat m(r, c);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

struct MsdParts {
    Index g;
    double e_scale = 1.0;     // multiplies the whole E
    double damp_shift = 0.0;  // added to the diagonal of D
    Index extra_constraint = -1;  // position index receiving +0.5 in the constraint row
};

// K = -2 tridiag(-1, 3, -1), D = -0.5 tridiag(-1, 3, -1), unit masses.
SystemMode msd_mode(const MsdParts& q) {
    const Index g = q.g, n = 2 * g + 1;
    Triplets te, ta;
    for (Index i = 0; i < 2 * g; ++i) te.emplace_back(i, i, q.e_scale);
    for (Index i = 0; i < g; ++i) {
        ta.emplace_back(i, g + i, 1.0);
        ta.emplace_back(g + i, i, -6.0);
        ta.emplace_back(g + i, g + i, -1.5 + q.damp_shift);
        if (i + 1 < g) {
            ta.emplace_back(g + i, i + 1, 2.0);
            ta.emplace_back(g + i + 1, i, 2.0);
            ta.emplace_back(g + i, g + i + 1, 0.5);
            ta.emplace_back(g + i + 1, g + i, 0.5);
        }
    }
    // -G^T in the velocity rows, G in the last row, G = e_1 - e_g
    ta.emplace_back(g, 2 * g, -1.0);
    ta.emplace_back(2 * g - 1, 2 * g, 1.0);
    ta.emplace_back(2 * g, 0, 1.0);
    ta.emplace_back(2 * g, g - 1, -1.0);
    if (q.extra_constraint >= 0) ta.emplace_back(2 * g, q.extra_constraint, 0.5);

    SystemMode md;
    md.E = from_triplets(n, n, te);
    md.A = from_triplets(n, n, ta);
    md.B = Mat::Zero(n, 1);
    md.B(g, 0) = 1.0;
    md.C = Mat::Zero(3, n);
    md.C(0, 0) = 1.0;
    md.C(1, 1) = 1.0;
    md.C(2, g - 2) = 1.0;
    return md;
}

}  // namespace

SwitchedSystem gen_msd(Index g, int M, std::uint64_t seed) {
    if (g < 3) throw InvalidArgument(kMod, "msd needs g >= 3");
    if (M < 1 || M > g - 1) throw InvalidArgument(kMod, "msd needs 1 <= M <= g - 1");
    SwitchedSystem sys;
    sys.modes.push_back(msd_mode({g}));
    for (int j = 2; j <= M; ++j) {
        CounterRng rng(seed, static_cast<std::uint64_t>(j));
        MsdParts q{g};
        q.e_scale = 1.0 + rng.uniform();
        q.damp_shift = rng.uniform(0.0, 0.35);
        q.extra_constraint = j;  // e_{j+1} in one-based numbering
        SystemMode md = msd_mode(q);
        md.B(j - 1, 0) += 1.0;
        md.B(g + j - 1, 0) += 1.0;
        sys.modes.push_back(std::move(md));
    }
    return sys;
}

SwitchedSystem gen_msd_jump_pair(Index g, std::uint64_t seed) {
    if (g < 3) throw InvalidArgument(kMod, "msd needs g >= 3");
    (void)seed;  // the construction is deterministic; kept for a uniform interface
    const Index row = 2 * g - 1;  // equation of the last mass
    SwitchedSystem sys;
    sys.modes.push_back(msd_mode({g}));
    // The input also pushes the last mass. Once its equation is algebraic in
    // mode 2, the input fixes a differential coordinate of mode 1 there.
    sys.modes[0].B(row, 0) = 1.0;
    // third output: velocity of the last mass, where the jumps land
    sys.modes[0].C.row(2).setZero();
    sys.modes[0].C(2, row) = 1.0;
    SystemMode md = msd_mode({g});
    md.B = sys.modes[0].B;
    md.C = sys.modes[0].C;
    md.E.prune([row](Index i, Index, double) { return i != row; });
    // The last mass equation becomes algebraic. Dropping the multiplier from it
    // keeps the multiplier at index 3 through the first mass.
    md.A.coeffRef(row, 2 * g) = 0.0;
    md.A.prune(0.0);
    sys.modes.push_back(std::move(md));

    const Pencil p{sys.modes[1].E, sys.modes[1].A};
    if (!regularity_check(p, 3, 7)) throw RegularityRepairFailed(kMod, "mode 2 pencil is singular");
    ValidationReport rep;
    try {
        rep = validate_system(sys);
    } catch (const NotRegular& e) {
        throw RegularityRepairFailed(kMod, e.what());
    }
    if (rep.modes[1].nu != 3) throw RegularityRepairFailed(kMod, "mode 2 index is not 3");
    if (!rep.modes[1].stable) throw RegularityRepairFailed(kMod, "mode 2 has unstable finite spectrum");
    if (rep.assumption_i()) throw RegularityRepairFailed(kMod, "input jumps vanish for this construction");
    return sys;
}

namespace {

// Velocity unknowns: u on vertical interior faces (N-1 x N), then v on
// horizontal interior faces (N x N-1). Pressures cell-centred, last one fixed.
struct Mac {
    Index N;
    Index nu() const { return (N - 1) * N; }
    Index nv() const { return 2 * nu(); }
    Index np() const { return N * N - 1; }
    Index uid(Index i, Index j) const { return j * (N - 1) + i; }        // face x = (i+1)h, cell row j
    Index vid(Index i, Index j) const { return nu() + j * N + i; }       // face y = (j+1)h, cell col i
    Index pid(Index i, Index j) const { return j * N + i; }              // may equal np() for the fixed cell
};

}  // namespace

Index stokes_grid_for(Index n_target) {
    Index N = 2;
    while (3 * N * N - 2 * N - 1 < n_target) ++N;
    return N;
}

SwitchedSystem gen_stokes(Index N, int M, std::uint64_t seed) {
    if (N < 4) throw InvalidArgument(kMod, "stokes needs N >= 4");
    if (M < 1) throw InvalidArgument(kMod, "stokes needs M >= 1");
    const Mac g{N};
    const Index nv = g.nv(), np = g.np(), n = nv + np;
    if (M + 1 >= np) throw InvalidArgument(kMod, "too many modes for this grid");
    const double h = 1.0 / static_cast<double>(N), ih2 = 1.0 / (h * h), ih = 1.0 / h;

    // Laplacian with no-slip walls; tangential walls use a reflected ghost value.
    Triplets tl;
    auto lap = [&](Index row, Index nx, Index ny, Index i, Index j, bool is_u, auto id) {
        double diag = -4.0 * ih2;
        const Index di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const Index a = i + di[k], b = j + dj[k];
            const bool normal = (k < 2) == is_u;  // neighbour along the velocity direction
            if (a < 0 || a >= nx || b < 0 || b >= ny) {
                if (!normal) diag -= ih2;  // ghost = -interior
                continue;
            }
            tl.emplace_back(row, id(a, b), ih2);
        }
        tl.emplace_back(row, row, diag);
    };
    for (Index j = 0; j < N; ++j)
        for (Index i = 0; i + 1 < N; ++i)
            lap(g.uid(i, j), N - 1, N, i, j, true, [&](Index a, Index b) { return g.uid(a, b); });
    for (Index j = 0; j + 1 < N; ++j)
        for (Index i = 0; i < N; ++i)
            lap(g.vid(i, j), N, N - 1, i, j, false, [&](Index a, Index b) { return g.vid(a, b); });
    const SpMat a11 = from_triplets(nv, nv, tl);

    // A12 = -grad; the gradient at a face is the difference of adjacent cells.
    Triplets tg;
    auto grad = [&](Index row, Index left, Index right) {
        if (right < np) tg.emplace_back(row, right, -ih);
        if (left < np) tg.emplace_back(row, left, ih);
    };
    for (Index j = 0; j < N; ++j)
        for (Index i = 0; i + 1 < N; ++i) grad(g.uid(i, j), g.pid(i, j), g.pid(i + 1, j));
    for (Index j = 0; j + 1 < N; ++j)
        for (Index i = 0; i < N; ++i) grad(g.vid(i, j), g.pid(i, j), g.pid(i, j + 1));
    const SpMat a12 = from_triplets(nv, np, tg);

    SwitchedSystem sys;
    for (int j = 1; j <= M; ++j) {
        const double visc = M == 1 ? 1.0 : 0.65 + 0.7 * static_cast<double>(j - 1) / static_cast<double>(M - 1);
        double e_scale = 1.0;
        if (j >= 2) e_scale += CounterRng(seed, static_cast<std::uint64_t>(j)).uniform();
        Triplets te, ta;
        for (Index i = 0; i < nv; ++i) te.emplace_back(i, i, e_scale);
        for (Index k = 0; k < a11.outerSize(); ++k)
            for (SpMat::InnerIterator it(a11, k); it; ++it) ta.emplace_back(it.row(), it.col(), visc * it.value());
        for (Index k = 0; k < a12.outerSize(); ++k)
            for (SpMat::InnerIterator it(a12, k); it; ++it) {
                ta.emplace_back(it.row(), nv + it.col(), it.value());
                ta.emplace_back(nv + it.col(), it.row(), it.value());
            }
        SystemMode md;
        md.E = from_triplets(n, n, te);
        md.A = from_triplets(n, n, ta);
        md.B = Mat::Zero(n, 3);
        md.C = Mat::Zero(3, n);
        // base columns e_1, e_2, e_{nv+1}; modes j >= 2 add e_j, e_{j+1}, e_{nv+j}
        const Index base[3] = {0, 1, nv};
        for (int c = 0; c < 3; ++c) {
            md.B(base[c], c) = 1.0;
            md.C(c, base[c]) = 1.0;
            if (j >= 2) {
                md.B(base[c] + j - 1, c) += 1.0;
                md.C(c, base[c] + j - 1) += 1.0;
            }
        }
        sys.modes.push_back(std::move(md));
    }
    return sys;
}

}  // namespace swmor
