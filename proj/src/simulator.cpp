#include "swmor/simulator.hpp"

#include "swmor/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

namespace swmor {

namespace {

constexpr const char* kMod = "simulator";

std::span<const double> cspan(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> mspan(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Dormand-Prince 5(4) with the continuous extension of order four.
namespace dp {
constexpr std::array<double, 7> c = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// fifth- minus fourth-order weights
constexpr std::array<double, 7> e = {71.0 / 57600,    0.0,        -71.0 / 16695, 71.0 / 1920,
                                     -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
constexpr std::array<double, 7> d = {-12715105075.0 / 11282082432.0, 0.0, 87487479700.0 / 32700410799.0,
                                     -10690763975.0 / 1880347072.0,  701980252875.0 / 199316789632.0,
                                     -1453857185.0 / 822651844.0,    69997945.0 / 29380423.0};
}  // namespace dp

struct Segment {
    const SwitchedOde& sys;
    int q;
    const InputSignal& input;

    Vec u(double t) const { return input.stacked(t, 0, sys.m); }
    Vec U(double t) const { return sys.nu_max > 0 ? input.stacked(t, sys.nu_max - 1, sys.m) : Vec(); }
    Vec f(double t, const Vec& x) const {
        const auto sq = static_cast<std::size_t>(q);
        Vec out = sys.A[sq].apply(x);
        out.noalias() += sys.B[sq] * u(t);
        return out;
    }
    Vec y(double t, const Vec& x) const {
        const auto sq = static_cast<std::size_t>(q);
        Vec out = sys.C[sq] * x;
        if (sys.nu_max > 0) out.noalias() += sys.D[sq] * U(t);
        return out;
    }
};

double err_norm(const Vec& err, const Vec& x0, const Vec& x1, const SimOptions& o) {
    if (err.size() == 0) return 0.0;
    double s = 0.0;
    for (Index i = 0; i < err.size(); ++i) {
        const double sc = o.atol + o.rtol * std::max(std::abs(x0(i)), std::abs(x1(i)));
        const double v = err(i) / sc;
        s += v * v;
    }
    return std::sqrt(s / static_cast<double>(err.size()));
}

double scaled_norm(const Vec& v, const Vec& x, const SimOptions& o) {
    return err_norm(v, x, x, o);
}

// Starting step from the size of the first and second derivative.
double initial_step(const Segment& seg, double t, const Vec& x, const Vec& f0, double len, const SimOptions& o) {
    if (x.size() == 0) return len;
    const double d0 = scaled_norm(x, x, o), d1 = scaled_norm(f0, x, o);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, len);
    Vec x1 = x;
    kernels::axpy(h0, cspan(f0), mspan(x1));
    const Vec f1 = seg.f(t + h0, x1);
    const double d2 = scaled_norm(f1 - f0, x, o) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, len});
}

struct Accum {
    double y2 = 0.0, u2 = 0.0;
};

// Integrates one segment, writing grid samples with index in [gi, grid.size())
// that fall in (t0, t1]. Returns the state at t1.
Vec integrate_segment(const Segment& seg, double t0, double t1, Vec x, const std::vector<double>& grid,
                      std::size_t& gi, std::size_t gend, Mat& yout, Accum& acc, TrajectoryRecord& rec,
                      const SimOptions& o) {
    const Index n = x.size();
    const double len = t1 - t0;
    if (n == 0) {
        // purely algebraic: the output is a function of time only
        for (; gi < gend; ++gi) yout.row(static_cast<Index>(gi)) = seg.y(grid[gi], x).transpose();
        const int panels = 64;
        const double hh = len / panels;
        for (int j = 0; j <= panels; ++j) {
            const double w = (j == 0 || j == panels) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            const double tj = t0 + j * hh;
            acc.y2 += w * hh / 3.0 * seg.y(tj, x).squaredNorm();
            acc.u2 += w * hh / 3.0 * seg.u(tj).squaredNorm();
        }
        return x;
    }

    std::array<Vec, 7> k;
    k[0] = seg.f(t0, x);
    double t = t0;
    double h = initial_step(seg, t, x, k[0], len, o);
    bool rejected_last = false;
    Vec xs(n), xn(n), err(n);
    std::array<Vec, 5> rc;
    while (t < t1) {
        if (++rec.steps > o.max_steps) throw IntegratorFailure(kMod, "step limit exceeded");
        bool last = false;
        if (t + h >= t1 - 1e-13 * std::max(1.0, std::abs(t1))) {
            h = t1 - t;
            last = true;
        }
        for (int s = 1; s < 7; ++s) {
            xs = x;
            for (int j = 0; j < s; ++j)
                if (dp::a[s][j] != 0.0) kernels::axpy(h * dp::a[s][j], cspan(k[static_cast<std::size_t>(j)]), mspan(xs));
            k[static_cast<std::size_t>(s)] = seg.f(t + dp::c[static_cast<std::size_t>(s)] * h, xs);
            if (s == 6) xn = xs;  // the seventh stage point is the fifth-order solution
        }
        err.setZero();
        for (int j = 0; j < 7; ++j)
            if (dp::e[static_cast<std::size_t>(j)] != 0.0)
                kernels::axpy(h * dp::e[static_cast<std::size_t>(j)], cspan(k[static_cast<std::size_t>(j)]), mspan(err));
        const double en = err_norm(err, x, xn, o);
        if (!std::isfinite(en)) throw IntegratorFailure(kMod, "non-finite error estimate");
        if (en <= 1.0) {
            // continuous extension on [t, t + h]
            rc[0] = x;
            rc[1] = xn - x;
            rc[2] = h * k[0] - rc[1];
            rc[3] = rc[1] - h * k[6] - rc[2];
            rc[4] = Vec::Zero(n);
            for (int j = 0; j < 7; ++j)
                if (dp::d[static_cast<std::size_t>(j)] != 0.0)
                    kernels::axpy(h * dp::d[static_cast<std::size_t>(j)], cspan(k[static_cast<std::size_t>(j)]), mspan(rc[4]));
            auto dense = [&](double th) {
                const double th1 = 1.0 - th;
                return Vec(rc[0] + th * (rc[1] + th1 * (rc[2] + th * (rc[3] + th1 * rc[4]))));
            };
            const double tn = last ? t1 : t + h;
            while (gi < gend && grid[gi] <= tn + 1e-12 * std::max(1.0, std::abs(tn))) {
                const double th = std::clamp((grid[gi] - t) / h, 0.0, 1.0);
                yout.row(static_cast<Index>(gi)) = seg.y(grid[gi], dense(th)).transpose();
                ++gi;
            }
            for (int j = 0; j <= 8; ++j) {
                const double w = (j == 0 || j == 8) ? 1.0 : (j % 2 ? 4.0 : 2.0);
                const double tj = t + h * j / 8.0;
                acc.y2 += w * h / 24.0 * seg.y(tj, dense(j / 8.0)).squaredNorm();
                acc.u2 += w * h / 24.0 * seg.u(tj).squaredNorm();
            }
            x = xn;
            k[0] = k[6];
            t = tn;
            if (last) break;
            double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.2);
            fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 5.0);
            h *= fac;
            rejected_last = false;
        } else {
            ++rec.rejected;
            h *= std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
            rejected_last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) throw IntegratorFailure(kMod, "step size underflow at t = " + std::to_string(t));
    }
    return x;
}

// Per segment: an even number of equal panels, at least two, no wider than dt.
std::vector<double> segment_grid(double a, double b, double dt) {
    const auto half = static_cast<long>(std::ceil((b - a) / (2.0 * dt) - 1e-9));
    const long panels = 2 * std::max(1L, half);
    std::vector<double> g(static_cast<std::size_t>(panels) + 1);
    for (long i = 0; i <= panels; ++i) g[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / static_cast<double>(panels);
    g.back() = b;
    return g;
}

void check_same_shape(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    if (a.t.size() != b.t.size() || a.switch_index != b.switch_index || a.y.cols() != b.y.cols())
        throw GridMismatch(kMod, "trajectories use different grids or output sizes");
    for (std::size_t i = 0; i < a.t.size(); ++i)
        if (std::abs(a.t[i] - b.t[i]) > 1e-12 * std::max(1.0, std::abs(a.t[i])))
            throw GridMismatch(kMod, "grid points differ at index " + std::to_string(i));
}

// Simpson per segment on f(i) = row i, using the left limits at switch instants.
template <class RowFn, class LeftFn>
double simpson_sq(const TrajectoryRecord& rec, RowFn row, LeftFn left) {
    double s = 0.0;
    std::vector<Index> bounds = {0};
    for (Index i : rec.switch_index) bounds.push_back(i);
    bounds.push_back(static_cast<Index>(rec.t.size()) - 1);
    for (std::size_t sgi = 0; sgi + 1 < bounds.size(); ++sgi) {
        const Index a = bounds[sgi], b = bounds[sgi + 1];
        const bool ends_at_switch = sgi + 1 < bounds.size() - 1;
        const Index panels = b - a;
        if (panels <= 0) continue;
        const double h = (rec.t[static_cast<std::size_t>(b)] - rec.t[static_cast<std::size_t>(a)]) / static_cast<double>(panels);
        for (Index i = a; i <= b; ++i) {
            const double v = (i == b && ends_at_switch) ? left(sgi) : row(i);
            double w = (i == a || i == b) ? 1.0 : ((i - a) % 2 ? 4.0 : 2.0);
            if (panels % 2) w = (i == a || i == b) ? 0.5 : 1.0;  // odd count: trapezoid
            s += w * v * (panels % 2 ? h : h / 3.0);
        }
    }
    return s;
}

}  // namespace

void SwitchedOde::check() const {
    const int nm = M();
    if (nm == 0) throw DimensionMismatch(kMod, "no modes");
    if (B.size() != A.size() || C.size() != A.size() || D.size() != A.size())
        throw DimensionMismatch(kMod, "per-mode arrays differ in length");
    for (int q = 0; q < nm; ++q) {
        const auto sq = static_cast<std::size_t>(q);
        const Index n = dim(q);
        if (A[sq].cols != n || B[sq].rows() != n || B[sq].cols() != m || C[sq].cols() != n || C[sq].rows() != p ||
            D[sq].rows() != p || D[sq].cols() != u_len())
            throw DimensionMismatch(kMod, "mode " + std::to_string(q + 1) + " has inconsistent sizes");
    }
}

SwitchedOde fom_ode(const JumpFlowForm& jf) {
    SwitchedOde s;
    s.m = jf.m();
    s.p = jf.p();
    s.nu_max = jf.nu_max();
    const int M = jf.M();
    for (int q = 0; q < M; ++q) {
        s.A.push_back(jf.n_J(q) <= kDenseLimit ? LinOp::dense(jf.J(q)) : jf.dec(q).J_op());
        s.B.push_back(jf.B_J(q));
        s.C.push_back(jf.C_V(q));
        s.D.push_back(jf.feedthrough(q));
    }
    const auto sM = static_cast<std::size_t>(M);
    s.jump.assign(sM, std::vector<LinOp>(sM));
    s.input_jump.assign(sM, std::vector<Mat>(sM));
    s.imp_state.assign(sM, std::vector<std::vector<Mat>>(sM));
    s.imp_input = s.imp_state;
    for (int k = 0; k < M; ++k)
        for (int l = 0; l < M; ++l) {
            if (k == l) continue;
            const auto sk = static_cast<std::size_t>(k), sl = static_cast<std::size_t>(l);
            const bool small = jf.n_J(k) <= kDenseLimit && jf.n_J(l) <= kDenseLimit;
            s.jump[sk][sl] = small ? LinOp::dense(jf.P(k, l)) : jf.P_op(k, l);
            s.input_jump[sk][sl] = jf.input_jump(k, l);
            for (int i = 0; i + 1 < jf.dec(k).nu(); ++i) {
                s.imp_state[sk][sl].push_back(jf.impulse_state(k, l, i));
                s.imp_input[sk][sl].push_back(jf.impulse_input(k, l, i));
            }
        }
    return s;
}

SwitchedOde rom_ode(const RomBundle& rom) {
    SwitchedOde s;
    const int M = rom.M();
    if (M == 0) throw DimensionMismatch(kMod, "empty reduced model");
    s.m = rom.B[0].cols();
    s.p = rom.C[0].rows();
    s.nu_max = s.m > 0 ? static_cast<int>(rom.D[0].cols() / s.m) : 0;
    for (int q = 0; q < M; ++q) {
        const auto sq = static_cast<std::size_t>(q);
        s.A.push_back(LinOp::dense(rom.A[sq]));
        s.B.push_back(rom.B[sq]);
        s.C.push_back(rom.C[sq]);
        s.D.push_back(rom.D[sq]);
    }
    const auto sM = static_cast<std::size_t>(M);
    s.jump.assign(sM, std::vector<LinOp>(sM));
    for (std::size_t k = 0; k < sM; ++k)
        for (std::size_t l = 0; l < sM; ++l)
            if (k != l) s.jump[k][l] = LinOp::dense(rom.jump[k][l]);
    s.input_jump = rom.input_jump;
    s.imp_state = rom.imp_state;
    s.imp_input = rom.imp_input;
    return s;
}

TrajectoryRecord simulate(const SwitchedOde& sys, const SwitchingSignal& signal, const InputSignal& input,
                          const SimOptions& opts) {
    sys.check();
    signal.check(sys.M());
    if (!(opts.dt > 0.0) || !(opts.rtol > 0.0) || !(opts.atol > 0.0))
        throw InvalidArgument(kMod, "dt, rtol and atol must be positive");
    if (sys.nu_max > kNuMax) throw MissingDerivative(kMod, "input derivatives beyond order 10 are not provided");

    TrajectoryRecord rec;
    const auto& ev = signal.events;
    const std::size_t nseg = ev.size();
    std::vector<std::size_t> seg_start;
    for (std::size_t s = 0; s < nseg; ++s) {
        const double a = ev[s].t, b = s + 1 < nseg ? ev[s + 1].t : signal.tFinal;
        auto g = segment_grid(a, b, opts.dt);
        seg_start.push_back(rec.t.size());
        if (s > 0) rec.switch_index.push_back(static_cast<Index>(rec.t.size()));
        rec.t.insert(rec.t.end(), g.begin(), g.end() - 1);
        if (s + 1 == nseg) rec.t.push_back(b);
    }
    rec.y = Mat::Zero(static_cast<Index>(rec.t.size()), sys.p);

    Accum acc;
    int prev = -1;
    Vec x;
    std::size_t gi = 0;
    for (std::size_t s = 0; s < nseg; ++s) {
        const int q = ev[s].mode;
        const double a = ev[s].t, b = s + 1 < nseg ? ev[s + 1].t : signal.tFinal;
        const Segment seg{sys, q, input};
        if (prev < 0) {
            x = Vec::Zero(sys.dim(q));  // start from rest, no impulse at t0
        } else {
            const auto sk = static_cast<std::size_t>(q), sl = static_cast<std::size_t>(prev);
            JumpEntry je;
            je.t = a;
            je.from = prev;
            je.to = q;
            je.x_pre = x;
            je.y_pre = Segment{sys, prev, input}.y(a, x);
            const Vec U = seg.U(a);
            Vec xp = sys.jump[sk][sl].apply(x);
            const Mat& ij = sys.input_jump[sk][sl];
            if (ij.size() > 0 && U.size() > 0) xp.noalias() += ij * U;
            for (std::size_t i = 0; i < sys.imp_state[sk][sl].size(); ++i) {
                Vec coef = sys.imp_state[sk][sl][i] * x;
                if (i < sys.imp_input[sk][sl].size() && U.size() > 0) coef.noalias() += sys.imp_input[sk][sl][i] * U;
                if (!coef.allFinite()) throw IntegratorFailure(kMod, "non-finite impulse coefficient");
                if (coef.norm() > 0.0) rec.impulses.push_back({a, static_cast<int>(i), coef});
            }
            x = xp;
            je.x_post = x;
            je.y_post = seg.y(a, x);
            rec.jumps.push_back(std::move(je));
        }
        // the first grid point of the segment carries the right limit
        rec.y.row(static_cast<Index>(gi)) = seg.y(a, x).transpose();
        ++gi;
        const std::size_t gend = s + 1 < nseg ? seg_start[s + 1] : rec.t.size();
        x = integrate_segment(seg, a, b, x, rec.t, gi, gend, rec.y, acc, rec, opts);
        if (gi != gend) throw IntegratorFailure(kMod, "dense output missed grid points");
        prev = q;
    }
    rec.y_l2 = std::sqrt(std::max(0.0, acc.y2));
    rec.u_l2 = std::sqrt(std::max(0.0, acc.u2));
    return rec;
}

double grid_l2(const TrajectoryRecord& rec) {
    const double s = simpson_sq(
        rec, [&](Index i) { return rec.y.row(i).squaredNorm(); },
        [&](std::size_t sgi) { return rec.jumps[sgi].y_pre.squaredNorm(); });
    return std::sqrt(std::max(0.0, s));
}

OutputError output_error(const TrajectoryRecord& fom, const TrajectoryRecord& rom) {
    check_same_shape(fom, rom);
    if (fom.jumps.size() != rom.jumps.size()) throw GridMismatch(kMod, "different switch logs");
    OutputError out;
    const double s = simpson_sq(
        fom, [&](Index i) { return (fom.y.row(i) - rom.y.row(i)).squaredNorm(); },
        [&](std::size_t sgi) { return (fom.jumps[sgi].y_pre - rom.jumps[sgi].y_pre).squaredNorm(); });
    out.abs_l2 = std::sqrt(std::max(0.0, s));
    out.rel_to_input = fom.u_l2 > 0.0 ? out.abs_l2 / fom.u_l2 : 0.0;

    // impulse entries are matched on (t, order); a missing entry counts as zero
    auto find = [](const std::vector<ImpulseEntry>& v, const ImpulseEntry& e) -> const ImpulseEntry* {
        for (const auto& x : v)
            if (x.order == e.order && std::abs(x.t - e.t) <= 1e-12 * std::max(1.0, std::abs(e.t))) return &x;
        return nullptr;
    };
    for (const auto& e : fom.impulses) {
        const auto* o = find(rom.impulses, e);
        out.impulse_diff = std::max(out.impulse_diff, o ? (e.coef - o->coef).norm() : e.coef.norm());
    }
    for (const auto& e : rom.impulses)
        if (!find(fom.impulses, e)) out.impulse_diff = std::max(out.impulse_diff, e.coef.norm());
    return out;
}

}  // namespace swmor
