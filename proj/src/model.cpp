#include "swmor/model.hpp"

#include "swmor/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace swmor {

namespace {
constexpr const char* kMod = "swdae-model";
}

void SwitchedSystem::check() const {
    if (modes.empty()) throw DimensionMismatch(kMod, "system has no modes");
    const Index nn = n(), mm = m(), pp = p();
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const auto& md = modes[j];
        const bool ok = md.E.rows() == nn && md.E.cols() == nn && md.A.rows() == nn &&
                        md.A.cols() == nn && md.B.rows() == nn && md.B.cols() == mm &&
                        md.C.rows() == pp && md.C.cols() == nn;
        if (!ok) throw DimensionMismatch(kMod, "mode " + std::to_string(j + 1) + " has inconsistent shapes");
    }
}

int SwitchingSignal::mode_at(double t) const {
    int q = events.front().mode;
    for (const auto& e : events) {
        if (e.t <= t) q = e.mode;
        else break;
    }
    return q;
}

void SwitchingSignal::check(int M) const {
    if (events.empty()) throw InvalidArgument(kMod, "switching signal has no events");
    if (events.front().t != t0) throw InvalidArgument(kMod, "first event must be at t0");
    if (!(tFinal > t0)) throw InvalidArgument(kMod, "tFinal must exceed t0");
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (events[k].mode < 0 || events[k].mode >= M)
            throw InvalidArgument(kMod, "event mode out of range");
        if (k > 0 && !(events[k].t > events[k - 1].t))
            throw InvalidArgument(kMod, "event times must be strictly increasing");
    }
}

SwitchingSignal SwitchingSignal::periodic(double t0, double tFinal, double dwell, int M) {
    SwitchingSignal s;
    s.t0 = t0;
    s.tFinal = tFinal;
    int q = 0;
    for (double t = t0; t < tFinal - 1e-12; t += dwell) {
        s.events.push_back({t, q});
        q = (q + 1) % M;
    }
    return s;
}

int thread_cap() {
    if (const char* env = std::getenv("SWMOR_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, const std::function<void(int)>& fn) {
    const int threads = std::min(thread_cap(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    std::mutex mu;
    int next = 0;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                int i;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= count) return;
                    i = next++;
                }
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

JumpFlowForm::JumpFlowForm(std::vector<ProjectorSet> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw DimensionMismatch(kMod, "no modes");
    n_ = modes_.front().dec().n();
    m_ = modes_.front().B().cols();
    p_ = modes_.front().C().rows();
    for (const auto& md : modes_) nu_max_ = std::max(nu_max_, md.dec().nu());
}

Mat JumpFlowForm::feedthrough(int q) const {
    Mat d = Mat::Zero(p_, u_len());
    const Mat f = mode(q).feedthrough();
    d.leftCols(f.cols()) = f;
    return d;
}

Mat JumpFlowForm::P(int j, int k) const {
    if (j == k) return Mat::Identity(n_J(j), n_J(j));
    return dec(j).Tinv_top(dec(k).Vhat());
}

LinOp JumpFlowForm::P_op(int j, int k) const {
    if (j == k) {
        const Index d = n_J(j);
        return LinOp{d, d, [](const Mat& x) { return x; }, [](const Mat& x) { return x; }};
    }
    const ModeDecomposition dj = dec(j), dk = dec(k);
    return LinOp{dj.n_J(), dk.n_J(), [dj, dk](const Mat& x) { return dj.Tinv_top(dk.V_apply(x)); },
                 [dj, dk](const Mat& x) { return dk.Vt_apply(dj.Tinv_top_T(x)); }};
}

Mat JumpFlowForm::imp_state_map(int q) const {
    Mat x = Mat::Zero(n_, u_len());
    for (int i = 0; i < dec(q).nu(); ++i) x.middleCols(i * m_, m_) = -mode(q).imp_series(i);
    return x;
}

Mat JumpFlowForm::input_jump(int k, int l) const {
    if (l < 0 || l == k) return Mat::Zero(n_J(k), u_len());
    return dec(k).Tinv_top(imp_state_map(l));
}

Mat JumpFlowForm::impulse_state(int k, int l, int i) const {
    if (l < 0) return Mat(p_, 0);
    const ModeDecomposition& dk = dec(k);
    if (l == k || dk.n_N() == 0) return Mat::Zero(p_, n_J(l));
    Mat npow = dk.N();
    for (int r = 0; r < i; ++r) npow = dk.N() * npow;
    return -(mode(k).C_W() * (npow * dk.Tinv_bottom(dec(l).Vhat())));
}

Mat JumpFlowForm::impulse_input(int k, int l, int i) const {
    const ModeDecomposition& dk = dec(k);
    if (l == k || dk.n_N() == 0) return Mat::Zero(p_, u_len());
    Mat npow = dk.N();
    for (int r = 0; r < i; ++r) npow = dk.N() * npow;
    Mat diff = imp_state_map(k);
    if (l >= 0) diff -= imp_state_map(l);
    return mode(k).C_W() * (npow * dk.Tinv_bottom(diff));
}

JumpFlowForm reformulate_jumpflow(const SwitchedSystem& sys, const QwfOptions& opts) {
    sys.check();
    std::vector<ProjectorSet> modes(static_cast<std::size_t>(sys.M()));
    parallel_for(sys.M(), [&](int j) {
        const auto& md = sys.modes[static_cast<std::size_t>(j)];
        try {
            ModeDecomposition dec(Pencil{md.E, md.A}, opts);
            modes[static_cast<std::size_t>(j)] = ProjectorSet(dec, md.B, md.C);
        } catch (const NotRegular& e) {
            throw NotRegular(kMod, "mode " + std::to_string(j + 1) + ": " + e.what());
        }
    });
    return JumpFlowForm(std::move(modes));
}

bool ValidationReport::all_regular() const {
    return std::all_of(modes.begin(), modes.end(), [](const ModeReport& r) { return r.regular; });
}
bool ValidationReport::all_stable() const {
    return std::all_of(modes.begin(), modes.end(), [](const ModeReport& r) { return r.stable; });
}
bool ValidationReport::assumption_i() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const PairReport& r) { return r.assumption_i; });
}
bool ValidationReport::assumption_ii() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const PairReport& r) { return r.assumption_ii; });
}

namespace {

// Rightmost Ritz value of J from a short Arnoldi run.
double ritz_max_real(const ModeDecomposition& dec, Index steps) {
    const Index n = dec.n_J();
    const Index k = std::min(steps, n);
    CounterRng rng(41, 5);
    Mat v = Mat::Zero(n, k + 1);
    Mat h = Mat::Zero(k + 1, k);
    v.col(0) = rng.normal_matrix(n, 1).col(0).normalized();
    Index used = k;
    for (Index j = 0; j < k; ++j) {
        Vec w = dec.J_apply(v.col(j));
        for (int pass = 0; pass < 2; ++pass) {
            const Vec c = v.leftCols(j + 1).transpose() * w;
            h.col(j).head(j + 1) += c;
            w -= v.leftCols(j + 1) * c;
        }
        h(j + 1, j) = w.norm();
        if (h(j + 1, j) < 1e-12 * h.col(j).norm()) {
            used = j + 1;
            break;
        }
        v.col(j + 1) = w / h(j + 1, j);
    }
    Eigen::EigenSolver<Mat> es(h.topLeftCorner(used, used), false);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace

ValidationReport validate_jumpflow(const JumpFlowForm& jf, const ValidationOptions& opts) {
    ValidationReport rep;
    const int M = jf.M();
    rep.modes.resize(static_cast<std::size_t>(M));
    for (int q = 0; q < M; ++q) {
        auto& r = rep.modes[static_cast<std::size_t>(q)];
        const auto& dec = jf.dec(q);
        r.regular = true;
        r.nu = dec.nu();
        r.n_J = dec.n_J();
        if (!opts.check_stability || r.n_J == 0) {
            r.stable = true;
            continue;
        }
        if (r.n_J <= kDenseLimit) {
            Eigen::EigenSolver<Mat> es(dec.J_dense(), false);
            r.max_real_eig = es.eigenvalues().real().maxCoeff();
        } else {
            r.stability_sampled = true;
            r.max_real_eig = ritz_max_real(dec, 60);
        }
        r.stable = r.max_real_eig < 0.0;
    }
    for (int k = 0; k < M; ++k)
        for (int l = 0; l < M; ++l) {
            if (k == l) continue;
            PairReport pr;
            pr.k = k;
            pr.l = l;
            // One scale per series, never below the size of the transformed input
            // or output map, so series that vanish up to rounding stay negligible.
            const auto& ml = jf.mode(l);
            double scale_i = std::hypot(norm2(ml.B_J()), norm2(ml.B_N())), num_i = 0.0;
            for (int i = 0; i < jf.dec(l).nu(); ++i) {
                const Mat x = jf.mode(l).imp_series(i);
                scale_i = std::max(scale_i, norm2(x));
                num_i = std::max(num_i, norm2(jf.dec(k).Pi_apply(x)));
            }
            if (scale_i > 0.0) pr.residual_i = num_i / scale_i;
            const auto& dk = jf.dec(k);
            Mat npow = Mat::Identity(dk.n_N(), dk.n_N());
            double scale_ii = std::hypot(norm2(jf.mode(k).C_V()), norm2(jf.mode(k).C_W())), num_ii = 0.0;
            for (int i = 0; i < dk.nu(); ++i) {
                // (C^imp_k (E^imp_k)^i)^T = Φ_k G_k^{-T} (N^i)^T (C W_k)^T
                const Mat lhs_t = dk.Tinv_bottom_T(npow.transpose() * jf.mode(k).C_W().transpose());
                npow = dk.N() * npow;
                scale_ii = std::max(scale_ii, norm2(lhs_t));
                num_ii = std::max(num_ii, norm2(jf.dec(l).Pi_T_apply(lhs_t)));
            }
            if (scale_ii > 0.0) pr.residual_ii = num_ii / scale_ii;
            pr.assumption_i = pr.residual_i <= opts.tol_assume;
            pr.assumption_ii = pr.residual_ii <= opts.tol_assume;
            rep.pairs.push_back(pr);
        }
    return rep;
}

ValidationReport validate_system(const SwitchedSystem& sys, const ValidationOptions& opts,
                                 const QwfOptions& qwf) {
    sys.check();
    for (int j = 0; j < sys.M(); ++j) {
        const auto& md = sys.modes[static_cast<std::size_t>(j)];
        if (!regularity_check(Pencil{md.E, md.A}, 3, 1 + static_cast<std::uint64_t>(j)))
            throw NotRegular(kMod, "mode " + std::to_string(j + 1) + " failed the regularity check");
    }
    return validate_jumpflow(reformulate_jumpflow(sys, qwf), opts);
}

}  // namespace swmor
