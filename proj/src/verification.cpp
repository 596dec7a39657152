#include "swmor/verification.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace swmor {

namespace {

constexpr const char* kMod = "verification";

Mat vec_to_mat(const Vec& v, Index n) { return Eigen::Map<const Mat>(v.data(), n, n); }

Mat lyapunov_kron(const Mat& a) {
    const Index n = a.rows();
    const Mat id = Mat::Identity(n, n);
    return Eigen::kroneckerProduct(id, a).eval() + Eigen::kroneckerProduct(a, id).eval();
}

// Basis of U ∩ W for orthonormal U, W.
Mat intersect(const Mat& u, const Mat& w, double tol) {
    if (u.cols() == 0 || w.cols() == 0) return Mat(u.rows(), 0);
    Mat uw(u.rows(), u.cols() + w.cols());
    uw << u, -w;
    const RankResult ns = null_basis(uw, tol);
    if (ns.basis.cols() == 0) return Mat(u.rows(), 0);
    return orth(u * ns.basis.topRows(u.cols()), tol);
}

Mat sum_spaces(const Mat& u, const Mat& w, double tol) {
    Mat uw(u.rows(), u.cols() + w.cols());
    uw << u, w;
    if (uw.cols() == 0) return uw;
    return orth(uw, tol);
}

Mat complement(const Mat& u, Index n, double tol) {
    if (u.cols() == 0) return Mat::Identity(n, n);
    return null_basis(u.transpose(), tol).basis;
}

}  // namespace

Mat gle_kron_oracle(const Mat& a, const std::vector<Mat>& f, const Mat& b) {
    const Index n = a.rows();
    if (n > 60) throw TooLargeForDenseCheck(kMod, "Kronecker oracle limited to n <= 60");
    Mat op = lyapunov_kron(a);
    for (const Mat& fj : f) op += Eigen::kroneckerProduct(fj, fj).eval();
    Eigen::FullPivLU<Mat> lu(op);
    if (!lu.isInvertible()) throw SingularOperator(kMod, "L + Pi is singular");
    const Mat q = b * b.transpose();
    const Vec rhs = -Eigen::Map<const Vec>(q.data(), n * n);
    const Mat x = vec_to_mat(lu.solve(rhs), n);
    return 0.5 * (x + x.transpose());
}

Mat gle_kron_oracle(const GleProblem& p) {
    std::vector<Mat> f;
    for (const auto& op : p.F) f.push_back(op.materialize());
    return gle_kron_oracle(p.A.materialize(), f, p.B);
}

Mat dense_lyapunov_oracle(const Mat& a, const Mat& b) {
    if (a.rows() > kDenseLimit) throw TooLargeForDenseCheck(kMod, "dense Lyapunov limited to n <= 500");
    Eigen::EigenSolver<Mat> es(a, false);
    if (a.rows() > 0 && es.eigenvalues().real().maxCoeff() >= 0.0)
        throw UnstableA(kMod, "A has an eigenvalue with nonnegative real part");
    return solve_lyapunov_dense(a, b * b.transpose());
}

double kron_contraction(const Mat& a, const std::vector<Mat>& f) {
    const Index n = a.rows();
    if (n > 30) throw TooLargeForDenseCheck(kMod, "contraction oracle limited to n <= 30");
    Mat pi = Mat::Zero(n * n, n * n);
    for (const Mat& fj : f) pi += Eigen::kroneckerProduct(fj, fj).eval();
    const Mat m = lyapunov_kron(a).fullPivLu().solve(pi);
    return norm2(m);
}

Mat invariant_closure(const Mat& a, const Mat& b, double rank_tol) {
    const Index n = a.rows();
    Mat k(n, 0);
    Mat blk = b;
    for (Index i = 0; i < n && blk.cols() > 0; ++i) {
        const Mat next = sum_spaces(k, blk, rank_tol);
        if (next.cols() == k.cols()) break;
        k = next;
        blk = a * k;
    }
    return k;
}

Mat unobservable_subspace(const Mat& a, const Mat& c, double rank_tol) {
    const Index n = a.rows();
    // ker [C; CA; ...; CA^{n-1}] is the orthogonal complement of the
    // A^T-invariant closure of im(C^T).
    const Mat obs = invariant_closure(a.transpose(), c.transpose(), rank_tol);
    return complement(obs, n, rank_tol);
}

ReachObsSets reachable_observable_sets(const JumpFlowForm& jf, const SwitchingSignal& signal,
                                       bool use_projectors, double rank_tol) {
    const Index n = jf.n();
    if (n > 60) throw TooLargeForDenseCheck(kMod, "subspace recursions limited to n <= 60");
    signal.check(jf.M());
    const std::size_t kappa = signal.events.size() - 1;

    struct ModeData {
        Mat adiff, pi, reach, unobs;
    };
    std::vector<ModeData> md(static_cast<std::size_t>(jf.M()));
    for (int q = 0; q < jf.M(); ++q) {
        const auto& ps = jf.mode(q);
        auto& d = md[static_cast<std::size_t>(q)];
        d.adiff = ps.Adiff();
        d.pi = use_projectors ? ps.Pi() : Mat::Identity(n, n);
        d.reach = invariant_closure(d.adiff, ps.Bdiff(), rank_tol);
        d.unobs = unobservable_subspace(d.adiff, ps.Cdiff(), rank_tol);
    }
    auto tau = [&](std::size_t k) {
        const double next = k + 1 < signal.events.size() ? signal.events[k + 1].t : signal.tFinal;
        return next - signal.events[k].t;
    };
    auto mode = [&](std::size_t k) -> const ModeData& {
        return md[static_cast<std::size_t>(signal.events[k].mode)];
    };

    Mat m = mode(0).reach;
    for (std::size_t k = 1; k <= kappa; ++k) {
        const ModeData& d = mode(k);
        const Mat e = (d.adiff * tau(k)).exp();
        const Mat moved = m.cols() ? orth(e * d.pi * m, rank_tol) : m;
        m = sum_spaces(d.reach, moved, rank_tol);
    }

    Mat nk = mode(kappa).unobs;
    for (std::size_t k = kappa; k-- > 0;) {
        const ModeData& d = mode(k);
        const ModeData& dn = mode(k + 1);
        // Preimage of N_{k+1} under Pi_{q_{k+1}}: kernel of (I - P_N) Pi.
        const Mat pn = nk * nk.transpose();
        const Mat pre = null_basis((Mat::Identity(n, n) - pn) * dn.pi, rank_tol).basis;
        const Mat e = (-d.adiff * tau(k)).exp();
        const Mat back = pre.cols() ? orth(e * pre, rank_tol) : pre;
        nk = intersect(d.unobs, back, rank_tol);
    }
    return ReachObsSets{m, complement(nk, n, rank_tol)};
}

namespace {

// {x : M x in im(Q)} for orthonormal Q.
Mat preimage(const Mat& m, const Mat& q, double tol) {
    Mat r = m;
    if (q.cols() > 0) r -= q * (q.transpose() * m);
    return null_basis(r, tol).basis;
}

}  // namespace

DenseQwf dense_qwf(const Mat& E, const Mat& A, double rank_tol) {
    const Index n = A.rows();
    if (n > 60) throw TooLargeForDenseCheck(kMod, "dense quasi-Weierstrass oracle needs n <= 60");
    Mat v = Mat::Identity(n, n);
    for (Index it = 0; it <= n; ++it) {
        const Mat next = preimage(A, orth(E * v, rank_tol), rank_tol);
        const bool done = next.cols() == v.cols();
        v = next;
        if (done) break;
    }
    Mat w(n, 0);
    int nu = 0;
    for (Index it = 0; it <= n; ++it) {
        const Mat next = preimage(E, orth(A * w, rank_tol), rank_tol);
        if (next.cols() == w.cols()) break;
        w = next;
        ++nu;
    }
    if (v.cols() + w.cols() != n) throw NotRegular(kMod, "Wong limits do not span the state space");
    DenseQwf q;
    q.n_J = v.cols();
    q.nu = nu;
    q.T.resize(n, n);
    q.T << v, w;
    Mat ew(n, n);
    ew << E * v, A * w;
    q.S = ew.inverse();
    const Mat se = q.S * E * q.T, sa = q.S * A * q.T;
    q.J = sa.topLeftCorner(q.n_J, q.n_J);
    q.N = se.bottomRightCorner(n - q.n_J, n - q.n_J);
    return q;
}

SwitchedOde dense_qwf_ode(const SwitchedSystem& sys, double rank_tol) {
    sys.check();
    const int M = sys.M();
    const Index n = sys.n(), m = sys.m();
    std::vector<DenseQwf> d;
    for (int q = 0; q < M; ++q) {
        const auto& md = sys.modes[static_cast<std::size_t>(q)];
        d.push_back(dense_qwf(Mat(md.E), Mat(md.A), rank_tol));
    }
    int nu_max = 0;
    for (const auto& x : d) nu_max = std::max(nu_max, x.nu);

    SwitchedOde s;
    s.m = m;
    s.p = sys.p();
    s.nu_max = nu_max;
    std::vector<Mat> pi, ximp;
    for (int q = 0; q < M; ++q) {
        const auto& md = sys.modes[static_cast<std::size_t>(q)];
        const DenseQwf& x = d[static_cast<std::size_t>(q)];
        const Index nJ = x.n_J, nN = n - nJ;
        const Mat tinv = x.T.inverse();
        const Mat v = x.T.leftCols(nJ), w = x.T.rightCols(nN);
        const Mat sb = x.S * md.B;
        pi.push_back(v * tinv.topRows(nJ));
        s.A.push_back(LinOp::dense(v * x.J * tinv.topRows(nJ)));
        s.B.push_back(v * sb.topRows(nJ));
        s.C.push_back(md.C);
        // x_imp = -sum_i (E^imp)^i B^imp u^{(i)}
        const Mat eimp = w * x.N * tinv.bottomRows(nN);
        Mat col = w * sb.bottomRows(nN);
        Mat xi = Mat::Zero(n, m * nu_max);
        for (int i = 0; i < x.nu; ++i) {
            xi.middleCols(i * m, m) = -col;
            col = eimp * col;
        }
        ximp.push_back(xi);
        s.D.push_back(md.C * xi);
    }
    const auto sM = static_cast<std::size_t>(M);
    s.jump.assign(sM, std::vector<LinOp>(sM));
    s.input_jump.assign(sM, std::vector<Mat>(sM));
    s.imp_state.assign(sM, std::vector<std::vector<Mat>>(sM));
    s.imp_input = s.imp_state;
    for (std::size_t k = 0; k < sM; ++k)
        for (std::size_t l = 0; l < sM; ++l) {
            if (k == l) continue;
            s.jump[k][l] = LinOp::dense(pi[k]);
            s.input_jump[k][l] = pi[k] * ximp[l];
        }
    return s;
}

}  // namespace swmor
