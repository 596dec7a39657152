#include "swmor/wong_qwf.hpp"

#include "swmor/rng.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

namespace swmor {

namespace {

constexpr const char* kMod = "wong-qwf";

void check_square(const Pencil& p) {
    if (p.E.rows() != p.E.cols() || p.A.rows() != p.A.cols() || p.E.rows() != p.A.rows())
        throw DimensionMismatch(kMod, "E and A must be square of equal size");
}

double effective_rank_tol(const Pencil& p, double rank_tol) {
    return rank_tol > 0 ? rank_tol : default_rank_tol(std::max<Index>(p.n(), 1));
}

// ker E read off structurally when E = P blockdiag(M, 0) Q with exactly zero
// rows and columns and an invertible M.
struct KernelStructure {
    bool ok = false;
    std::vector<Index> zr, zc, nzr, nzc;
    std::shared_ptr<Eigen::SparseLU<SpMat>> lu;
};

KernelStructure detect_structure(const SpMat& e) {
    KernelStructure s;
    const Index n = e.rows();
    std::vector<char> row_nz(static_cast<std::size_t>(n), 0), col_nz(static_cast<std::size_t>(n), 0);
    for (Index k = 0; k < e.outerSize(); ++k)
        for (SpMat::InnerIterator it(e, k); it; ++it)
            if (it.value() != 0.0) {
                row_nz[static_cast<std::size_t>(it.row())] = 1;
                col_nz[static_cast<std::size_t>(it.col())] = 1;
            }
    for (Index i = 0; i < n; ++i) {
        (row_nz[static_cast<std::size_t>(i)] ? s.nzr : s.zr).push_back(i);
        (col_nz[static_cast<std::size_t>(i)] ? s.nzc : s.zc).push_back(i);
    }
    if (s.zr.size() != s.zc.size()) return s;
    const Index nd = static_cast<Index>(s.nzr.size());
    if (nd == 0) {
        s.ok = true;
        return s;
    }
    std::vector<Index> rmap(static_cast<std::size_t>(n), -1), cmap(static_cast<std::size_t>(n), -1);
    for (Index i = 0; i < nd; ++i) {
        rmap[static_cast<std::size_t>(s.nzr[static_cast<std::size_t>(i)])] = i;
        cmap[static_cast<std::size_t>(s.nzc[static_cast<std::size_t>(i)])] = i;
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (Index k = 0; k < e.outerSize(); ++k)
        for (SpMat::InnerIterator it(e, k); it; ++it)
            if (it.value() != 0.0)
                trips.emplace_back(rmap[static_cast<std::size_t>(it.row())],
                                   cmap[static_cast<std::size_t>(it.col())], it.value());
    SpMat m(nd, nd);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<SpMat>>();
    lu->compute(m);
    if (lu->info() != Eigen::Success) return s;
    CounterRng rng(7, 3);
    const Vec b = rng.normal_matrix(nd, 1).col(0);
    const Vec x = lu->solve(b);
    const double mnorm = m.norm();
    if (!x.allFinite() || x.norm() * mnorm > 1e-3 / kEps * b.norm()) return s;
    s.lu = lu;
    s.ok = true;
    return s;
}

void flag_ambiguous(bool ambiguous, const char* what) {
    if (ambiguous)
        throw ToleranceFailure(kMod, std::string("ambiguous rank decision in ") + what);
}

// Null space of a matrix with orthonormal-scale columns, absolute cut.
Mat null_abs(const Mat& m, double cut, const char* what) {
    const Index k = m.cols();
    if (k == 0) return Mat(0, 0);
    if (m.rows() == 0) return Mat::Identity(k, k);
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    Index r = 0;
    bool amb = false;
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) ++r;
        if (s(i) > cut / 10 && s(i) < cut * 10) amb = true;
    }
    flag_ambiguous(amb, what);
    return svd.matrixV().rightCols(k - r);
}

// Orthonormal basis of {x : E x ∈ span Y} (or E^T when transposed). Y orthonormal.
Mat preimage(const SpMat& e, const KernelStructure& ks, const Mat& y, bool transposed,
             double rank_tol) {
    const Index n = e.rows();
    if (ks.ok) {
        const auto& rz = transposed ? ks.zc : ks.zr;
        const auto& rnz = transposed ? ks.nzc : ks.nzr;
        const auto& cz = transposed ? ks.zr : ks.zc;
        const auto& cnz = transposed ? ks.nzr : ks.nzc;
        const Index nz = static_cast<Index>(rz.size());
        const Index nd = static_cast<Index>(rnz.size());
        Mat yz(nz, y.cols()), ynz(nd, y.cols());
        for (Index i = 0; i < nz; ++i) yz.row(i) = y.row(rz[static_cast<std::size_t>(i)]);
        for (Index i = 0; i < nd; ++i) ynz.row(i) = y.row(rnz[static_cast<std::size_t>(i)]);
        const Mat kern = null_abs(yz, rank_tol, "preimage");
        Mat out = Mat::Zero(n, kern.cols() + nz);
        if (kern.cols() > 0 && nd > 0) {
            const Mat rhs = ynz * kern;
            const Mat sol = transposed ? Mat(ks.lu->transpose().solve(rhs)) : Mat(ks.lu->solve(rhs));
            for (Index i = 0; i < nd; ++i)
                out.block(cnz[static_cast<std::size_t>(i)], 0, 1, kern.cols()) = sol.row(i);
        }
        for (Index i = 0; i < nz; ++i) out(cz[static_cast<std::size_t>(i)], kern.cols() + i) = 1.0;
        auto rb = range_basis(out, rank_tol);
        flag_ambiguous(rb.ambiguous, "preimage basis");
        return rb.basis;
    }
    const Mat ed = transposed ? Mat(Mat(e).transpose()) : Mat(e);
    Mat stacked(n, n + y.cols());
    stacked << ed, -y;
    auto nb = null_basis(stacked, rank_tol);
    flag_ambiguous(nb.ambiguous, "generic preimage");
    auto rb = range_basis(nb.basis.topRows(n), rank_tol);
    flag_ambiguous(rb.ambiguous, "generic preimage basis");
    return rb.basis;
}

Mat image_basis(const SpMat& a, const Mat& x, bool transposed, double rank_tol) {
    if (x.cols() == 0) return Mat(a.rows(), 0);
    const Mat img = transposed ? Mat(a.transpose() * x) : Mat(a * x);
    auto rb = range_basis(img, rank_tol);
    flag_ambiguous(rb.ambiguous, "image basis");
    return rb.basis;
}

}  // namespace

bool regularity_check(const Pencil& p, int trials, std::uint64_t seed) {
    check_square(p);
    const Index n = p.n();
    if (n == 0) return true;
    using Cx = std::complex<double>;
    using CSp = Eigen::SparseMatrix<Cx>;
    const double en = p.E.norm();
    const double an = p.A.norm();
    const double radius = en > 0 ? (an > 0 ? an / en : 1.0) : 1.0;
    CounterRng rng(seed, 0xBEEF);
    for (int t = 0; t < trials; ++t) {
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        const Cx s = std::polar(radius, theta);
        CSp m = (p.E.cast<Cx>() * s - p.A.cast<Cx>()).pruned();
        m.makeCompressed();
        if (m.nonZeros() == 0) continue;
        Eigen::SparseLU<CSp> lu;
        lu.compute(m);
        if (lu.info() != Eigen::Success) continue;
        Eigen::VectorXcd b(n);
        for (Index i = 0; i < n; ++i) b(i) = Cx(rng.normal(), rng.normal());
        const Eigen::VectorXcd x = lu.solve(b);
        if (!x.allFinite()) continue;
        const double growth = x.norm() * m.norm() / b.norm();
        if (growth < 1e-3 / (static_cast<double>(n) * kEps)) return true;
    }
    return false;
}

Mat WongSpaces::Vhat() const {
    const Index n = Phi.rows();
    if (Phi.cols() == 0) return Mat::Identity(n, n);
    Eigen::HouseholderQR<Mat> qr(Phi);
    Mat e = Mat::Zero(n, n - Phi.cols());
    e.bottomRows(n - Phi.cols()).setIdentity();
    return qr.householderQ() * e;
}

WongSpaces wong_sequences(const Pencil& p, double rank_tol) {
    check_square(p);
    const double tol = effective_rank_tol(p, rank_tol);
    const Index n = p.n();
    WongSpaces ws;
    const KernelStructure ks = detect_structure(p.E);
    ws.structured = ks.ok;

    // Y^{i+1} = A^T (E^T)^{-1}(Y^i), Y^0 = {0}; 𝒱^i = (Y^i)^⊥.
    Mat y(n, 0);
    for (int step = 0;; ++step) {
        if (step > kNuMax + 1) throw ToleranceFailure(kMod, "V-sequence did not stabilize");
        const Mat pre = preimage(p.E, ks, y, true, tol);
        const Mat next = image_basis(p.A, pre, true, tol);
        ws.v_steps = step + 1;
        if (next.cols() == y.cols()) {
            y = next;
            break;
        }
        y = next;
    }
    // W^{j+1} = E^{-1}(A W^j), W^0 = {0}.
    Mat w(n, 0);
    for (int step = 0;; ++step) {
        if (step > kNuMax + 1) throw ToleranceFailure(kMod, "W-sequence did not stabilize");
        const Mat img = image_basis(p.A, w, false, tol);
        const Mat next = preimage(p.E, ks, img, false, tol);
        ws.w_steps = step + 1;
        if (next.cols() == w.cols()) {
            w = next;
            break;
        }
        w = next;
    }
    if (y.cols() != w.cols())
        throw NotRegular(kMod, "dim V* + dim W* = " + std::to_string(n - y.cols() + w.cols()) +
                                   " differs from n = " + std::to_string(n));
    ws.Phi = y;
    ws.What = w;
    return ws;
}

struct ModeDecomposition::Impl {
    Pencil p;
    WongSpaces ws;
    double rank_tol = 0;
    Index n = 0, nJ = 0, nN = 0;
    Eigen::HouseholderQR<Mat> phi_qr;
    Eigen::PartialPivLU<Mat> g_lu;
    Mat G;
    std::unique_ptr<Eigen::SparseLU<SpMat>> k_lu;
    Mat N;
    int nu = 0;
    mutable std::once_flag a_once;
    mutable std::unique_ptr<Eigen::SparseLU<SpMat>> a_lu;

    Mat q2(const Mat& c) const {
        if (nN == 0) return c;
        Mat full = Mat::Zero(n, c.cols());
        full.bottomRows(nJ) = c;
        return phi_qr.householderQ() * full;
    }
    Mat q2t(const Mat& x) const {
        if (nN == 0) return x;
        const Mat full = phi_qr.householderQ().transpose() * x;
        return full.bottomRows(nJ);
    }
    Mat ginv_phit(const Mat& x) const {
        if (nN == 0) return Mat(0, x.cols());
        return g_lu.solve(ws.Phi.transpose() * x);
    }
    std::pair<Mat, Mat> s_solve(const Mat& b) const {
        if (nN == 0) {
            // S = (E Vhat)^{-1} with Vhat = I.
            Mat rhs = b;
            Mat y = k_lu->solve(rhs);
            return {y, Mat(0, b.cols())};
        }
        Mat rhs = Mat::Zero(n + nN, b.cols());
        rhs.topRows(n) = b;
        const Mat sol = k_lu->solve(rhs);
        return {q2t(sol.topRows(n)), sol.bottomRows(nN)};
    }
    Mat s_solve_t(const Mat& d1, const Mat& d2) const {
        if (nN == 0) return k_lu->transpose().solve(d1);
        const Index cols = std::max(d1.cols(), d2.cols());
        Mat rhs = Mat::Zero(n + nN, cols);
        if (d1.size()) rhs.topRows(n) = q2(d1);
        if (d2.size()) rhs.bottomRows(nN) = d2;
        const Mat sol = k_lu->transpose().solve(rhs);
        return sol.topRows(n);
    }
    Eigen::SparseLU<SpMat>& a_factor() const {
        std::call_once(a_once, [this] {
            auto lu = std::make_unique<Eigen::SparseLU<SpMat>>();
            SpMat a = p.A;
            a.makeCompressed();
            lu->compute(a);
            if (lu->info() != Eigen::Success) throw SingularOperator(kMod, "A is singular");
            a_lu = std::move(lu);
        });
        return *a_lu;
    }
};

ModeDecomposition::ModeDecomposition(const Pencil& p, const QwfOptions& opts) {
    check_square(p);
    auto impl = std::make_shared<Impl>();
    impl->p = p;
    impl->p.E.makeCompressed();
    impl->p.A.makeCompressed();
    impl->rank_tol = effective_rank_tol(p, opts.rank_tol);
    impl->ws = wong_sequences(p, impl->rank_tol);
    impl->n = p.n();
    impl->nN = impl->ws.n_N();
    impl->nJ = impl->n - impl->nN;
    const Index n = impl->n, nN = impl->nN;
    if (opts.basis_seed != 0 && nN > 0) {
        CounterRng rng(opts.basis_seed, 11);
        impl->ws.Phi = impl->ws.Phi * rng.orthogonal(nN);
        impl->ws.What = impl->ws.What * rng.orthogonal(nN);
    }
    if (nN > 0) {
        impl->phi_qr.compute(impl->ws.Phi);
        impl->G = impl->ws.Phi.transpose() * impl->ws.What;
        impl->g_lu.compute(impl->G);
        if (sigma_min(impl->G) <= 1e3 * kEps)
            throw NotRegular(kMod, "V* and W* are not complementary");
    }
    // Bordered system [[E, A What], [Phi^T, 0]]; for n_N = 0 it is just E.
    SpMat k(n + nN, n + nN);
    {
        std::vector<Eigen::Triplet<double>> trips;
        for (Index c = 0; c < impl->p.E.outerSize(); ++c)
            for (SpMat::InnerIterator it(impl->p.E, c); it; ++it)
                trips.emplace_back(it.row(), it.col(), it.value());
        if (nN > 0) {
            const Mat aw = impl->p.A * impl->ws.What;
            for (Index j = 0; j < nN; ++j)
                for (Index i = 0; i < n; ++i) {
                    if (aw(i, j) != 0.0) trips.emplace_back(i, n + j, aw(i, j));
                    if (impl->ws.Phi(i, j) != 0.0) trips.emplace_back(n + j, i, impl->ws.Phi(i, j));
                }
        }
        k.setFromTriplets(trips.begin(), trips.end());
        k.makeCompressed();
    }
    impl->k_lu = std::make_unique<Eigen::SparseLU<SpMat>>();
    if (n + nN > 0) {
        impl->k_lu->compute(k);
        if (impl->k_lu->info() != Eigen::Success)
            throw SingularTransform(kMod, "[E Vhat, A What] is singular");
        CounterRng rng(5, 9);
        const Mat b = rng.normal_matrix(n + nN, 1);
        const Mat x = impl->k_lu->solve(b);
        if (!x.allFinite() || x.norm() * k.norm() > 1e-3 / kEps * b.norm())
            throw SingularTransform(kMod, "[E Vhat, A What] is numerically singular");
    }
    if (nN > 0) {
        const Mat ew = impl->p.E * impl->ws.What;
        impl->N = impl->s_solve(ew).second;
        const double nn = impl->N.norm();
        const double cut = impl->rank_tol * std::max(1.0, nn);
        Mat pk = impl->N;
        int nu = 1;
        while (pk.norm() > cut) {
            ++nu;
            if (nu > kNuMax) throw ToleranceFailure(kMod, "nilpotency index exceeds nu_max");
            pk = pk * impl->N;
        }
        impl->nu = nu;
    } else {
        impl->N = Mat(0, 0);
        impl->nu = 0;
    }
    impl_ = std::move(impl);
}

Index ModeDecomposition::n() const { return impl_->n; }
Index ModeDecomposition::n_J() const { return impl_->nJ; }
Index ModeDecomposition::n_N() const { return impl_->nN; }
int ModeDecomposition::nu() const { return impl_->nu; }
double ModeDecomposition::rank_tol() const { return impl_->rank_tol; }
const SpMat& ModeDecomposition::E() const { return impl_->p.E; }
const SpMat& ModeDecomposition::A() const { return impl_->p.A; }
const Mat& ModeDecomposition::What() const { return impl_->ws.What; }
const Mat& ModeDecomposition::Phi() const { return impl_->ws.Phi; }
const Mat& ModeDecomposition::N() const { return impl_->N; }
const WongSpaces& ModeDecomposition::spaces() const { return impl_->ws; }

Mat ModeDecomposition::V_apply(const Mat& c) const { return impl_->q2(c); }
Mat ModeDecomposition::Vt_apply(const Mat& x) const { return impl_->q2t(x); }
Mat ModeDecomposition::Vhat() const { return impl_->q2(Mat::Identity(impl_->nJ, impl_->nJ)); }

Mat ModeDecomposition::Tinv_top(const Mat& x) const {
    if (impl_->nN == 0) return x;
    return impl_->q2t(x - impl_->ws.What * impl_->ginv_phit(x));
}

Mat ModeDecomposition::Tinv_top_T(const Mat& c) const {
    const Mat v = impl_->q2(c);
    if (impl_->nN == 0) return v;
    const Mat t = impl_->g_lu.transpose().solve(impl_->ws.What.transpose() * v);
    return v - impl_->ws.Phi * t;
}

Mat ModeDecomposition::Tinv_bottom(const Mat& x) const { return impl_->ginv_phit(x); }

Mat ModeDecomposition::Tinv_bottom_T(const Mat& d) const {
    if (impl_->nN == 0) return Mat::Zero(impl_->n, d.cols());
    return impl_->ws.Phi * Mat(impl_->g_lu.transpose().solve(d));
}

Mat ModeDecomposition::T_apply(const Mat& z) const {
    Mat out = impl_->q2(z.topRows(impl_->nJ));
    if (impl_->nN > 0) out += impl_->ws.What * z.bottomRows(impl_->nN);
    return out;
}

std::pair<Mat, Mat> ModeDecomposition::S_solve(const Mat& b) const { return impl_->s_solve(b); }
Mat ModeDecomposition::S_solve_T(const Mat& d1, const Mat& d2) const {
    return impl_->s_solve_t(d1, d2);
}

Mat ModeDecomposition::J_apply(const Mat& c) const {
    return impl_->s_solve(impl_->p.A * impl_->q2(c)).first;
}

Mat ModeDecomposition::Jt_apply(const Mat& c) const {
    const Mat d = impl_->s_solve_t(c, Mat(0, c.cols()));
    return impl_->q2t(impl_->p.A.transpose() * d);
}

LinOp ModeDecomposition::J_op() const {
    const ModeDecomposition self = *this;
    return LinOp{n_J(), n_J(), [self](const Mat& x) { return self.J_apply(x); },
                 [self](const Mat& x) { return self.Jt_apply(x); }};
}

Mat ModeDecomposition::J_dense() const { return J_apply(Mat::Identity(n_J(), n_J())); }

LinOp ModeDecomposition::Jinv_op() const {
    const ModeDecomposition self = *this;
    auto fwd = [self](const Mat& v) -> Mat {
        auto& lu = self.impl_->a_factor();
        const Mat rhs = self.impl_->p.E * self.impl_->q2(v);
        return self.Tinv_top(lu.solve(rhs));
    };
    auto bwd = [self](const Mat& v) -> Mat {
        auto& lu = self.impl_->a_factor();
        const Mat t = lu.transpose().solve(self.Tinv_top_T(v));
        return self.impl_->q2t(self.impl_->p.E.transpose() * t);
    };
    return LinOp{n_J(), n_J(), fwd, bwd};
}

Mat ModeDecomposition::Pi_apply(const Mat& x) const {
    if (impl_->nN == 0) return x;
    return x - impl_->ws.What * impl_->ginv_phit(x);
}

Mat ModeDecomposition::Pi_T_apply(const Mat& x) const {
    if (impl_->nN == 0) return x;
    return x - Tinv_bottom_T(impl_->ws.What.transpose() * x);
}

Mat ModeDecomposition::Adiff_apply(const Mat& x) const {
    return impl_->q2(impl_->s_solve(impl_->p.A * x).first);
}

Mat ModeDecomposition::Eimp_apply(const Mat& x) const {
    if (impl_->nN == 0) return Mat::Zero(x.rows(), x.cols());
    return impl_->ws.What * (impl_->N * impl_->ginv_phit(x));
}

Mat ModeDecomposition::T_dense() const {
    Mat t(n(), n());
    t << Vhat(), What();
    return t;
}

Mat ModeDecomposition::S_dense() const {
    auto [top, bot] = S_solve(Mat::Identity(n(), n()));
    Mat s(n(), n());
    s << top, bot;
    return s;
}

Mat ModeDecomposition::Pi_dense() const { return Pi_apply(Mat::Identity(n(), n())); }

double ModeDecomposition::reconstruction_residual() const {
    const Index nJ = n_J(), nN = n_N();
    const Mat t = T_dense();
    const Mat et = E() * t;
    const Mat at = A() * t;
    auto [se_top, se_bot] = S_solve(et);
    auto [sa_top, sa_bot] = S_solve(at);
    Mat se(n(), n()), sa(n(), n());
    se << se_top, se_bot;
    sa << sa_top, sa_bot;
    Mat te = Mat::Zero(n(), n()), ta = Mat::Zero(n(), n());
    te.topLeftCorner(nJ, nJ).setIdentity();
    if (nN > 0) te.bottomRightCorner(nN, nN) = N();
    ta.topLeftCorner(nJ, nJ) = J_dense();
    ta.bottomRightCorner(nN, nN).setIdentity();
    return (se - te).norm() + (sa - ta).norm();
}

ProjectorSet::ProjectorSet(ModeDecomposition dec, Mat B, Mat C)
    : dec_(std::move(dec)), B_(std::move(B)), C_(std::move(C)) {
    if (B_.rows() != dec_.n() || C_.cols() != dec_.n())
        throw DimensionMismatch(kMod, "B or C does not match the pencil dimension");
    auto [bj, bn] = dec_.S_solve(B_);
    BJ_ = std::move(bj);
    BN_ = std::move(bn);
    CV_ = dec_.Vt_apply(C_.transpose()).transpose();
    CW_ = C_ * dec_.What();
}

Mat ProjectorSet::Bdiff() const { return dec_.V_apply(BJ_); }
Mat ProjectorSet::Bimp() const { return dec_.What() * BN_; }

Mat ProjectorSet::Cimp() const {
    if (dec_.n_N() == 0) return Mat::Zero(C_.rows(), C_.cols());
    return CW_ * dec_.Tinv_bottom(Mat::Identity(dec_.n(), dec_.n()));
}

Mat ProjectorSet::Cdiff() const { return C_ - Cimp(); }

Mat ProjectorSet::imp_series(int i) const {
    if (dec_.n_N() == 0) return Mat::Zero(dec_.n(), B_.cols());
    Mat x = BN_;
    for (int k = 0; k < i; ++k) x = dec_.N() * x;
    return dec_.What() * x;
}

Mat ProjectorSet::feedthrough() const {
    const int nu = dec_.nu();
    const Index p = C_.rows(), m = B_.cols();
    Mat d(p, m * nu);
    Mat x = BN_;
    for (int i = 0; i < nu; ++i) {
        d.middleCols(i * m, m) = -(CW_ * x);
        x = dec_.N() * x;
    }
    return d;
}

Mat ProjectorSet::Adiff() const { return dec_.Adiff_apply(Mat::Identity(dec_.n(), dec_.n())); }
Mat ProjectorSet::Eimp() const { return dec_.Eimp_apply(Mat::Identity(dec_.n(), dec_.n())); }

std::pair<ModeDecomposition, ProjectorSet> qwf_decompose(const Pencil& p, const Mat& B,
                                                         const Mat& C, const QwfOptions& opts) {
    ModeDecomposition dec(p, opts);
    ProjectorSet proj(dec, B, C);
    return {dec, proj};
}

}  // namespace swmor
