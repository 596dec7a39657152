#include "swmor/gle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace swmor {

namespace {

constexpr const char* kMod = "gle-solver";

// Largest singular value of an operator: dense SVD when small, Lanczos on F^T F otherwise.
double sigma_max_op(const LinOp& f) {
    if (f.rows == 0 || f.cols == 0) return 0.0;
    if (f.cols <= kDenseLimit) return norm2(f.materialize());
    const double lam = lanczos_max_eig(
        [&](const Vec& v) { return Vec(f.applyT(f.apply(v))); }, f.cols, 1e-8, 300, 7);
    return std::sqrt(std::max(lam, 0.0));
}

double sigma_min_op(const GleProblem& p) {
    const Index n = p.n();
    if (n <= kDenseLimit) return sigma_min(p.A.materialize());
    if (!p.Ainv) throw InvalidArgument(kMod, "an inverse operator is required for n > 500");
    const LinOp& inv = *p.Ainv;
    const double lam = lanczos_max_eig(
        [&](const Vec& v) { return Vec(inv.apply(inv.applyT(v))); }, n, 1e-6, 300, 11);
    if (!(lam > 0.0)) throw SingularOperator(kMod, "A^{-1} estimate vanished");
    return 1.0 / std::sqrt(lam);
}

Mat scaled_block(const Mat& m, double s) { return m / std::sqrt(s); }

LinOp scaled_op(const LinOp& f, double s) {
    const double c = 1.0 / std::sqrt(s);
    return LinOp{f.rows, f.cols, [f, c](const Mat& x) { return Mat(c * f.apply(x)); },
                 [f, c](const Mat& x) { return Mat(c * f.applyT(x)); }};
}

// Residual of the projected solution written in the basis [V, Vnew]:
// K = Hbar Y E1^T + E1 Y Hbar^T + E1 b b^T E1^T.
double projected_residual(const Mat& hbar, const Mat& y, const Mat& bproj) {
    const Index d = y.rows();
    Mat k = Mat::Zero(hbar.rows(), hbar.rows());
    const Mat hy = hbar * y;
    k.leftCols(d) += hy;
    k.topRows(d) += hy.transpose();
    k.topLeftCorner(d, d) += bproj * bproj.transpose();
    return k.norm();
}

struct Truncation {
    Mat coeff;  // d x r, Y ≈ coeff coeff^T
    double res = 0.0;
    double dropped = 0.0;
};

// Keep the leading eigenpairs of Y; start from the trunc_tol cut and add more
// until the exact truncated residual fits the budget.
Truncation truncate_projected(const Mat& y, const Mat& hbar, const Mat& bproj, double extra,
                              double trunc_tol, double budget) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (y + y.transpose()));
    const Vec lam = es.eigenvalues().reverse();
    const Mat u = es.eigenvectors().rowwise().reverse();
    const Index d = lam.size();
    Index pos = 0;
    while (pos < d && lam(pos) > 0.0) ++pos;
    Index keep = 0;
    while (keep < pos && lam(keep) >= trunc_tol) ++keep;
    auto build = [&](Index r) {
        Truncation t;
        t.coeff = u.leftCols(r) * lam.head(r).cwiseSqrt().asDiagonal();
        const Mat yt = t.coeff * t.coeff.transpose();
        t.res = projected_residual(hbar, yt, bproj) + extra;
        t.dropped = r < d ? std::max(0.0, lam(r)) : 0.0;
        return t;
    };
    Truncation t = build(keep);
    Index step = 1;
    while (t.res > budget && keep < pos) {
        keep = std::min(pos, keep + step);
        step *= 2;
        t = build(keep);
    }
    return t;
}

// Column compression of a right-hand side factor. Singular values are dropped
// from the bottom while the Frobenius change in B B^T stays below `budget`.
Mat compress_rhs(const Mat& b, double budget, double& err) {
    err = 0.0;
    if (b.cols() == 0) return b;
    Eigen::HouseholderQR<Mat> qr(b);
    const Index k = std::min(b.rows(), b.cols());
    const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Mat> svd(r, Eigen::ComputeThinU);
    const Vec& s = svd.singularValues();
    Index keep = s.size();
    double acc = 0.0;
    while (keep > 0) {
        const double s4 = std::pow(s(keep - 1), 4);
        if (acc + s4 > budget * budget) break;
        acc += s4;
        --keep;
    }
    err = std::sqrt(acc);
    const Mat q = qr.householderQ() * Mat::Identity(b.rows(), k);
    return q * svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal();
}

}  // namespace

bool GleProblem::has_coupling() const { return beta > 0.0; }

double GleProblem::gamma() const {
    if (contraction < 0.0) return 1.0;
    if (contraction >= 1.0) return std::numeric_limits<double>::infinity();
    return contraction / (1.0 - contraction);
}

void compute_constants(GleProblem& p) {
    for (const auto& f : p.F)
        if (f.rows != p.n() || f.cols != p.n())
            throw DimensionMismatch(kMod, "F_j must be square of the size of A");
    if (p.B.rows() != p.n()) throw DimensionMismatch(kMod, "B must have n rows");
    p.sigma_min_A = sigma_min_op(p);
    if (!(p.sigma_min_A > 0.0)) throw SingularOperator(kMod, "sigma_min(A) = 0");
    double sum = 0.0;
    for (const auto& f : p.F) sum += std::pow(sigma_max_op(f), 2);
    p.beta = sum / (2.0 * p.sigma_min_A);
    p.contraction = p.beta;
}

GleProblem scale_problem(const GleProblem& p, double delta) {
    if (!(delta > 0.0)) throw NonPositiveDelta(kMod, "delta must be positive");
    GleProblem q = p;
    if (q.sigma_min_A < 0.0) compute_constants(q);
    const double s = q.beta + delta;
    for (auto& f : q.F) f = scaled_op(f, s);
    q.B = scaled_block(q.B, s);
    q.scale = p.scale * s;
    q.contraction = q.beta / s;
    q.beta = q.beta / s;
    q.scaled = true;
    return q;
}

double lyap_error_bound(double res_fro, double sigma_min_A) {
    if (!(sigma_min_A > 0.0)) throw InvalidArgument(kMod, "sigma_min must be positive");
    return res_fro / (2.0 * sigma_min_A);
}

LyapResult solve_lyapunov_dense_factor(const Mat& a, const Mat& b) {
    const Index n = a.rows();
    LyapResult out;
    out.basis_dim = n;
    out.steps = 1;
    const Mat q = b * b.transpose();
    const Mat x = solve_lyapunov_dense(a, q);
    Eigen::SelfAdjointEigenSolver<Mat> es(x);
    const Vec lam = es.eigenvalues().reverse();
    const Mat u = es.eigenvectors().rowwise().reverse();
    const double cut = lam.size() ? std::max(0.0, lam(0)) * kEps * static_cast<double>(n) : 0.0;
    Index keep = 0;
    while (keep < lam.size() && lam(keep) > cut) ++keep;
    out.Z = u.leftCols(keep) * lam.head(keep).cwiseSqrt().asDiagonal();
    const Mat xz = out.Z * out.Z.transpose();
    out.res_fro = (a * xz + xz * a.transpose() + q).norm();
    out.dropped_eig = keep < lam.size() ? std::max(0.0, lam(keep)) : 0.0;
    return out;
}

LyapResult solve_lyapunov_galerkin(const LinOp& a, const Mat& b, const LyapOptions& opts) {
    const Index n = a.rows;
    if (b.rows() != n) throw DimensionMismatch(kMod, "B must have n rows");
    LyapResult out;
    const double bnorm = b.norm();
    if (b.cols() == 0 || bnorm == 0.0) {
        out.Z = Mat(n, 0);
        return out;
    }
    const Index max_dim = opts.max_dim > 0 ? std::min(opts.max_dim, n) : n;
    constexpr double kDrop = 4.0 * kEps;

    Mat v = orthonormalize_against(Mat(n, 0), b, kDrop);
    const Mat b_coef0 = v.transpose() * b;
    const double b_drop = (b - v * b_coef0).norm();
    const double b_term = b_drop * (2.0 * bnorm + b_drop);

    Mat av(n, 0);      // A V
    Mat g(0, 0);       // V^T A V
    Index blk_start = 0;
    double drop_sq = 0.0;  // squared Frobenius norm of the discarded parts of A V
    double best = std::numeric_limits<double>::infinity();
    int stall = 0;

    for (int step = 1;; ++step) {
        const Index d = v.cols();
        const Mat vl = v.middleCols(blk_start, d - blk_start);
        const Mat avl = a.apply(vl);
        av.conservativeResize(n, d);
        av.rightCols(avl.cols()) = avl;

        // Extend V^T A V by the columns of the new block.
        const Index dold = g.rows();
        Mat g_new(d, d);
        if (dold > 0) {
            g_new.topLeftCorner(dold, dold) = g;
            g_new.block(dold, 0, d - dold, dold) = vl.transpose() * av.leftCols(dold);
        }
        g_new.rightCols(d - dold) = v.transpose() * avl;
        g = std::move(g_new);

        const Mat vnew = orthonormalize_against(v, avl, kDrop);
        const Mat hnew = vnew.transpose() * av;  // s x d
        const Mat resid_av = avl - v * (v.transpose() * avl) - vnew * (vnew.transpose() * avl);
        drop_sq += resid_av.squaredNorm();

        Mat hbar(d + vnew.cols(), d);
        hbar.topRows(d) = g;
        hbar.bottomRows(vnew.cols()) = hnew;
        Mat bproj = Mat::Zero(d, b.cols());
        bproj.topRows(b_coef0.rows()) = b_coef0;

        const Mat y = solve_lyapunov_dense(g, bproj * bproj.transpose());
        const double ynorm = norm2(y);
        const double extra = 2.0 * std::sqrt(drop_sq) * ynorm + b_term;
        const double res = projected_residual(hbar, y, bproj) + extra;
        const bool invariant = vnew.cols() == 0;

        if (res <= 0.5 * opts.tol_res || invariant || (d + vnew.cols() > max_dim && res <= opts.tol_res)) {
            const Truncation t =
                truncate_projected(y, hbar, bproj, extra, opts.trunc_tol, opts.tol_res);
            out.Z = v * t.coeff;
            out.res_fro = t.res;
            out.basis_dim = d;
            out.steps = step;
            out.dropped_eig = t.dropped;
            return out;
        }
        if (d + vnew.cols() > max_dim)
            throw MaxDimExceeded(kMod, "Krylov basis reached " + std::to_string(d) +
                                           " columns with residual " + std::to_string(res));
        if (res < best) {
            best = res;
            stall = 0;
        } else if (++stall >= opts.stall_limit) {
            throw StagnationError(kMod, "residual stalled at " + std::to_string(best));
        }
        blk_start = d;
        v.conservativeResize(n, d + vnew.cols());
        v.rightCols(vnew.cols()) = vnew;
    }
}

double aligned_factor_distance(const Mat& a, const Mat& b) {
    const Index w = std::max(a.cols(), b.cols());
    if (w == 0) return 0.0;
    Mat ap = Mat::Zero(a.rows(), w), bp = Mat::Zero(b.rows(), w);
    ap.leftCols(a.cols()) = a;
    bp.leftCols(b.cols()) = b;
    Eigen::JacobiSVD<Mat> svd(ap.transpose() * bp, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat q = svd.matrixU() * svd.matrixV().transpose();
    return (ap * q - bp).norm();
}

double outer_step_change(const OuterRecord& k, const OuterRecord& km1) {
    const double product = (k.z_fro + km1.z_fro) * k.diff_fro;
    return k.gram_diff_fro >= 0.0 ? std::min(product, k.gram_diff_fro) : product;
}

double gram_difference(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows()) throw DimensionMismatch(kMod, "factors differ in row count");
    const Index ka = a.cols(), kb = b.cols();
    if (ka + kb == 0) return 0.0;
    Mat ab(a.rows(), ka + kb);
    ab << a, b;
    Eigen::HouseholderQR<Mat> qr(ab);
    const Index k = std::min(ab.rows(), ab.cols());
    const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Mat ra = r.leftCols(ka), rb = r.rightCols(kb);
    return (ra * ra.transpose() - rb * rb.transpose()).norm();
}

double gle_error_bound(std::span<const OuterRecord> run, double sigma_min_A, double gamma) {
    if (run.size() < 2) throw InsufficientHistory(kMod, "needs two outer iterations");
    if (!(sigma_min_A > 0.0)) throw InvalidArgument(kMod, "sigma_min must be positive");
    const OuterRecord& k = run[run.size() - 1];
    const OuterRecord& km1 = run[run.size() - 2];
    return gamma * outer_step_change(k, km1) +
           ((1.0 + gamma) * k.res_fro + gamma * km1.res_fro) / (2.0 * sigma_min_A);
}

LowRankGramian stationary_solve_gle(const GleProblem& p_in, const GleOptions& opts) {
    GleProblem p = p_in;
    if (p.sigma_min_A < 0.0) compute_constants(p);
    const Index n = p.n();
    if (opts.dense_inner && n > kDenseLimit)
        throw TooLargeForDenseCheck(kMod, "dense inner solves need n <= 500");
    const double tol = opts.tol;
    const double tol_res = p.sigma_min_A * tol / 3.0;
    const double trunc = opts.trunc_tol > 0.0 ? opts.trunc_tol : tol;
    // The stopping thresholds treat gamma as 1.
    const double gamma = 1.0;
    const bool coupled = p.beta > 0.0;

    const Mat a_dense = opts.dense_inner ? p.A.materialize() : Mat();
    auto inner = [&](const Mat& rhs, double budget) {
        if (opts.dense_inner) return solve_lyapunov_dense_factor(a_dense, rhs);
        LyapOptions lo;
        lo.tol_res = budget;
        lo.max_dim = opts.max_dim;
        lo.trunc_tol = trunc;
        return solve_lyapunov_galerkin(p.A, rhs, lo);
    };

    LowRankGramian out;
    out.scale = p.scale;
    double rhs_err = 0.0;
    const Mat b1 = compress_rhs(p.B, 0.1 * tol_res, rhs_err);
    LyapResult cur = inner(b1, tol_res - rhs_err);
    double res = cur.res_fro + rhs_err;
    out.inner_residuals.push_back(res);
    out.telemetry.push_back({.rank = cur.Z.cols(),
                             .basis_dim = cur.basis_dim,
                             .z_fro = cur.Z.norm(),
                             .res_fro = res,
                             .bound = lyap_error_bound(res, p.sigma_min_A)});
    if (opts.keep_history) out.history.push_back(cur.Z);
    out.iterations = 1;

    if (!coupled) {
        out.Z = std::move(cur.Z);
        out.err_radius = out.telemetry.back().bound;
        return out;
    }

    Mat z_prev = cur.Z;
    for (int k = 2; k <= opts.max_outer; ++k) {
        Mat bk(n, static_cast<Index>(p.F.size()) * z_prev.cols() + b1.cols());
        Index col = 0;
        for (const auto& f : p.F) {
            if (z_prev.cols() > 0) bk.middleCols(col, z_prev.cols()) = f.apply(z_prev);
            col += z_prev.cols();
        }
        bk.rightCols(b1.cols()) = b1;
        double c_err = 0.0;
        const Mat bk_c = compress_rhs(bk, 0.1 * tol_res, c_err);
        cur = inner(bk_c, tol_res - c_err - rhs_err);
        res = cur.res_fro + c_err + rhs_err;
        OuterRecord rec;
        rec.rank = cur.Z.cols();
        rec.basis_dim = cur.basis_dim;
        rec.z_fro = cur.Z.norm();
        rec.diff_fro = aligned_factor_distance(cur.Z, z_prev);
        rec.gram_diff_fro = gram_difference(cur.Z, z_prev);
        rec.res_fro = res;
        out.telemetry.push_back(rec);
        out.telemetry.back().bound = gle_error_bound(out.telemetry, p.sigma_min_A, gamma);
        out.inner_residuals.push_back(res);
        if (opts.keep_history) out.history.push_back(cur.Z);
        out.iterations = k;
        const double stop = outer_step_change(rec, out.telemetry[out.telemetry.size() - 2]);
        z_prev = cur.Z;
        if (stop <= 0.5 * tol) {
            out.Z = std::move(cur.Z);
            out.err_radius = out.telemetry.back().bound;
            return out;
        }
    }
    throw NotConverged(kMod, "stationary iteration did not converge in " +
                                 std::to_string(opts.max_outer) + " outer steps");
}

}  // namespace swmor
