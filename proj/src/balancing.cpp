#include "swmor/balancing.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace swmor {

namespace {

constexpr const char* kMod = "balancing";

Mat hcat(const std::vector<Mat>& blocks, Index rows) {
    Index cols = 0;
    for (const auto& b : blocks) cols += b.cols();
    Mat out(rows, cols);
    Index c = 0;
    for (const auto& b : blocks) {
        out.middleCols(c, b.cols()) = b;
        c += b.cols();
    }
    return out;
}

Mat vcat(const std::vector<Mat>& blocks, Index cols) {
    Index rows = 0;
    for (const auto& b : blocks) rows += b.rows();
    Mat out(rows, cols);
    Index r = 0;
    for (const auto& b : blocks) {
        out.middleRows(r, b.rows()) = b;
        r += b.rows();
    }
    return out;
}

}  // namespace

Mat BilinearData::B_all() const {
    std::vector<Mat> blocks = Bj;
    blocks.insert(blocks.end(), Bimp.begin(), Bimp.end());
    return hcat(blocks, n);
}

Mat BilinearData::C_all() const {
    std::vector<Mat> blocks = Cj;
    blocks.insert(blocks.end(), Cimp.begin(), Cimp.end());
    return vcat(blocks, n);
}

BilinearData build_bilinear_matrices(const JumpFlowForm& jf, bool include_input_jumps,
                                     bool include_output_impulses) {
    const int M = jf.M();
    BilinearData bd;
    for (int j = 1; j < M; ++j)
        if (jf.n_J(j) > jf.n_J(bd.ref_mode)) bd.ref_mode = j;
    const int ref = bd.ref_mode;
    bd.n = jf.n_J(ref);
    if (bd.n == 0) throw EmptyDifferentialPart(kMod, "every mode is purely algebraic");

    const auto& dref = jf.dec(ref);
    const bool dense = bd.n <= kDenseLimit;
    const Mat jref = dense ? dref.J_dense() : Mat();
    bd.A = dense ? LinOp::dense(jref) : dref.J_op();
    bd.Ainv = dense ? LinOp::dense(jref.inverse()) : dref.Jinv_op();

    bd.F.resize(static_cast<std::size_t>(M));
    bd.Bj.resize(static_cast<std::size_t>(M));
    bd.Cj.resize(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        const LinOp p1j = jf.P_op(ref, j), pj1 = jf.P_op(j, ref);
        if (j == ref) {
            bd.F[sj] = LinOp::zero(bd.n, bd.n);
        } else if (dense) {
            const Mat f = jf.P(ref, j) * jf.J(j) * jf.P(j, ref) - jref;
            bd.F[sj] = LinOp::dense(f);
        } else {
            const LinOp jj = jf.dec(j).J_op(), a = bd.A;
            bd.F[sj] = LinOp{bd.n, bd.n,
                             [=](const Mat& x) { return Mat(p1j.apply(jj.apply(pj1.apply(x))) - a.apply(x)); },
                             [=](const Mat& x) { return Mat(pj1.applyT(jj.applyT(p1j.applyT(x))) - a.applyT(x)); }};
        }
        bd.Bj[sj] = p1j.apply(jf.B_J(j));
        bd.Cj[sj] = pj1.applyT(jf.C_V(j).transpose()).transpose();
    }

    if (include_input_jumps)
        for (int j = 0; j < M; ++j) {
            const int nu = jf.dec(j).nu();
            std::vector<Mat> cols;
            for (int i = 0; i < nu; ++i) cols.push_back(dref.Tinv_top(jf.mode(j).imp_series(i)));
            bd.Bimp.push_back(hcat(cols, bd.n));
        }
    if (include_output_impulses)
        for (int j = 0; j < M; ++j) {
            const auto& dj = jf.dec(j);
            std::vector<Mat> rows;
            Mat npow = dj.N();
            for (int i = 1; i < dj.nu(); ++i) {
                const Mat ci = jf.mode(j).C_W() * npow;  // C^imp (E^imp)^i in W coordinates
                rows.push_back(dref.Vt_apply(dj.Tinv_bottom_T(ci.transpose())).transpose());
                npow = dj.N() * npow;
            }
            bd.Cimp.push_back(vcat(rows, bd.n));
        }
    return bd;
}

GleProblem reach_problem(const BilinearData& bd) {
    GleProblem p;
    p.A = bd.A;
    p.Ainv = bd.Ainv;
    p.F = bd.F;
    p.B = bd.B_all();
    return p;
}

GleProblem obs_problem(const BilinearData& bd) {
    GleProblem p;
    p.A = bd.A.transposed();
    if (bd.Ainv) p.Ainv = bd.Ainv->transposed();
    for (const auto& f : bd.F) p.F.push_back(f.transposed());
    p.B = bd.C_all().transpose();
    return p;
}

namespace {

LowRankGramian solve_normalized(GleProblem p, const GleOptions& opts) {
    compute_constants(p);
    if (p.beta > 0.0) p = scale_problem(p, p.beta);
    LowRankGramian g = stationary_solve_gle(p, opts);
    const double nf = g.Z.cols() > 0 ? norm2(g.Z) : 0.0;
    if (nf > 0.0) {
        g.Z /= nf;
        g.err_radius /= nf * nf;
        g.norm_factor = nf;
        g.normalized = true;
    }
    return g;
}

}  // namespace

GramianPair compute_gramians(const BilinearData& bd, const GleOptions& opts) {
    GramianPair out;
    const GleProblem pr = reach_problem(bd), po = obs_problem(bd);
    parallel_for(2, [&](int i) {
        if (i == 0) out.P = solve_normalized(pr, opts);
        else out.Q = solve_normalized(po, opts);
    });
    return out;
}

Mat absolute_factor(const LowRankGramian& g) { return std::sqrt(g.scale) * g.norm_factor * g.Z; }

PerturbationConstants perturbation_constants(const Mat& Z, double tol) {
    PerturbationConstants pc;
    pc.tail_sigma = std::sqrt(tol);
    if (Z.cols() == 0) return pc;
    Eigen::JacobiSVD<Mat> svd(Z);
    const Vec s = svd.singularValues();
    const double cut = s(0) * kEps * static_cast<double>(std::max(Z.rows(), Z.cols()));
    Index k = 0;
    while (k < s.size() && s(k) > cut) ++k;
    if (k == 0) return pc;
    pc.eig = s.head(k).array().square();
    pc.pinv_norm = 1.0 / s(k - 1);

    // Neighbours closer than the last gap are merged into clusters; the gap of
    // an eigenvalue is then its distance to the nearest one outside its
    // cluster, with zero counted as the (k+1)-st eigenvalue. Exact ties with the
    // threshold stay separate.
    const Vec& lam = pc.eig;
    const double delta_last = 1.0 / std::sqrt(lam(k - 1));
    std::vector<Index> cluster(static_cast<std::size_t>(k));
    Index cid = 0;
    for (Index i = 0; i < k; ++i) {
        if (i > 0) {
            const double gap = lam(i - 1) - lam(i);
            if (!(gap > 0.0) || std::sqrt(lam(i - 1)) / gap > delta_last * (1.0 + 1e-12)) {
                cluster[static_cast<std::size_t>(i)] = cid;
                continue;
            }
            ++cid;
        }
        cluster[static_cast<std::size_t>(i)] = cid;
    }
    pc.delta = Vec::Zero(k);
    for (Index i = 0; i < k; ++i) {
        double gap = lam(i);  // distance to zero
        for (Index j = 0; j < k; ++j)
            if (cluster[static_cast<std::size_t>(j)] != cluster[static_cast<std::size_t>(i)])
                gap = std::min(gap, std::abs(lam(i) - lam(j)));
        pc.delta(i) = std::sqrt(lam(i)) / gap;
    }
    pc.C = pc.delta.sum();
    return pc;
}

RomBundle balance_truncate(const JumpFlowForm& jf, const BilinearData& bd, const GramianPair& g, Index r) {
    if (r < 1) throw InvalidArgument(kMod, "reduced order must be at least 1");
    const Mat z = absolute_factor(g.P), s = absolute_factor(g.Q);
    if (z.cols() == 0 || s.cols() == 0) throw InvalidArgument(kMod, "a Gramian factor is empty");

    RomBundle rom;
    rom.ref_mode = bd.ref_mode;
    // SVD of Z^T S, the transpose of H = S^T Z: same singular values.
    Eigen::BDCSVD<Mat> svd(z.transpose() * s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    rom.hankel = svd.singularValues();
    Index rank = 0;
    while (rank < rom.hankel.size() && rom.hankel(rank) > 1e-14 * rom.hankel(0)) ++rank;
    if (r > rank) {
        rom.warnings.push_back("requested order " + std::to_string(r) + " exceeds the numerical rank " +
                               std::to_string(rank) + "; using " + std::to_string(rank));
        r = rank;
    }
    if (r < 1) throw InvalidArgument(kMod, "Hankel matrix is numerically zero");
    rom.r = r;
    const Vec isq = rom.hankel.head(r).cwiseSqrt().cwiseInverse();
    rom.V = z * svd.matrixU().leftCols(r) * isq.asDiagonal();
    rom.W = s * svd.matrixV().leftCols(r) * isq.asDiagonal();

    const auto& dref = jf.dec(bd.ref_mode);
    rom.V_full = dref.V_apply(rom.V);
    rom.W_full = dref.S_solve_T(rom.W, Mat::Zero(dref.n_N(), r));

    const int M = jf.M();
    const Mat av = bd.A.apply(rom.V);
    rom.jump.assign(static_cast<std::size_t>(M), std::vector<Mat>(static_cast<std::size_t>(M)));
    rom.input_jump = rom.jump;
    rom.imp_state.assign(static_cast<std::size_t>(M),
                         std::vector<std::vector<Mat>>(static_cast<std::size_t>(M)));
    rom.imp_input = rom.imp_state;
    for (int q = 0; q < M; ++q) {
        const auto sq = static_cast<std::size_t>(q);
        rom.A.push_back(rom.W.transpose() * (av + bd.F[sq].apply(rom.V)));
        rom.B.push_back(rom.W.transpose() * bd.Bj[sq]);
        rom.C.push_back(bd.Cj[sq] * rom.V);
        rom.D.push_back(jf.feedthrough(q));
    }
    for (int l = 0; l < M; ++l) {
        const Mat vl = jf.P_op(l, bd.ref_mode).apply(rom.V);
        for (int k = 0; k < M; ++k) {
            if (k == l) continue;
            const auto sk = static_cast<std::size_t>(k), sl = static_cast<std::size_t>(l);
            const LinOp p1k = jf.P_op(bd.ref_mode, k);
            rom.jump[sk][sl] = rom.W.transpose() * p1k.apply(jf.P_op(k, l).apply(vl));
            rom.input_jump[sk][sl] = rom.W.transpose() * p1k.apply(jf.input_jump(k, l));
            for (int i = 0; i + 1 < jf.dec(k).nu(); ++i) {
                rom.imp_state[sk][sl].push_back(jf.impulse_state(k, l, i) * vl);
                rom.imp_input[sk][sl].push_back(jf.impulse_input(k, l, i));
            }
        }
    }
    return rom;
}

BoundReport certified_error_bound(const GramianPair& g, const Vec& hankel, Index r, double tol) {
    if (!g.P.normalized || !g.Q.normalized)
        throw MissingCertificate(kMod, "Gramians must come from compute_gramians");
    if (!(g.P.err_radius >= 0.0) || !(g.Q.err_radius >= 0.0))
        throw MissingCertificate(kMod, "Gramian error radii are missing");
    BoundReport rep;
    rep.r = r;
    rep.tol = tol;
    rep.n_tilde = std::min({g.P.Z.cols(), g.Q.Z.cols(), hankel.size()});
    if (r > rep.n_tilde) throw InvalidArgument(kMod, "r exceeds min(rank P, rank Q)");
    const double k = static_cast<double>(rep.n_tilde - r);
    rep.tail = 2.0 * hankel.segment(r, rep.n_tilde - r).sum();
    rep.floor = 2.0 * k * 6.0 * std::sqrt(tol);
    rep.practical = rep.floor + rep.tail;

    const PerturbationConstants pp = perturbation_constants(g.P.Z, tol);
    const PerturbationConstants pq = perturbation_constants(g.Q.Z, tol);
    const double zn = norm2(g.P.Z), sn = norm2(g.Q.Z);
    rep.c1 = (pp.pinv_norm + pp.C) * sn;
    rep.c2 = (pq.pinv_norm + pq.C) * zn;
    // The normalized Hankel matrix is the absolute one divided by this factor.
    const double to_abs = std::sqrt(g.P.scale * g.Q.scale) * g.P.norm_factor * g.Q.norm_factor;
    const double per_mode = rep.c1 * g.P.err_radius + rep.c2 * g.Q.err_radius + pp.tail_sigma * sn +
                            pq.tail_sigma * zn;
    rep.structural = 2.0 * k * to_abs * per_mode + rep.tail;
    rep.structural_larger = rep.structural > rep.practical;
    rep.certificate = std::max(rep.practical, rep.structural);
    rep.note = "first-order certified; exact tail beyond the computed rank taken as zero";
    return rep;
}

LowRankGramian project_out_input_jumps(const LowRankGramian& P, const BilinearData& with_jumps) {
    if (with_jumps.Bimp.empty()) throw InvalidArgument(kMod, "bilinear data carries no input-jump blocks");
    const Mat q = orth(hcat(with_jumps.Bimp, with_jumps.n));
    LowRankGramian out = P;
    out.Z -= q * (q.transpose() * P.Z);
    out.err_radius = std::numeric_limits<double>::quiet_NaN();  // no longer a certified factor
    const double nz = norm2(out.Z);
    if (nz > 0.0) {
        out.Z /= nz;
        out.norm_factor *= nz;
    }
    return out;
}

LmiReport check_lmis(const Mat& P_factor, const Mat& Q_factor, const BilinearData& bd, double rel_tol) {
    if (bd.n > kDenseLimit) throw TooLargeForDenseCheck(kMod, "LMI check needs n <= 500");
    LmiReport rep;
    const Mat a = bd.A.materialize();
    const Mat p = P_factor * P_factor.transpose(), q = Q_factor * Q_factor.transpose();
    double scale = 0.0;
    for (int j = 0; j < bd.M(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        const Mat aj = a + bd.F[sj].materialize();
        Mat bj = bd.Bj[sj], cj = bd.Cj[sj];
        if (!bd.Bimp.empty()) bj = hcat({bj, bd.Bimp[sj]}, bd.n);
        if (!bd.Cimp.empty()) cj = vcat({cj, bd.Cimp[sj]}, bd.n);
        const Mat lp = aj * p + p * aj.transpose() + bj * bj.transpose();
        const Mat lq = aj.transpose() * q + q * aj + cj.transpose() * cj;
        rep.lambda_P.push_back(Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (lp + lp.transpose()), Eigen::EigenvaluesOnly)
                                   .eigenvalues()
                                   .maxCoeff());
        rep.lambda_Q.push_back(Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (lq + lq.transpose()), Eigen::EigenvaluesOnly)
                                   .eigenvalues()
                                   .maxCoeff());
        scale = std::max({scale, norm2(aj * p), norm2(aj.transpose() * q), norm2(bj) * norm2(bj),
                          norm2(cj) * norm2(cj)});
    }
    rep.tol = rel_tol * scale;
    rep.pass = std::all_of(rep.lambda_P.begin(), rep.lambda_P.end(), [&](double v) { return v <= rep.tol; }) &&
               std::all_of(rep.lambda_Q.begin(), rep.lambda_Q.end(), [&](double v) { return v <= rep.tol; });
    return rep;
}

}  // namespace swmor
