#include "swmor/linalg.hpp"

#include "swmor/kernels.hpp"
#include "swmor/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

namespace swmor {

LinOp LinOp::dense(Mat m) {
    auto shared = std::make_shared<const Mat>(std::move(m));
    return LinOp{shared->rows(), shared->cols(),
                 [shared](const Mat& x) -> Mat { return (*shared) * x; },
                 [shared](const Mat& x) -> Mat { return shared->transpose() * x; }};
}

LinOp LinOp::zero(Index rows, Index cols) {
    return LinOp{rows, cols, [rows](const Mat& x) -> Mat { return Mat::Zero(rows, x.cols()); },
                 [cols](const Mat& x) -> Mat { return Mat::Zero(cols, x.cols()); }};
}

Mat LinOp::materialize() const { return apply(Mat::Identity(cols, cols)); }

namespace {

Eigen::BDCSVD<Mat> thin_svd(const Mat& m, unsigned opts) { return Eigen::BDCSVD<Mat>(m, opts); }

bool near_cut(const Vec& s, double cut) {
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > cut / 10.0 && s(i) < cut * 10.0) return true;
    return false;
}

}  // namespace

RankResult range_basis(const Mat& m, double rel_tol) {
    RankResult r;
    if (m.cols() == 0 || m.rows() == 0) {
        r.basis = Mat(m.rows(), 0);
        return r;
    }
    auto svd = thin_svd(m, Eigen::ComputeThinU);
    r.singular_values = svd.singularValues();
    const double smax = r.singular_values.size() ? r.singular_values(0) : 0.0;
    r.threshold = rel_tol * smax;
    Index k = 0;
    while (k < r.singular_values.size() && r.singular_values(k) > r.threshold && smax > 0) ++k;
    r.basis = svd.matrixU().leftCols(k);
    r.ambiguous = smax > 0 && near_cut(r.singular_values, r.threshold);
    return r;
}

RankResult null_basis(const Mat& m, double rel_tol) {
    RankResult r;
    const Index n = m.cols();
    if (n == 0) {
        r.basis = Mat(0, 0);
        return r;
    }
    if (m.rows() == 0) {
        r.basis = Mat::Identity(n, n);
        return r;
    }
    auto svd = thin_svd(m, Eigen::ComputeFullV);
    r.singular_values = svd.singularValues();
    const double smax = r.singular_values.size() ? r.singular_values(0) : 0.0;
    r.threshold = rel_tol * smax;
    Index k = 0;
    while (k < r.singular_values.size() && r.singular_values(k) > r.threshold && smax > 0) ++k;
    r.basis = svd.matrixV().rightCols(n - k);
    r.ambiguous = smax > 0 && near_cut(r.singular_values, r.threshold);
    return r;
}

Mat orth(const Mat& m, double rel_tol) { return range_basis(m, rel_tol).basis; }

double subspace_distance(const Mat& u, const Mat& v) {
    if (u.cols() != v.cols()) return (u.cols() + v.cols() > 0) ? 1.0 : 0.0;
    if (u.cols() == 0) return 0.0;
    // sin of the largest principal angle = || (I - U U^T) V ||_2
    const Mat resid = v - u * (u.transpose() * v);
    return std::min(1.0, norm2(resid));
}

Mat solve_quasi_triangular_sylvester(const Mat& t, const Mat& w, const Mat& c) {
    const Index m = t.rows();
    const Index n = w.rows();
    auto blocks = [](const Mat& q) {
        std::vector<std::pair<Index, Index>> b;  // (start, size)
        Index i = 0;
        while (i < q.rows()) {
            if (i + 1 < q.rows() && q(i + 1, i) != 0.0) {
                b.emplace_back(i, 2);
                i += 2;
            } else {
                b.emplace_back(i, 1);
                i += 1;
            }
        }
        return b;
    };
    const auto tb = blocks(t);
    const auto wb = blocks(w);
    Mat x = Mat::Zero(m, n);
    for (auto jt = wb.rbegin(); jt != wb.rend(); ++jt) {
        const auto [j0, bj] = *jt;
        // (X W^T)_{:,J} = sum_{l >= J} X_{:,l} W_{J,l}^T; later columns are done.
        Mat rhs = c.middleCols(j0, bj);
        const Index tail = n - (j0 + bj);
        if (tail > 0)
            rhs.noalias() -= x.rightCols(tail) * w.block(j0, j0 + bj, bj, tail).transpose();
        const Mat wjj = w.block(j0, j0, bj, bj);
        for (auto it = tb.rbegin(); it != tb.rend(); ++it) {
            const auto [i0, bi] = *it;
            Mat r = rhs.middleRows(i0, bi);
            const Index below = m - (i0 + bi);
            if (below > 0)
                r.noalias() -= t.block(i0, i0 + bi, bi, below) * x.block(i0 + bi, j0, below, bj);
            const Mat tii = t.block(i0, i0, bi, bi);
            if (bi == 1 && bj == 1) {
                const double d = tii(0, 0) + wjj(0, 0);
                if (d == 0.0) throw SingularOperator("linalg", "Sylvester operator is singular");
                x(i0, j0) = r(0, 0) / d;
            } else {
                // (I ⊗ Tii + Wjj ⊗ I) vec(X) = vec(R)
                const Index k = bi * bj;
                Mat kron = Mat::Zero(k, k);
                for (Index q = 0; q < bj; ++q) {
                    kron.block(q * bi, q * bi, bi, bi) += tii;
                    for (Index p = 0; p < bj; ++p)
                        kron.block(q * bi, p * bi, bi, bi) += wjj(q, p) * Mat::Identity(bi, bi);
                }
                Eigen::FullPivLU<Mat> lu(kron);
                if (!lu.isInvertible())
                    throw SingularOperator("linalg", "Sylvester operator is singular");
                const Vec sol = lu.solve(Eigen::Map<const Vec>(r.data(), k));
                x.block(i0, j0, bi, bj) = Eigen::Map<const Mat>(sol.data(), bi, bj);
            }
        }
    }
    return x;
}

Mat solve_lyapunov_dense(const Mat& a, const Mat& q) {
    if (a.rows() != a.cols() || q.rows() != a.rows() || q.cols() != a.cols())
        throw DimensionMismatch("linalg", "Lyapunov operands have inconsistent shapes");
    const Index n = a.rows();
    if (n == 0) return Mat(0, 0);
    Eigen::RealSchur<Mat> schur(a);
    if (schur.info() != Eigen::Success) throw SingularOperator("linalg", "Schur form failed");
    const Mat& u = schur.matrixU();
    const Mat& t = schur.matrixT();
    const Mat c = -(u.transpose() * q * u);
    const Mat y = solve_quasi_triangular_sylvester(t, t, c);
    Mat x = u * y * u.transpose();
    return 0.5 * (x + x.transpose());
}

double lanczos_max_eig(const std::function<Vec(const Vec&)>& op, Index n, double rel_tol,
                       Index max_steps, std::uint64_t seed) {
    if (n == 0) return 0.0;
    CounterRng rng(seed, 0x1A2C);
    Vec v = rng.normal_matrix(n, 1).col(0);
    v.normalize();
    const Index kmax = std::min(max_steps, n);
    Mat basis(n, kmax);
    Vec alpha(kmax), beta(kmax);
    double prev = 0.0;
    double est = 0.0;
    for (Index k = 0; k < kmax; ++k) {
        basis.col(k) = v;
        Vec w = op(v);
        alpha(k) = v.dot(w);
        for (int pass = 0; pass < 2; ++pass)
            w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
        beta(k) = w.norm();
        Mat tri = Mat::Zero(k + 1, k + 1);
        for (Index i = 0; i <= k; ++i) {
            tri(i, i) = alpha(i);
            if (i < k) tri(i, i + 1) = tri(i + 1, i) = beta(i);
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(tri, Eigen::EigenvaluesOnly);
        est = es.eigenvalues().maxCoeff();
        if (k > 2 && std::abs(est - prev) <= rel_tol * std::abs(est)) break;
        if (beta(k) <= 1e-14 * std::abs(est)) break;
        prev = est;
        v = w / beta(k);
    }
    return est;
}

double norm2(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

double sigma_min(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Mat> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

Mat orthonormalize_against(const Mat& basis, const Mat& block, double drop_tol) {
    Mat w = block;
    const Vec norms0 = w.colwise().norm();
    if (basis.cols() > 0) w -= basis * (basis.transpose() * w);
    const Index n = w.rows();
    const auto len = static_cast<std::size_t>(n);
    std::vector<Vec> kept;
    for (Index j = 0; j < w.cols(); ++j) {
        Vec v = w.col(j);
        // Each column is projected against the old basis and the new vectors
        // twice, so tiny survivors stay orthogonal after normalization.
        for (int pass = 0; pass < 2; ++pass) {
            if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
            for (const Vec& q : kept) {
                const double c = kernels::dot({q.data(), len}, {v.data(), len});
                kernels::axpy(-c, {q.data(), len}, {v.data(), len});
            }
        }
        const double nv = v.norm();
        if (nv > drop_tol * norms0(j) && nv > 0.0) kept.push_back(v / nv);
    }
    Mat out(n, static_cast<Index>(kept.size()));
    for (Index j = 0; j < out.cols(); ++j) out.col(j) = kept[static_cast<std::size_t>(j)];
    return out;
}

}  // namespace swmor
