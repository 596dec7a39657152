#pragma once

#include "swmor/common.hpp"
#include "swmor/rng.hpp"

#include <initializer_list>
#include <vector>

namespace swmor::test {

inline SpMat sp(const Mat& d) { return d.sparseView(); }

inline Mat mat(Index r, Index c, std::initializer_list<double> v) {
    Mat m(r, c);
    auto it = v.begin();
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = *it++;
    return m;
}

inline double rel(const Mat& a, const Mat& b) {
    const double s = std::max(b.norm(), 1e-300);
    return (a - b).norm() / s;
}

// Random regular pencil of index <= 3 built in quasi-Weierstrass coordinates
// and then scrambled by random invertible transforms.
struct RandomPencil {
    Mat E, A, T, S;
    Index nJ = 0, nN = 0;
};

// well_conditioned draws T and S as orthogonal times a diagonal in [1, 2].
inline RandomPencil random_pencil(CounterRng& rng, Index nJ, Index nN, bool stable = true,
                                  bool well_conditioned = false) {
    const Index n = nJ + nN;
    Mat J = rng.normal_matrix(nJ, nJ) / std::sqrt(double(std::max<Index>(nJ, 1)));
    if (stable && nJ > 0) {
        Eigen::EigenSolver<Mat> es(J);
        const double shift = es.eigenvalues().real().maxCoeff();
        J -= (shift + 0.5) * Mat::Identity(nJ, nJ);
    }
    Mat N = Mat::Zero(nN, nN);
    // chain of nilpotent blocks of size <= 3
    for (Index i = 0; i + 1 < nN; ++i)
        if ((i % 3) != 2) N(i, i + 1) = 1.0 + rng.uniform();
    auto transform = [&] {
        if (!well_conditioned) return Mat(rng.normal_matrix(n, n) + 2.0 * Mat::Identity(n, n));
        Vec d(n);
        for (Index i = 0; i < n; ++i) d(i) = rng.uniform(1.0, 2.0);
        return Mat(rng.orthogonal(n) * d.asDiagonal());
    };
    Mat T = transform();
    Mat S = transform();
    Mat Ed = Mat::Zero(n, n), Ad = Mat::Zero(n, n);
    Ed.topLeftCorner(nJ, nJ).setIdentity();
    Ed.bottomRightCorner(nN, nN) = N;
    Ad.topLeftCorner(nJ, nJ) = J;
    Ad.bottomRightCorner(nN, nN).setIdentity();
    RandomPencil p;
    p.E = S.inverse() * Ed * T.inverse();
    p.A = S.inverse() * Ad * T.inverse();
    p.T = T;
    p.S = S;
    p.nJ = nJ;
    p.nN = nN;
    return p;
}

}  // namespace swmor::test
