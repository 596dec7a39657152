#include <doctest.h>

#include "../common/helpers.hpp"
#include "swmor/wong_qwf.hpp"

#include <Eigen/Eigenvalues>

using namespace swmor;
using namespace swmor::test;

TEST_CASE("regularity_check on small pencils") {
    CHECK(regularity_check({sp(Mat::Identity(2, 2)), sp(-Mat::Identity(2, 2))}));
    CHECK_FALSE(regularity_check({sp(Mat::Zero(2, 2)), sp(Mat::Zero(2, 2))}));
    CHECK(regularity_check({sp(mat(2, 2, {1, 0, 0, 0})), sp(mat(2, 2, {0, 1, 1, 0}))}));
    // det(sE - A) = 0 for every s: a shared kernel vector
    CHECK_FALSE(regularity_check({sp(mat(2, 2, {1, 0, 0, 0})), sp(mat(2, 2, {1, 0, 0, 0}))}));
    CHECK_THROWS_AS(regularity_check({sp(Mat::Identity(2, 2)), sp(Mat::Identity(3, 3))}),
                    DimensionMismatch);
}

TEST_CASE("wong sequences of hand-checked pencils") {
    SUBCASE("ODE pencil") {
        auto ws = wong_sequences({sp(Mat::Identity(2, 2)), sp(-Mat::Identity(2, 2))});
        CHECK(ws.n_J() == 2);
        CHECK(ws.n_N() == 0);
    }
    SUBCASE("already decoupled") {
        auto ws = wong_sequences({sp(mat(2, 2, {1, 0, 0, 0})), sp(mat(2, 2, {-1, 0, 0, 1}))});
        REQUIRE(ws.n_N() == 1);
        CHECK(std::abs(std::abs(ws.What(1, 0)) - 1.0) < 1e-14);
        const Mat v = ws.Vhat();
        CHECK(std::abs(std::abs(v(0, 0)) - 1.0) < 1e-14);
    }
    SUBCASE("purely algebraic pencil") {
        auto ws = wong_sequences({sp(mat(2, 2, {1, 0, 0, 0})), sp(mat(2, 2, {0, 1, 1, 0}))});
        CHECK(ws.n_J() == 0);
        CHECK(ws.n_N() == 2);
    }
    SUBCASE("singular pencil is rejected") {
        CHECK_THROWS_AS(wong_sequences({sp(mat(2, 2, {1, 0, 0, 0})), sp(mat(2, 2, {1, 0, 0, 0}))}),
                        NotRegular);
    }
}

TEST_CASE("qwf of the ODE pencil") {
    auto [dec, proj] = qwf_decompose({sp(Mat::Identity(2, 2)), sp(-Mat::Identity(2, 2))},
                                     mat(2, 1, {1, 0}), mat(1, 2, {1, 0}));
    CHECK(dec.nu() == 0);
    CHECK(rel(proj.Pi(), Mat::Identity(2, 2)) < 1e-14);
    CHECK(rel(proj.Adiff(), -Mat::Identity(2, 2)) < 1e-14);
    CHECK(proj.Eimp().norm() == 0.0);
    CHECK(proj.feedthrough().cols() == 0);
}

TEST_CASE("qwf of diag(1,0), diag(-1,1)") {
    auto [dec, proj] = qwf_decompose({sp(mat(2, 2, {1, 0, 0, 0})), sp(mat(2, 2, {-1, 0, 0, 1}))},
                                     mat(2, 1, {1, 1}), mat(1, 2, {1, 1}));
    CHECK(dec.nu() == 1);
    CHECK(rel(proj.Pi(), mat(2, 2, {1, 0, 0, 0})) < 1e-14);
    CHECK(rel(proj.Adiff(), mat(2, 2, {-1, 0, 0, 0})) < 1e-14);
    CHECK(rel(proj.Bdiff(), mat(2, 1, {1, 0})) < 1e-14);
    CHECK(rel(proj.Bimp(), mat(2, 1, {0, 1})) < 1e-14);
    CHECK(proj.Eimp().norm() < 1e-14);
    // x2 = -u, so y = x1 - u: the feedthrough block for u itself is -1.
    const Mat d = proj.feedthrough();
    REQUIRE(d.cols() == 1);
    CHECK(std::abs(d(0, 0) + 1.0) < 1e-14);
}

TEST_CASE("qwf of the purely algebraic 2x2 pencil") {
    auto [dec, proj] = qwf_decompose({sp(mat(2, 2, {1, 0, 0, 0})), sp(mat(2, 2, {0, 1, 1, 0}))},
                                     mat(2, 1, {0, 1}), mat(1, 2, {0, 1}));
    CHECK(dec.n_J() == 0);
    CHECK(dec.nu() == 2);
    CHECK(proj.Pi().norm() < 1e-14);
    CHECK(proj.Adiff().norm() < 1e-14);
    // Rows read x1' = x2 and 0 = x1 + u, so x2 = -u'.
    // y = x2 = -u' gives feedthrough blocks [0, -1].
    const Mat d = proj.feedthrough();
    REQUIRE(d.cols() == 2);
    CHECK(std::abs(d(0, 0)) < 1e-14);
    CHECK(std::abs(d(0, 1) + 1.0) < 1e-14);
}

TEST_CASE("qwf invariants on random scrambled pencils") {
    CounterRng rng(2024, 1);
    for (int trial = 0; trial < 12; ++trial) {
        const Index nJ = 2 + trial % 5;
        const Index nN = 1 + trial % 4;
        auto rp = random_pencil(rng, nJ, nN);
        const Index n = nJ + nN;
        const Pencil pen{sp(rp.E), sp(rp.A)};
        const Mat B = rng.normal_matrix(n, 2);
        const Mat C = rng.normal_matrix(2, n);
        CAPTURE(trial);
        auto [dec, proj] = qwf_decompose(pen, B, C);
        REQUIRE(dec.n_J() == nJ);
        REQUIRE(dec.n_N() == nN);
        const double tol_qwf = 1e-10;
        const double scale = rp.E.norm() + rp.A.norm();
        CHECK(dec.reconstruction_residual() <= tol_qwf * scale);
        CHECK(dec.nu() == std::min<Index>(nN, 3));

        const Mat pi = proj.Pi();
        const Mat x = rng.normal_matrix(n, 20);
        CHECK(rel(pi * (pi * x), pi * x) <= 10 * tol_qwf);
        const Mat adiff = proj.Adiff();
        CHECK(rel(adiff * (pi * x), adiff * x) <= 10 * tol_qwf);
        const Mat eimp = proj.Eimp();
        Mat pw = Mat::Identity(n, n);
        for (int k = 0; k < dec.nu(); ++k) pw = pw * eimp;
        CHECK(pw.norm() <= tol_qwf * std::max(1.0, eimp.norm()));

        // Reconstruction Π = T diag(I,0) T^{-1} against the generating transform.
        Mat d = Mat::Zero(n, n);
        d.topLeftCorner(nJ, nJ).setIdentity();
        CHECK(rel(pi, rp.T * d * rp.T.inverse()) <= 10 * tol_qwf);

        // Basis independence of every derived matrix.
        QwfOptions rot;
        rot.basis_seed = 99 + static_cast<std::uint64_t>(trial);
        auto [dec2, proj2] = qwf_decompose(pen, B, C, rot);
        CHECK(rel(proj2.Pi(), pi) <= 100 * tol_qwf);
        CHECK(rel(proj2.Adiff(), adiff) <= 100 * tol_qwf);
        CHECK(rel(proj2.Bdiff(), proj.Bdiff()) <= 100 * tol_qwf);
        CHECK(rel(proj2.Cdiff(), proj.Cdiff()) <= 100 * tol_qwf);
        CHECK(rel(proj2.Bimp(), proj.Bimp()) <= 100 * tol_qwf);
        CHECK(rel(proj2.Cimp(), proj.Cimp()) <= 100 * tol_qwf);
        if (eimp.norm() > 0) CHECK(rel(proj2.Eimp(), eimp) <= 100 * tol_qwf);
        CHECK(rel(proj2.feedthrough(), proj.feedthrough()) <= 100 * tol_qwf);

        // J has the spectrum of the generating slow block.
        Eigen::EigenSolver<Mat> es(dec.J_dense());
        CHECK(es.eigenvalues().real().maxCoeff() < 0);

        // Inverse of J through A^{-1}.
        const Mat jd = dec.J_dense();
        const Mat ji = dec.Jinv_op().materialize();
        CHECK(rel(jd * ji, Mat::Identity(nJ, nJ)) < 1e-9);
        CHECK(rel(dec.Jinv_op().transposed().materialize(), ji.transpose()) < 1e-9);
        CHECK(rel(dec.J_op().transposed().materialize(), jd.transpose()) < 1e-10);
    }
}

TEST_CASE("structured kernel shortcut agrees with the generic path") {
    CounterRng rng(77, 2);
    const Index n = 9;
    // E = blockdiag(M, 0) with M invertible; A generic with regular pencil.
    Mat E = Mat::Zero(n, n);
    E.topLeftCorner(7, 7) = rng.normal_matrix(7, 7) + 3.0 * Mat::Identity(7, 7);
    Mat A = rng.normal_matrix(n, n);
    A.bottomRightCorner(2, 2).setZero();
    const Pencil structured{sp(E), sp(A)};
    auto ws1 = wong_sequences(structured);
    CHECK(ws1.structured);
    // An orthogonally rotated copy has no zero rows, so it takes the generic path.
    const Mat Q = rng.orthogonal(n);
    const Pencil rotated{sp(Q * E * Q.transpose()), sp(Q * A * Q.transpose())};
    auto ws2 = wong_sequences(rotated);
    CHECK_FALSE(ws2.structured);
    REQUIRE(ws1.n_N() == ws2.n_N());
    CHECK(subspace_distance(orth(Q * ws1.What), ws2.What) < 1e-9);
    CHECK(subspace_distance(orth(Q * ws1.Phi), ws2.Phi) < 1e-9);
}
