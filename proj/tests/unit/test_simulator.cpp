#include <doctest.h>

#include "../common/helpers.hpp"
#include "swmor/benchmarks.hpp"
#include "swmor/simulator.hpp"
#include "swmor/verification.hpp"

#include <complex>

using namespace swmor;
using namespace swmor::test;

namespace {

SwitchedSystem random_two_mode(CounterRng& rng, Index nJ, Index nN) {
    SwitchedSystem s;
    const Index n = nJ + nN;
    for (int j = 0; j < 2; ++j) {
        const auto rp = random_pencil(rng, nJ, nN);
        s.modes.push_back({sp(rp.E), sp(rp.A), rng.normal_matrix(n, 1), rng.normal_matrix(2, n)});
    }
    return s;
}

TrajectoryRecord flat(double value, double u_l2) {
    TrajectoryRecord r;
    r.t = {0.0, 0.25, 0.5, 0.75, 1.0};
    r.y = Mat::Constant(5, 1, value);
    r.u_l2 = u_l2;
    return r;
}

}  // namespace

TEST_CASE("zero input from rest gives zero output") {
    CounterRng rng(31, 0);
    const auto jf = reformulate_jumpflow(random_two_mode(rng, 3, 3));
    const auto sig = SwitchingSignal::periodic(0.0, 2.0, 0.5, 2);
    const auto rec = simulate(fom_ode(jf), sig, InputSignal::zero());
    CHECK(rec.y.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rec.impulses.empty());
    CHECK(rec.jumps.size() == 3);
    CHECK(rec.switch_index.size() == 3);
    for (std::size_t i = 0; i + 1 < rec.t.size(); ++i) CHECK(rec.t[i] < rec.t[i + 1]);
    for (std::size_t k = 0; k < rec.jumps.size(); ++k)
        CHECK(rec.t[static_cast<std::size_t>(rec.switch_index[k])] == doctest::Approx(rec.jumps[k].t));
}

TEST_CASE("single LTI mode matches the variation-of-constants solution") {
    CounterRng rng(32, 0);
    const Index n = 6;
    const Mat k = rng.normal_matrix(n, n) / std::sqrt(double(n));
    const Mat a = -Mat::Identity(n, n) + 0.8 * (k - k.transpose()) - 0.2 * k * k.transpose();
    const Mat b = rng.normal_matrix(n, 1), c = rng.normal_matrix(2, n);
    SwitchedSystem s;
    s.modes.push_back({sp(Mat::Identity(n, n)), sp(a), b, c});
    SwitchingSignal sig;
    sig.tFinal = 6.0;
    sig.events = {{0.0, 0}};
    const double rtol = 1e-8;
    const auto rec = simulate(fom_ode(reformulate_jumpflow(s)), sig, InputSignal::sine(), {0.05, rtol, 1e-12});

    // x(t) = Im[(iI - A)^{-1} (e^{it} I - e^{At}) b] for u = sin t, in the original coordinates
    using C = std::complex<double>;
    const Eigen::MatrixXcd res = (C(0, 1) * Eigen::MatrixXcd::Identity(n, n) - a.cast<C>()).inverse();
    Eigen::EigenSolver<Mat> es(a);
    const Eigen::MatrixXcd v = es.eigenvectors(), vinv = v.inverse();
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        const double t = rec.t[i];
        const Eigen::MatrixXcd eat = v * (es.eigenvalues() * t).array().exp().matrix().asDiagonal() * vinv;
        const Vec x = (res * (std::exp(C(0, t)) * Eigen::MatrixXcd::Identity(n, n) - eat) * b.cast<C>()).imag();
        const Vec y = c * x;
        worst = std::max(worst, (rec.y.row(static_cast<Index>(i)).transpose() - y).cwiseAbs().maxCoeff());
        scale = std::max(scale, y.cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 10.0 * rtol * scale);
    CHECK(rec.y_l2 == doctest::Approx(grid_l2(rec)).epsilon(1e-6));
}

TEST_CASE("output error arithmetic") {
    const auto fom = flat(0.0, 2.0), rom = flat(1.0, 2.0);
    const auto e = output_error(fom, rom);
    CHECK(e.abs_l2 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.rel_to_input == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(output_error(fom, fom).abs_l2 == 0.0);
    auto shifted = rom;
    shifted.t[2] = 0.6;
    CHECK_THROWS_AS(output_error(fom, shifted), GridMismatch);
}

TEST_CASE("left limits enter the L2 integral at switches") {
    // y = 0 on [0,1) and 1 on [1,2], with a jump at t = 1
    TrajectoryRecord r;
    r.t = {0.0, 0.5, 1.0, 1.5, 2.0};
    r.y = mat(5, 1, {0, 0, 1, 1, 1});
    r.switch_index = {2};
    JumpEntry j;
    j.t = 1.0;
    j.y_pre = Vec::Zero(1);
    j.y_post = Vec::Ones(1);
    r.jumps = {j};
    CHECK(grid_l2(r) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("jump-flow simulation agrees with the dense decoupled oracle") {
    CounterRng rng(33, 0);
    const auto s = random_two_mode(rng, 4, 3);
    const auto jf = reformulate_jumpflow(s);
    const auto sig = SwitchingSignal::periodic(0.0, 4.0, 0.7, 2);
    const SimOptions o{0.01, 1e-9, 1e-12};
    const auto a = simulate(fom_ode(jf), sig, InputSignal::sine(), o);
    const auto b = simulate(dense_qwf_ode(s), sig, InputSignal::sine(), o);
    const auto e = output_error(b, a);
    CHECK(e.abs_l2 <= 1e-6 * grid_l2(b));
    for (std::size_t k = 0; k < a.jumps.size(); ++k) CHECK(rel(a.jumps[k].y_post, b.jumps[k].y_post) < 1e-6);
}

TEST_CASE("dense oracle reproduces the pencil decomposition") {
    CounterRng rng(34, 0);
    const auto rp = random_pencil(rng, 3, 4);
    const auto q = dense_qwf(rp.E, rp.A);
    CHECK(q.n_J == 3);
    CHECK(q.nu == 3);
    const Mat se = q.S * rp.E * q.T, sa = q.S * rp.A * q.T;
    CHECK(se.topLeftCorner(3, 3).isIdentity(1e-9));
    CHECK(sa.bottomRightCorner(4, 4).isIdentity(1e-9));
    CHECK(se.topRightCorner(3, 4).norm() < 1e-9);
    CHECK(sa.bottomLeftCorner(4, 3).norm() < 1e-9);
}

TEST_CASE("state jumps of the jump pair are visible in the output") {
    const auto jf = reformulate_jumpflow(gen_msd_jump_pair(6, 1));
    const auto sig = SwitchingSignal::periodic(0.0, 3.0, 1.0, 2);
    const auto rec = simulate(fom_ode(jf), sig, InputSignal::sine(), {0.01, 1e-8, 1e-10});
    REQUIRE(rec.jumps.size() == 2);
    double biggest = 0.0;
    for (const auto& j : rec.jumps) biggest = std::max(biggest, (j.x_post - jf.P(j.to, j.from) * j.x_pre).norm());
    CHECK(biggest > 1e-6);  // the input drives the jump
    double ydiff = 0.0;
    for (const auto& j : rec.jumps) ydiff = std::max(ydiff, (j.y_post - j.y_pre).norm());
    CHECK(ydiff > 1e-6);
}

TEST_CASE("without input jumps the switch map ignores the input") {
    const auto jf = reformulate_jumpflow(gen_msd(6, 3, 4));
    const auto ode = fom_ode(jf);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            if (k != l) CHECK(ode.input_jump[std::size_t(k)][std::size_t(l)].norm() < 1e-10);
}

TEST_CASE("tightening the integrator changes the output by little") {
    const auto jf = reformulate_jumpflow(gen_msd(6, 3, 4));
    const auto sig = SwitchingSignal::periodic(0.0, 4.0, 1.0, 3);
    const auto a = simulate(fom_ode(jf), sig, InputSignal::sine(), {0.02, 1e-7, 1e-9});
    const auto b = simulate(fom_ode(jf), sig, InputSignal::sine(), {0.02, 1e-8, 1e-10});
    CHECK(output_error(b, a).abs_l2 <= 5e-7 * std::max(1.0, grid_l2(b)));
}
