#include <doctest.h>

#include "../common/helpers.hpp"
#include "swmor/benchmarks.hpp"
#include "swmor/io.hpp"
#include "swmor/pipeline.hpp"

#include <fstream>

using namespace swmor;
using namespace swmor::test;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("swmor_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("matrix market round trip is bit exact") {
    TempDir d("mtx");
    CounterRng rng(51, 0);
    Mat a = rng.normal_matrix(7, 4) * 1e-3;
    a(2, 1) = 0.0;
    a(0, 0) = 1.0 / 3.0;
    io::write_mtx(d.path / "a.mtx", a);
    CHECK(io::read_mtx_dense(d.path / "a.mtx") == a);
    CHECK(io::read_mtx(d.path / "a.mtx").nonZeros() == 27);

    io::write_mtx(d.path / "empty.mtx", Mat(0, 0));
    const Mat e = io::read_mtx_dense(d.path / "empty.mtx");
    CHECK(e.rows() == 0);
    CHECK(e.cols() == 0);
    CHECK(slurp(d.path / "empty.mtx") == "%%MatrixMarket matrix coordinate real general\n0 0 0\n");
}

TEST_CASE("matrix market reader handles symmetric files and rejects bad ones") {
    TempDir d("mtx_sym");
    std::ofstream(d.path / "s.mtx") << "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4\n2 1 -1\n";
    CHECK(io::read_mtx_dense(d.path / "s.mtx") == mat(2, 2, {4, -1, -1, 0}));
    std::ofstream(d.path / "bad.mtx") << "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
    CHECK_THROWS_AS(io::read_mtx(d.path / "bad.mtx"), IoError);
    std::ofstream(d.path / "short.mtx") << "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n";
    CHECK_THROWS_AS(io::read_mtx(d.path / "short.mtx"), IoError);
    std::ofstream(d.path / "range.mtx") << "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n";
    CHECK_THROWS_AS(io::read_mtx(d.path / "range.mtx"), IoError);
    CHECK_THROWS_AS(io::read_mtx(d.path / "missing.mtx"), IoError);
}

TEST_CASE("fmt17 keeps seventeen significant digits") {
    CHECK(io::fmt17(0.1) == "0.10000000000000001");
    CHECK(std::stod(io::fmt17(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("system and signal bundles round trip") {
    TempDir d("bundle");
    const auto sys = gen_msd(5, 3, 7);
    io::write_system(d.path / "sys", sys);
    const auto back = io::read_system(d.path / "sys");
    REQUIRE(back.M() == 3);
    for (int q = 0; q < 3; ++q) {
        const auto& a = sys.modes[std::size_t(q)];
        const auto& b = back.modes[std::size_t(q)];
        CHECK(Mat(a.E) == Mat(b.E));
        CHECK(Mat(a.A) == Mat(b.A));
        CHECK(a.B == b.B);
        CHECK(a.C == b.C);
    }
    // writing twice gives identical bytes
    io::write_system(d.path / "sys2", back);
    CHECK(slurp(d.path / "sys" / "manifest.json") == slurp(d.path / "sys2" / "manifest.json"));
    CHECK(slurp(d.path / "sys" / "A1.mtx") == slurp(d.path / "sys2" / "A1.mtx"));

    const auto sig = SwitchingSignal::periodic(0.5, 4.0, 0.7, 3);
    io::write_signal(d.path / "sig.json", sig);
    const auto sb = io::read_signal(d.path / "sig.json");
    CHECK(sb.t0 == sig.t0);
    CHECK(sb.tFinal == sig.tFinal);
    REQUIRE(sb.events.size() == sig.events.size());
    for (std::size_t k = 0; k < sb.events.size(); ++k) {
        CHECK(sb.events[k].t == sig.events[k].t);
        CHECK(sb.events[k].mode == sig.events[k].mode);
    }
    CHECK_THROWS_AS(io::read_system(d.path), IoError);
    CHECK_THROWS_AS(io::read_signal(d.path / "sys" / "manifest.json"), IoError);
}

TEST_CASE("reduced model and certificate round trip") {
    TempDir d("rom");
    const Reduction red = prepare_reduction(gen_msd(6, 2, 3), {1e-10, false, false});
    const ReducedModel rm = reduce_to(red, 4);
    io::write_rom(d.path, rm.rom);
    const RomBundle back = io::read_rom(d.path);
    CHECK(back.r == rm.rom.r);
    CHECK(back.ref_mode == rm.rom.ref_mode);
    CHECK(back.hankel == rm.rom.hankel);
    CHECK(back.W_full == rm.rom.W_full);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back.A[k] == rm.rom.A[k]);
        CHECK(back.D[k] == rm.rom.D[k]);
        for (std::size_t l = 0; l < 2; ++l) {
            if (k == l) continue;
            CHECK(back.jump[k][l] == rm.rom.jump[k][l]);
            CHECK(back.input_jump[k][l] == rm.rom.input_jump[k][l]);
            REQUIRE(back.imp_state[k][l].size() == rm.rom.imp_state[k][l].size());
            for (std::size_t i = 0; i < back.imp_state[k][l].size(); ++i)
                CHECK(back.imp_input[k][l][i] == rm.rom.imp_input[k][l][i]);
        }
    }

    io::CertificateInfo info{.tol = 1e-10, .err_radius_P = std::numeric_limits<double>::quiet_NaN(), .bound = rm.bound};
    io::write_certificate(d.path / "certificate.json", info);
    const auto cb = io::read_certificate(d.path / "certificate.json");
    CHECK(std::isnan(cb.err_radius_P));
    CHECK(cb.bound.certificate == rm.bound.certificate);
    CHECK(cb.bound.n_tilde == rm.bound.n_tilde);
}

TEST_CASE("trajectory CSV has a header and p value columns") {
    TempDir d("traj");
    TrajectoryRecord r;
    r.t = {0.0, 0.5};
    r.y = mat(2, 2, {1, 2, 3, 0.25});
    io::write_trajectory_csv(d.path / "t.csv", r);
    CHECK(slurp(d.path / "t.csv") == "t,y1,y2\n0,1,2\n0.5,3,0.25\n");
}
