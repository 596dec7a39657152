#pragma once

#include "swmor/balancing.hpp"
#include "swmor/model.hpp"
#include "swmor/simulator.hpp"

#include <filesystem>
#include <string>

namespace swmor::io {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// printf %.17g
std::string fmt17(double v);

// Matrix Market "coordinate real general". Dense matrices are written with
// their nonzero entries only; the header keeps the shape, so 0x0 round-trips.
void write_mtx(const fs::path& path, const SpMat& a);
void write_mtx(const fs::path& path, const Mat& a);
SpMat read_mtx(const fs::path& path);  // also accepts "symmetric"
Mat read_mtx_dense(const fs::path& path);

// Bundle directory: manifest.json plus one .mtx file per matrix.
void write_system(const fs::path& dir, const SwitchedSystem& sys);
SwitchedSystem read_system(const fs::path& dir);

// Modes are zero-based in files as in memory.
void write_signal(const fs::path& path, const SwitchingSignal& sig);
SwitchingSignal read_signal(const fs::path& path);

void write_rom(const fs::path& dir, const RomBundle& rom);
RomBundle read_rom(const fs::path& dir);

struct CertificateInfo {
    double tol = 0.0;
    double gamma = 1.0;
    double err_radius_P = 0.0, err_radius_Q = 0.0;
    int iterations_P = 0, iterations_Q = 0;
    BoundReport bound;
    Vec hankel;
};
void write_certificate(const fs::path& path, const CertificateInfo& info);
CertificateInfo read_certificate(const fs::path& path);

// Header "t,y1,...,yp"; switch instants hold right limits.
void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec);
void write_impulses_json(const fs::path& path, const TrajectoryRecord& rec);
// One row per outer iteration, for both Gramians.
void write_gle_telemetry_csv(const fs::path& path, const GramianPair& g);
// One row per reduced order: Hankel value and the bound pieces.
void write_bounds_csv(const fs::path& path, const std::vector<BoundReport>& rows, const Vec& hankel);

}  // namespace swmor::io
