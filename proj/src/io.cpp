#include "swmor/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace swmor::io {

namespace {

const std::string kMod = "io";
using json = nlohmann::json;

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(kMod, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(kMod, "cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(kMod, "cannot read " + path.string());
    return in;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError(kMod, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

json read_json(const fs::path& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(kMod, path.string() + ": " + e.what());
    }
}

void check_schema(const json& j, const std::string& kind, const fs::path& path) {
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw IoError(kMod, path.string() + ": unsupported schema_version");
        if (j.at("kind").get<std::string>() != kind)
            throw IoError(kMod, path.string() + ": expected kind \"" + kind + "\"");
    } catch (const json::exception& e) {
        throw IoError(kMod, path.string() + ": " + e.what());
    }
}

template <class T>
T field(const json& j, const char* key, const fs::path& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw IoError(kMod, path.string() + ": field \"" + key + "\": " + e.what());
    }
}

// JSON has no NaN; nlohmann writes it as null.
double number(const json& j, const char* key, const fs::path& path) {
    const auto it = j.find(key);
    if (it != j.end() && it->is_null()) return std::numeric_limits<double>::quiet_NaN();
    return field<double>(j, key, path);
}

std::vector<double> to_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

// Stores a matrix next to the manifest and returns its relative name.
std::string put(const fs::path& dir, const std::string& name, const Mat& a) {
    write_mtx(dir / (name + ".mtx"), a);
    return name + ".mtx";
}

std::string pair_name(const std::string& base, std::size_t k, std::size_t l) {
    return base + "_" + std::to_string(k) + "_" + std::to_string(l);
}

}  // namespace

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_mtx(const fs::path& path, const SpMat& a) {
    SpMat c = a;
    c.prune(0.0);
    c.makeCompressed();
    std::ostringstream body;
    Index nnz = 0;
    for (Index j = 0; j < c.outerSize(); ++j)
        for (SpMat::InnerIterator it(c, j); it; ++it, ++nnz)
            body << it.row() + 1 << ' ' << it.col() + 1 << ' ' << fmt17(it.value()) << '\n';
    auto out = open_out(path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << c.rows() << ' ' << c.cols() << ' ' << nnz << '\n' << body.str();
    finish(out, path);
}

void write_mtx(const fs::path& path, const Mat& a) { write_mtx(path, SpMat(a.sparseView())); }

SpMat read_mtx(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(kMod, path.string() + ": empty file");
    std::string lower = line;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    std::istringstream head(lower);
    std::string banner, object, format, field_kind, symmetry;
    head >> banner >> object >> format >> field_kind >> symmetry;
    if (banner != "%%matrixmarket" || object != "matrix" || format != "coordinate")
        throw IoError(kMod, path.string() + ": not a Matrix Market coordinate matrix");
    if (field_kind != "real" && field_kind != "double" && field_kind != "integer")
        throw IoError(kMod, path.string() + ": unsupported field \"" + field_kind + "\"");
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general")
        throw IoError(kMod, path.string() + ": unsupported symmetry \"" + symmetry + "\"");

    while (std::getline(in, line))
        if (!line.empty() && line[0] != '%') break;
    long rows = -1, cols = -1, nnz = -1;
    if (!(std::istringstream(line) >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
        throw IoError(kMod, path.string() + ": bad size line");

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    for (long k = 0; k < nnz; ++k) {
        long i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v)) throw IoError(kMod, path.string() + ": truncated entry list");
        if (i < 1 || i > rows || j < 1 || j > cols) throw IoError(kMod, path.string() + ": index out of range");
        trip.emplace_back(i - 1, j - 1, v);
        if (symmetric && i != j) trip.emplace_back(j - 1, i - 1, v);
    }
    SpMat a(rows, cols);
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

Mat read_mtx_dense(const fs::path& path) { return Mat(read_mtx(path)); }

void write_system(const fs::path& dir, const SwitchedSystem& sys) {
    sys.check();
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "switched_system";
    j["n"] = sys.n();
    j["m"] = sys.m();
    j["p"] = sys.p();
    j["M"] = sys.M();
    j["modes"] = json::array();
    for (int q = 0; q < sys.M(); ++q) {
        const auto& md = sys.modes[static_cast<std::size_t>(q)];
        const std::string s = std::to_string(q);
        write_mtx(dir / ("E" + s + ".mtx"), md.E);
        write_mtx(dir / ("A" + s + ".mtx"), md.A);
        j["modes"].push_back({{"E", "E" + s + ".mtx"},
                              {"A", "A" + s + ".mtx"},
                              {"B", put(dir, "B" + s, md.B)},
                              {"C", put(dir, "C" + s, md.C)}});
    }
    write_json(dir / "manifest.json", j);
}

SwitchedSystem read_system(const fs::path& dir) {
    const fs::path mp = dir / "manifest.json";
    const json j = read_json(mp);
    check_schema(j, "switched_system", mp);
    SwitchedSystem sys;
    for (const auto& md : field<json>(j, "modes", mp)) {
        sys.modes.push_back({read_mtx(dir / field<std::string>(md, "E", mp)),
                             read_mtx(dir / field<std::string>(md, "A", mp)),
                             read_mtx_dense(dir / field<std::string>(md, "B", mp)),
                             read_mtx_dense(dir / field<std::string>(md, "C", mp))});
    }
    if (sys.M() != field<int>(j, "M", mp) || sys.n() != field<Index>(j, "n", mp) ||
        sys.m() != field<Index>(j, "m", mp) || sys.p() != field<Index>(j, "p", mp))
        throw IoError(kMod, mp.string() + ": manifest sizes disagree with the matrices");
    sys.check();
    return sys;
}

void write_signal(const fs::path& path, const SwitchingSignal& sig) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "switching_signal";
    j["t0"] = sig.t0;
    j["tFinal"] = sig.tFinal;
    j["events"] = json::array();
    for (const auto& e : sig.events) j["events"].push_back({{"t", e.t}, {"mode", e.mode}});
    write_json(path, j);
}

SwitchingSignal read_signal(const fs::path& path) {
    const json j = read_json(path);
    check_schema(j, "switching_signal", path);
    SwitchingSignal sig;
    sig.t0 = field<double>(j, "t0", path);
    sig.tFinal = field<double>(j, "tFinal", path);
    for (const auto& e : field<json>(j, "events", path))
        sig.events.push_back({field<double>(e, "t", path), field<int>(e, "mode", path)});
    return sig;
}

void write_rom(const fs::path& dir, const RomBundle& rom) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "reduced_model";
    j["r"] = rom.r;
    j["ref_mode"] = rom.ref_mode;
    j["M"] = rom.M();
    j["hankel"] = to_vector(rom.hankel);
    j["warnings"] = rom.warnings;
    j["V"] = put(dir, "V", rom.V);
    j["W"] = put(dir, "W", rom.W);
    j["V_full"] = put(dir, "V_full", rom.V_full);
    j["W_full"] = put(dir, "W_full", rom.W_full);
    j["modes"] = json::array();
    const auto sM = static_cast<std::size_t>(rom.M());
    for (std::size_t q = 0; q < sM; ++q) {
        const std::string s = std::to_string(q);
        j["modes"].push_back({{"A", put(dir, "A" + s, rom.A[q])},
                              {"B", put(dir, "B" + s, rom.B[q])},
                              {"C", put(dir, "C" + s, rom.C[q])},
                              {"D", put(dir, "D" + s, rom.D[q])}});
    }
    j["switches"] = json::array();
    for (std::size_t k = 0; k < sM; ++k)
        for (std::size_t l = 0; l < sM; ++l) {
            if (k == l) continue;
            json sw{{"to", k}, {"from", l}};
            sw["jump"] = put(dir, pair_name("jump", k, l), rom.jump[k][l]);
            sw["input_jump"] = put(dir, pair_name("input_jump", k, l), rom.input_jump[k][l]);
            sw["imp_state"] = json::array();
            sw["imp_input"] = json::array();
            for (std::size_t i = 0; i < rom.imp_state[k][l].size(); ++i) {
                const std::string suffix = "_" + std::to_string(i);
                sw["imp_state"].push_back(put(dir, pair_name("imp_state", k, l) + suffix, rom.imp_state[k][l][i]));
                sw["imp_input"].push_back(put(dir, pair_name("imp_input", k, l) + suffix, rom.imp_input[k][l][i]));
            }
            j["switches"].push_back(std::move(sw));
        }
    write_json(dir / "manifest.json", j);
}

RomBundle read_rom(const fs::path& dir) {
    const fs::path mp = dir / "manifest.json";
    const json j = read_json(mp);
    check_schema(j, "reduced_model", mp);
    auto load = [&](const json& obj, const char* key) {
        return read_mtx_dense(dir / field<std::string>(obj, key, mp));
    };
    RomBundle rom;
    rom.r = field<Index>(j, "r", mp);
    rom.ref_mode = field<int>(j, "ref_mode", mp);
    const auto h = field<std::vector<double>>(j, "hankel", mp);
    rom.hankel = Eigen::Map<const Vec>(h.data(), static_cast<Index>(h.size()));
    rom.warnings = field<std::vector<std::string>>(j, "warnings", mp);
    rom.V = load(j, "V");
    rom.W = load(j, "W");
    rom.V_full = load(j, "V_full");
    rom.W_full = load(j, "W_full");
    for (const auto& md : field<json>(j, "modes", mp)) {
        rom.A.push_back(load(md, "A"));
        rom.B.push_back(load(md, "B"));
        rom.C.push_back(load(md, "C"));
        rom.D.push_back(load(md, "D"));
    }
    const auto sM = static_cast<std::size_t>(rom.M());
    if (static_cast<int>(sM) != field<int>(j, "M", mp)) throw IoError(kMod, mp.string() + ": mode count mismatch");
    rom.jump.assign(sM, std::vector<Mat>(sM));
    rom.input_jump.assign(sM, std::vector<Mat>(sM));
    rom.imp_state.assign(sM, std::vector<std::vector<Mat>>(sM));
    rom.imp_input.assign(sM, std::vector<std::vector<Mat>>(sM));
    for (const auto& sw : field<json>(j, "switches", mp)) {
        const auto k = field<std::size_t>(sw, "to", mp), l = field<std::size_t>(sw, "from", mp);
        if (k >= sM || l >= sM || k == l) throw IoError(kMod, mp.string() + ": bad switch entry");
        rom.jump[k][l] = load(sw, "jump");
        rom.input_jump[k][l] = load(sw, "input_jump");
        for (const auto& f : field<std::vector<std::string>>(sw, "imp_state", mp))
            rom.imp_state[k][l].push_back(read_mtx_dense(dir / f));
        for (const auto& f : field<std::vector<std::string>>(sw, "imp_input", mp))
            rom.imp_input[k][l].push_back(read_mtx_dense(dir / f));
    }
    return rom;
}

void write_certificate(const fs::path& path, const CertificateInfo& info) {
    const BoundReport& b = info.bound;
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "certificate";
    j["tol"] = info.tol;
    j["gamma"] = info.gamma;
    j["err_radius_P"] = info.err_radius_P;
    j["err_radius_Q"] = info.err_radius_Q;
    j["iterations_P"] = info.iterations_P;
    j["iterations_Q"] = info.iterations_Q;
    j["r"] = b.r;
    j["n_tilde"] = b.n_tilde;
    j["tail"] = b.tail;
    j["floor"] = b.floor;
    j["practical"] = b.practical;
    j["structural"] = b.structural;
    j["certificate"] = b.certificate;
    j["c1"] = b.c1;
    j["c2"] = b.c2;
    j["note"] = b.note;
    j["hankel"] = to_vector(info.hankel);
    write_json(path, j);
}

CertificateInfo read_certificate(const fs::path& path) {
    const json j = read_json(path);
    check_schema(j, "certificate", path);
    CertificateInfo info;
    info.tol = field<double>(j, "tol", path);
    info.gamma = field<double>(j, "gamma", path);
    info.err_radius_P = number(j, "err_radius_P", path);
    info.err_radius_Q = number(j, "err_radius_Q", path);
    info.iterations_P = field<int>(j, "iterations_P", path);
    info.iterations_Q = field<int>(j, "iterations_Q", path);
    BoundReport& b = info.bound;
    b.tol = info.tol;
    b.r = field<Index>(j, "r", path);
    b.n_tilde = field<Index>(j, "n_tilde", path);
    b.tail = number(j, "tail", path);
    b.floor = number(j, "floor", path);
    b.practical = number(j, "practical", path);
    b.structural = number(j, "structural", path);
    b.certificate = number(j, "certificate", path);
    b.structural_larger = b.structural > b.practical;
    b.c1 = number(j, "c1", path);
    b.c2 = number(j, "c2", path);
    b.note = field<std::string>(j, "note", path);
    const auto h = field<std::vector<double>>(j, "hankel", path);
    info.hankel = Eigen::Map<const Vec>(h.data(), static_cast<Index>(h.size()));
    return info;
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec) {
    auto out = open_out(path);
    out << 't';
    for (Index c = 0; c < rec.y.cols(); ++c) out << ",y" << c + 1;
    out << '\n';
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        out << fmt17(rec.t[i]);
        for (Index c = 0; c < rec.y.cols(); ++c) out << ',' << fmt17(rec.y(static_cast<Index>(i), c));
        out << '\n';
    }
    finish(out, path);
}

void write_impulses_json(const fs::path& path, const TrajectoryRecord& rec) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "impulses";
    j["entries"] = json::array();
    for (const auto& e : rec.impulses) j["entries"].push_back({{"t", e.t}, {"order", e.order}, {"coef", to_vector(e.coef)}});
    j["jumps"] = json::array();
    for (const auto& e : rec.jumps)
        j["jumps"].push_back({{"t", e.t}, {"from", e.from}, {"to", e.to},
                              {"y_pre", to_vector(e.y_pre)}, {"y_post", to_vector(e.y_post)}});
    write_json(path, j);
}

void write_gle_telemetry_csv(const fs::path& path, const GramianPair& g) {
    auto out = open_out(path);
    out << "gramian,iteration,rank,basis_dim,z_fro,diff_fro,gram_diff_fro,res_fro,bound\n";
    auto rows = [&](const char* label, const LowRankGramian& lg) {
        for (std::size_t k = 0; k < lg.telemetry.size(); ++k) {
            const OuterRecord& r = lg.telemetry[k];
            out << label << ',' << k + 1 << ',' << r.rank << ',' << r.basis_dim << ',' << fmt17(r.z_fro) << ','
                << fmt17(r.diff_fro) << ',' << fmt17(r.gram_diff_fro) << ',' << fmt17(r.res_fro) << ','
                << fmt17(r.bound) << '\n';
        }
    };
    rows("P", g.P);
    rows("Q", g.Q);
    finish(out, path);
}

void write_bounds_csv(const fs::path& path, const std::vector<BoundReport>& rows, const Vec& hankel) {
    auto out = open_out(path);
    out << "r,hankel_r,n_tilde,tail,floor,practical,structural,certificate\n";
    for (const auto& b : rows) {
        const double h = b.r >= 1 && b.r <= hankel.size() ? hankel(b.r - 1) : 0.0;
        out << b.r << ',' << fmt17(h) << ',' << b.n_tilde << ',' << fmt17(b.tail) << ',' << fmt17(b.floor) << ','
            << fmt17(b.practical) << ',' << fmt17(b.structural) << ',' << fmt17(b.certificate) << '\n';
    }
    finish(out, path);
}

}  // namespace swmor::io
