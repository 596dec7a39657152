// swmor: generate benchmark systems, reduce them, simulate and compare.
#include "swmor/benchmarks.hpp"
#include "swmor/io.hpp"
#include "swmor/pipeline.hpp"
#include "swmor/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace swmor;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNonConvergence = 3, kIo = 4 };

struct GenerateArgs {
    std::string family;
    Index size = 50;
    int modes = 5;
    std::uint64_t seed = 1;
    double dwell = 2.0, tfinal = 10.0;
    std::string out;
};

struct ReduceArgs {
    std::string system, out;
    Index order = 20;
    double tol = 1e-12;
    bool input_jumps = false, output_impulses = false;
};

struct SimArgs {
    std::string system, rom, signal, input = "sin", out;
    std::optional<double> tfinal;
    double dt = 0.01, rtol = 1e-8, atol = 1e-10;
};

SwitchingSignal load_signal(const SimArgs& a) {
    auto sig = io::read_signal(a.signal);
    if (a.tfinal) sig.tFinal = *a.tfinal;
    return sig;
}

SimOptions sim_options(const SimArgs& a) { return {a.dt, a.rtol, a.atol}; }

int run_generate(const GenerateArgs& a) {
    if (a.family == "signal") {
        io::write_signal(a.out, SwitchingSignal::periodic(0.0, a.tfinal, a.dwell, a.modes));
        return kOk;
    }
    SwitchedSystem sys;
    if (a.family == "msd") {
        sys = gen_msd(a.size, a.modes, a.seed);
    } else if (a.family == "msd-jump") {
        sys = gen_msd_jump_pair(a.size, a.seed);
    } else {
        sys = gen_stokes(a.size, a.modes, a.seed);
    }
    io::write_system(a.out, sys);
    std::cout << a.family << ": n = " << sys.n() << ", M = " << sys.M() << " -> " << a.out << '\n';
    return kOk;
}

int run_reduce(const ReduceArgs& a) {
    const auto sys = io::read_system(a.system);
    const Reduction red = prepare_reduction(sys, {a.tol, a.input_jumps, a.output_impulses});
    const ReducedModel rm = reduce_to(red, a.order);
    for (const auto& w : rm.rom.warnings) std::cerr << "warning: " << w << '\n';

    const fs::path out(a.out);
    io::write_rom(out, rm.rom);
    io::write_certificate(out / "certificate.json", {.tol = a.tol,
                                                     .gamma = 1.0,
                                                     .err_radius_P = red.g.P.err_radius,
                                                     .err_radius_Q = red.g.Q.err_radius,
                                                     .iterations_P = red.g.P.iterations,
                                                     .iterations_Q = red.g.Q.iterations,
                                                     .bound = rm.bound,
                                                     .hankel = rm.rom.hankel});
    io::write_gle_telemetry_csv(out / "gle_telemetry.csv", red.g);
    std::vector<BoundReport> rows;
    for (Index r = 1; r <= rm.bound.n_tilde; ++r) rows.push_back(certified_error_bound(red.g, rm.rom.hankel, r, a.tol));
    io::write_bounds_csv(out / "bounds.csv", rows, rm.rom.hankel);
    std::cout << "r = " << rm.rom.r << ", certificate = " << io::fmt17(rm.bound.certificate) << " -> " << a.out
              << '\n';
    return kOk;
}

TrajectoryRecord simulate_source(const SimArgs& a, bool rom_side) {
    const auto sig = load_signal(a);
    const auto input = InputSignal::parse(a.input);
    if (rom_side) return simulate(rom_ode(io::read_rom(a.rom)), sig, input, sim_options(a));
    return simulate(fom_ode(reformulate_jumpflow(io::read_system(a.system))), sig, input, sim_options(a));
}

void write_record(const fs::path& out, const TrajectoryRecord& rec) {
    io::write_trajectory_csv(out / "trajectory.csv", rec);
    io::write_impulses_json(out / "impulses.json", rec);
}

int run_simulate(const SimArgs& a) {
    if (a.system.empty() == a.rom.empty()) throw InvalidArgument("cli", "give exactly one of --system and --rom");
    const auto rec = simulate_source(a, !a.rom.empty());
    write_record(a.out, rec);
    std::cout << rec.t.size() << " samples, " << rec.jumps.size() << " switches -> " << a.out << '\n';
    return kOk;
}

int run_compare(const SimArgs& a) {
    if (a.system.empty() || a.rom.empty()) throw InvalidArgument("cli", "compare needs --system and --rom");
    const auto fom = simulate_source(a, false);
    const auto rom = simulate_source(a, true);
    const auto err = output_error(fom, rom);
    const fs::path out(a.out);
    write_record(out / "fom", fom);
    write_record(out / "rom", rom);

    nlohmann::json j;
    j["schema_version"] = io::kSchemaVersion;
    j["kind"] = "error_report";
    j["abs_l2"] = err.abs_l2;
    j["rel_l2"] = err.rel_to_input;
    j["impulse_diff"] = err.impulse_diff;
    const fs::path cert = fs::path(a.rom) / "certificate.json";
    std::string verdict = "NO_CERTIFICATE";
    if (fs::exists(cert)) {
        const auto info = io::read_certificate(cert);
        j["bound"] = info.bound.certificate;
        verdict = err.rel_to_input <= info.bound.certificate ? "PASS" : "FAIL";
    }
    j["bound_dominance"] = verdict;
    std::ofstream f(out / "report.json");
    f << j.dump(2) << '\n';
    if (!f) throw IoError("cli", "cannot write " + (out / "report.json").string());
    std::cout << "rel L2 error " << io::fmt17(err.rel_to_input) << ", bound dominance " << verdict << '\n';
    return kOk;
}

void add_sim_options(CLI::App* c, SimArgs& a) {
    c->add_option("--signal", a.signal, "switching signal JSON")->required();
    c->add_option("--input", a.input, "sin, sin:a,b, expchirp, quadchirp, poly:c0,c1,..., zero");
    c->add_option("--tfinal", a.tfinal, "override the signal end time");
    c->add_option("--dt", a.dt, "output spacing")->check(CLI::PositiveNumber);
    c->add_option("--rtol", a.rtol)->check(CLI::PositiveNumber);
    c->add_option("--atol", a.atol)->check(CLI::PositiveNumber);
    c->add_option("--out", a.out, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Balanced truncation for switched differential-algebraic systems"};
    app.require_subcommand(1);

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "write a benchmark system bundle or a periodic switching signal");
    gen->add_option("family", ga.family)->required()->check(CLI::IsMember({"msd", "msd-jump", "stokes", "signal"}));
    gen->add_option("--size", ga.size, "masses for msd, grid cells per side for stokes")->check(CLI::PositiveNumber);
    gen->add_option("--modes", ga.modes)->check(CLI::PositiveNumber);
    gen->add_option("--seed", ga.seed);
    gen->add_option("--dwell", ga.dwell, "signal only")->check(CLI::PositiveNumber);
    gen->add_option("--tfinal", ga.tfinal, "signal only")->check(CLI::PositiveNumber);
    gen->add_option("--out", ga.out, "bundle directory, or JSON file for a signal")->required();

    ReduceArgs ra;
    auto* red = app.add_subcommand("reduce", "balanced truncation with a certified error bound");
    red->add_option("--system", ra.system)->required();
    red->add_option("--order", ra.order)->required();
    red->add_option("--tol", ra.tol)->check(CLI::PositiveNumber);
    red->add_flag("--input-jumps", ra.input_jumps);
    red->add_flag("--output-impulses", ra.output_impulses);
    red->add_option("--out", ra.out)->required();

    SimArgs sa;
    auto* sim = app.add_subcommand("simulate", "simulate a full or reduced model");
    sim->add_option("--system", sa.system);
    sim->add_option("--rom", sa.rom);
    add_sim_options(sim, sa);

    SimArgs ca;
    auto* cmp = app.add_subcommand("compare", "simulate both models and report the output error");
    cmp->add_option("--system", ca.system)->required();
    cmp->add_option("--rom", ca.rom)->required();
    add_sim_options(cmp, ca);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*gen) return run_generate(ga);
        if (*red) return run_reduce(ra);
        if (*sim) return run_simulate(sa);
        return run_compare(ca);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.category()) {
            case ErrorCategory::Validation: return kValidation;
            case ErrorCategory::NonConvergence: return kNonConvergence;
            case ErrorCategory::Io: return kIo;
        }
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kValidation;
}
