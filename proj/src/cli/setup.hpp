#pragma once

// Config readers and the hydro-versus-reference runner shared by the experiment kinds.

#include <string>
#include <vector>

#include "qh/config.hpp"
#include "qh/oscillating_hydro.hpp"
#include "qh/scenario.hpp"
#include "qh/snapshot.hpp"

namespace qh::lab {

double positive(const Config& cfg, const std::string& key);
double positive(const Config& cfg, const std::string& key, double fallback);
std::size_t count(const Config& cfg, const std::string& key, std::size_t fallback, std::size_t lo, std::size_t hi);
std::vector<double> positive_list(const Config& cfg, const std::string& key, const std::vector<double>& fallback);

PhysicalConstants read_constants(const Config& cfg);

// [sec] dims, points, length, boundary; centered axes, at most 512^2 nodes.
Grid read_grid(const Config& cfg, const std::string& sec, Boundary fallback);

// [sec] kind = name[, name...] with per-kind parameters; tabulated reads a snapshot file.
PotentialSpec read_potential(const Config& cfg, const std::string& sec);

// Evaluates U on g, turning grid mismatches into a config error on the `kind` key.
ScalarField potential_on(const Config& cfg, const std::string& sec, const PotentialSpec& U, const Grid& g,
                         const PhysicalConstants& c);

struct InitialSpec {
    std::string state = "gaussian";  // gaussian | ground_state | snapshot
    std::vector<double> center{0.0}, width{1.0}, momentum{0.0};
    double omega0 = 1.0;
    bool has_snapshot = false;
    Snapshot snapshot;

    // On grid g; a snapshot on a finer grid is sampled at the coincident nodes.
    Wavefunction make(const Grid& g, const PhysicalConstants& c) const;
};

InitialSpec read_initial(const Config& cfg, const std::string& sec, std::size_t dims);

struct OscillationSpec {
    std::vector<double> omegas;
    std::size_t substeps = 32;
    bool seed_fast = true;
    double rho_floor = 1e-100;

    OscillationConfig at(double omega) const;
};

OscillationSpec read_oscillation(const Config& cfg, const std::vector<double>& omega_fallback = {});

// A hydro problem with a Schrodinger reference on a (usually finer, periodic) grid whose
// nodes include every hydro node.
struct PairedSystem {
    std::string system = "scalar";  // scalar | em | many_body
    PhysicalConstants consts;
    Grid hydro;
    Grid reference;
    double reference_dt = 1e-3;
    PotentialSpec potential;         // U, or phi for em
    std::vector<double> vector_potential;  // uniform A for em
    InitialSpec initial;

    HydroModel model() const;
    Wavefunction psi_hydro() const { return initial.make(hydro, consts); }
    Wavefunction psi_reference() const { return initial.make(reference, consts); }
    Wavefunction evolve_reference(const Wavefunction& psi, double dt, std::size_t steps) const;
};

// [scenario] system, [constants], [grid], [reference], [potential], [em], [initial].
PairedSystem read_paired(const Config& cfg, const std::string& system);

struct PairedRun {
    double omega = 0.0;
    OscillationConfig osc;
    RunResult hydro;
    std::vector<std::size_t> snapshot_periods;
    std::vector<ScalarField> reference;  // at the centers of snapshot_periods, on the hydro grid
    std::vector<double> errors;          // relative L2 of the averaged density
    double final_error = 0.0;
};

// Evenly spread period indices, always including the last.
std::vector<std::size_t> spread_indices(std::size_t n, std::size_t count);

PairedRun run_paired(const PairedSystem& s, const OscillationConfig& osc, double duration, std::size_t snapshots);

// Records for the hydro run and its reference, writing snapshots through ctx.
std::vector<RunRecord> record_paired(const PairedRun& r, const PairedSystem& s, const std::string& tag,
                                     const ExperimentContext& ctx);

// Per-period mass and energy, run diagnostics and scale estimates at the listed periods.
nlohmann::json hydro_info(const RunResult& r, const OscillationConfig& osc, const PhysicalConstants& c,
                          const std::vector<std::size_t>& periods);

// Least-squares slope of log(err) against log(omega), negated: err ~ omega^-p.
double decay_exponent(const std::vector<double>& omega, const std::vector<double>& err);

}  // namespace qh::lab
