#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qh/constants.hpp"
#include "qh/field.hpp"
#include "qh/schrodinger.hpp"

namespace qh {

struct OscillationConfig {
    double omega = 100.0;
    std::size_t substeps_per_period = 32;  // K; dt = 2 pi/(omega K)
    bool seed_fast = true;
    // Off only for degenerate checks: drops the (hbar w/sqrt2) cos(wt) ln rho_r term.
    bool oscillating_term = true;
    // ln rho_r is tracked directly, so the floor only catches runaway steps.
    double rho_floor = 1e-100;

    double period() const;
    double dt() const;
    void validate() const;
};

// The true fields. Density is stored as ln rho_r so it cannot go negative.
struct HydroState {
    ScalarField log_rho;
    ScalarField S;
    double t = 0.0;

    static HydroState from_density(const ScalarField& rho, const ScalarField& S, double t, double rho_floor);
    ScalarField rho_r() const;
    double mass() const;
    // (dS - qA/c)/m per axis; A may be null.
    VectorField velocity(const PhysicalConstants& c, const VectorField* A = nullptr) const;
};

// p = -(hbar w/sqrt2) rho_r cos(wt); T_gas = p/(k rho_r).
struct PressureLaw {
    double hbar = 1.0;
    double omega = 1.0;

    double coefficient(double t) const;
    ScalarField pressure(const ScalarField& rho_r, double t) const;
    double temperature(double t, double boltzmann = 1.0) const;
};

// Everything the stepper needs besides the state: U (q phi for EM), optional A, masses per axis.
struct HydroModel {
    ScalarField U;
    VectorField A;  // no components when absent
    PhysicalConstants consts;

    static HydroModel scalar(const ScalarField& U, const PhysicalConstants& c);
    static HydroModel scalar(const Grid& g, const PotentialSpec& U, const PhysicalConstants& c);
    static HydroModel em(const EMPotentialSpec& em, const PhysicalConstants& c);
    // Two 1D particles on a 2-axis configuration grid.
    static HydroModel many(const ScalarField& U, const PhysicalConstants& c);

    bool has_vector_potential() const { return !A.components.empty(); }
    const Grid& grid() const { return U.grid(); }

    // Cached dA_a/dx_a; filled by the factories.
    std::vector<ScalarField> divA_parts;
};

// One RK4 step of the log-density form:
//   d ln rho_r/dt = -sum_a (1/m_a)(d_a ln rho_r P_a + d_a P_a),  P_a = d_a S_r - q A_a/c
//   dS_r/dt      = -sum_a P_a^2/(2 m_a) - U + (hbar w/sqrt2) cos(wt) ln rho_r
// A step producing non-finite or sub-floor values is retried once as two half steps.
HydroState advance(const HydroState& s, const HydroModel& model, const OscillationConfig& osc, double dt);

HydroState hj_step(const HydroState& s, const ScalarField& U, const PhysicalConstants& c,
                   const OscillationConfig& osc, double dt);
HydroState hj_step_em(const HydroState& s, const EMPotentialSpec& em, const PhysicalConstants& c,
                      const OscillationConfig& osc, double dt);
HydroState hj_step_many(const HydroState& s, const ScalarField& U, const PhysicalConstants& c,
                        const OscillationConfig& osc, double dt);

struct FastComponents {
    ScalarField sigma;
    ScalarField zeta;
};

// sigma = (hbar/sqrt2) sin(w t0) ln rho; zeta = (hbar/(sqrt2 w)) cos(w t0) sum_k lap_k rho / m_k.
FastComponents seed_fast_components(const ScalarField& rho, double t0, const OscillationConfig& osc,
                                    const PhysicalConstants& c);

// Slow (rho, S) plus analytic fast parts at t0, written in log form:
// ln rho_r = ln rho + zeta/rho to first order in 1/w, then shifted so int rho_r = int rho.
HydroState seeded_state(const ScalarField& rho, const ScalarField& S, double t0, const OscillationConfig& osc,
                        const PhysicalConstants& c);

// Linear stability of the discrete system. Both margins should stay below 1.
struct StabilityMargins {
    // (hbar/(0.642 w)) sum_a lambda_max,a/m_a: parametric resonance of the shortest resolved mode.
    double parametric = 0.0;
    // max |d_a ln rho_r| dx_a/(2*0.9): advection of the fast density by the log-gradient.
    double peclet = 0.0;
};

StabilityMargins stability_margins(const HydroState& s, const HydroModel& model, const OscillationConfig& osc);

// Max |grad(dS/dt)/m - (Euler-form acceleration)| relative to the acceleration scale;
// the Euler form uses the pressure law explicitly.
double euler_form_mismatch(const HydroState& s, const HydroModel& model, const OscillationConfig& osc);

struct PeriodRecord {
    std::size_t index = 0;
    double t_start = 0.0;
    double t_center = 0.0;
    ScalarField rho_avg;  // trapezoid over K+1 samples spanning the period
    ScalarField S_avg;
    double mass = 0.0;         // of rho_r at the end of the period
    double slow_energy = 0.0;  // int rho (|grad S - qA/c|^2/2m + U + hbar^2 |grad ln rho|^2/8m) of the averages
};

struct RunOptions {
    double duration = 0.0;  // rounded down to whole fast periods
    // Substep samples kept for periods [capture_first, capture_first + capture_count).
    std::size_t capture_first = 0;
    std::size_t capture_count = 0;
    bool diagnostics = true;
    std::function<void(const PeriodRecord&)> on_period;
};

struct RunDiagnostics {
    std::vector<double> mass;  // at t0 and each period end
    double max_mass_drift = 0.0;
    double convective_ratio = 0.0;  // rms(|P|^2/2m) / rms(oscillating term), rho_r-weighted
    double max_curl = 0.0;          // 2D only
    double max_pressure_mismatch = 0.0;
    StabilityMargins margins;
    std::size_t steps = 0;
    std::size_t retried_steps = 0;
};

struct RunResult {
    HydroState initial;
    HydroState final;
    std::vector<PeriodRecord> periods;
    std::vector<HydroState> captured;
    RunDiagnostics diag;
    bool completed = true;
    std::string error;
};

// Steps whole fast periods from `initial` (already seeded if desired). Errors stop the run and
// are reported in the result together with everything recorded so far.
RunResult run(const HydroState& initial, const HydroModel& model, const OscillationConfig& osc,
              const RunOptions& opts);

// Madelung-decomposes psi, seeds the fast parts when osc.seed_fast is set, then runs.
RunResult run_from_wavefunction(const Wavefunction& psi, double t0, const HydroModel& model,
                                const OscillationConfig& osc, const RunOptions& opts);

}  // namespace qh
