#pragma once

#include <vector>

#include "qh/constants.hpp"
#include "qh/field.hpp"
#include "qh/oscillating_hydro.hpp"

namespace qh {

// Time-stamped fields on one grid.
struct FieldSeries {
    std::vector<double> t;
    std::vector<ScalarField> f;

    void push(double time, ScalarField field);
    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }
    const Grid& grid() const { return f.front().grid(); }
};

FieldSeries density_series(const std::vector<HydroState>& states);
FieldSeries action_series(const std::vector<HydroState>& states);

// Shifts each sample by a multiple of 2 pi hbar so S at `anchor` (normally the density
// maximum) changes by less than pi hbar between samples.
void unwrap_action_in_time(FieldSeries& S, double hbar, std::size_t anchor);

// Centered moving average over exactly `window_periods` fast periods (trapezoid rule).
// Output sample j is centered at t_j + window*T/2; trimmed ends are never extrapolated.
FieldSeries cycle_average(const FieldSeries& s, double omega, std::size_t window_periods = 1);

// 2 MA - MA(MA) for the moving average MA above. A single moving average carries a
// T^2 f''/24 bias on slow curvature; this form cancels it. Trims one further window.
// Needs an even number of samples per window.
FieldSeries corrected_cycle_average(const FieldSeries& s, double omega, std::size_t window_periods = 1);

// series - slow at every time of `slow`; each slow time must be a sample time of `series`.
FieldSeries extract_fast(const FieldSeries& series, const FieldSeries& slow);

struct FastSlowDecomposition {
    FieldSeries slow_rho;
    FieldSeries slow_S;
    FieldSeries fast_zeta;
    FieldSeries fast_sigma;
    std::size_t window = 1;
    double omega = 0.0;
    // |<fast>| over the first window of the fast series relative to its RMS; NaN when the
    // fast series is shorter than one window.
    double zeta_mean_to_rms = 0.0;
    double sigma_mean_to_rms = 0.0;
};

// Slow parts from corrected_cycle_average, fast parts by extract_fast.
FastSlowDecomposition decompose(const FieldSeries& rho_r, const FieldSeries& S_r, double omega,
                                std::size_t window_periods = 1);

// Relative RMS (quadrature-weighted over space and all samples) of the extracted fast parts against
//   sigma = (hbar/sqrt2) sin(wt) ln rho,  zeta = (hbar/(sqrt2 w)) cos(wt) sum_k lap_k rho/m_k
// evaluated on the slow density at each sample. sigma is compared with density weighting.
struct FastComponentError {
    double sigma = 0.0;
    double zeta = 0.0;
};

FastComponentError fast_component_error(const FastSlowDecomposition& d, const PhysicalConstants& c);

// The analytic fast parts over a slow density series (same time base). lap rho is taken as
// rho (d^2 ln rho + (d ln rho)^2), the form the solver and the seeding use.
FastSlowDecomposition analytic_fast_components(const FieldSeries& slow_rho, double omega, const PhysicalConstants& c);

struct IdentityReport {
    // <zeta grad sigma>, normalized by <|zeta||grad sigma|>.
    double zeta_grad_sigma = 0.0;
    // sum_a <(d_a sigma)^2>/2m_a against sum_a hbar^2 (d_a rho)^2/(8 m_a rho^2).
    double kinetic = 0.0;
    // (hbar w/(sqrt2 rho)) <zeta cos wt> against sum_a hbar^2 d_a^2 rho/(4 m_a rho).
    double pressure = 0.0;
    // Relative residuals when the reference side is nonzero, absolute otherwise (rho-weighted L2).
    bool kinetic_relative = true;
    bool pressure_relative = true;
    double tolerance = 0.0;
    bool passed() const;
};

// sigma, zeta, rho share one time base spanning a whole number of fast periods. rho is the slow
// density; its time average over the window is used on the reference sides, written through
// l = ln rho: |grad rho|^2/rho^2 = (grad l)^2 and lap rho/rho = lap l + (grad l)^2.
IdentityReport verify_identities(const FieldSeries& sigma, const FieldSeries& zeta, const FieldSeries& rho,
                                 double omega, const PhysicalConstants& c, double tolerance);

struct SlowResidual {
    std::vector<double> t;  // interior samples
    std::vector<ScalarField> hj;
    std::vector<ScalarField> continuity;
    double hj_norm = 0.0;          // max over t of sqrt(int rho hj^2 / int rho)
    double continuity_norm = 0.0;  // max over t of ||continuity||_2
};

// Left sides of the recovered equations with centered time differences:
//   dS/dt + sum_a (d_a S - qA_a/c)^2/2m_a + U + U_q(rho)   and   drho/dt + div(rho v).
// A may be null.
SlowResidual recovered_slow_residual(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U,
                                     const PhysicalConstants& c, const VectorField* A = nullptr);

struct ScaleEstimates {
    double V = 0.0;
    double L = 0.0;
    double T = 0.0;  // infinite when V = 0
    double S_m = 0.0;
    double ratio_omegaT = 0.0;
    double zeta_rho_bound = 0.0;
};

// V = max |grad S|/m over nodes with rho >= 1e-3 max rho; L = rho-weighted RMS extent.
ScaleEstimates scale_estimates(const ScalarField& rho, const ScalarField& S, double omega, const PhysicalConstants& c);

// Largest over samples of the rho-weighted mean of |zeta|/rho.
double measured_zeta_over_rho(const FieldSeries& zeta, const FieldSeries& slow_rho);

}  // namespace qh
