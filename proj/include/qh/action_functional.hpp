#pragma once

#include <vector>

#include "qh/averaging.hpp"
#include "qh/constants.hpp"
#include "qh/field.hpp"

namespace qh {

// Stationarity residuals of the hydrodynamic action for a sampled history (rho, S) with
// time derivatives from centered differences. All quantities are evaluated at interior samples.
struct ActionReport {
    std::vector<double> t;
    std::vector<ScalarField> hj;
    std::vector<ScalarField> continuity;
    // int dt int rho (dS/dt + sum_a (d_a S)^2/2m_a + U [+ sum_a hbar^2 (d_a ln rho)^2/8m_a]) over
    // the interior samples, trapezoid in time.
    double action_value = 0.0;
    double hj_residual_norm = 0.0;          // max over t of sqrt(int rho hj^2 / int rho)
    double continuity_residual_norm = 0.0;  // max over t of ||continuity||_2
    // sum_a hbar^2/4m_a int dt of the outward flux of d_a rho through the dirichlet faces.
    // Periodic axes have no surface; the classical action has no such term.
    double boundary_term = 0.0;
};

// dS/dt + sum_a (d_a S)^2/2m_a + U   and   drho/dt + sum_a d_a(rho d_a S)/m_a.
ActionReport classical_action_residual(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U,
                                       const PhysicalConstants& c);

// As above with the quantum terms in the Hamilton-Jacobi residual,
//   + sum_a hbar^2/8m_a (d_a rho)^2/rho^2 - hbar^2/4m_a d_a^2 rho/rho,
// evaluated through ln rho. rho must stay at or above rho_floor (FloorViolation otherwise).
// With c.hbar = 0 this reduces exactly to the classical operator.
ActionReport quantum_action_residual(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U,
                                     const PhysicalConstants& c, double rho_floor);

// Outward flux of grad f through the dirichlet faces of its grid, per axis weighted by w[a].
double surface_flux(const ScalarField& f, const std::vector<double>& w);

}  // namespace qh
