#pragma once

#include "qh/constants.hpp"
#include "qh/field.hpp"

namespace qh {

// All operators take per-axis masses from PhysicalConstants, so on a configuration grid
// they produce the many-body sums over particles.

// -(hbar^2/2m) lap(sqrt rho)/sqrt rho. Throws FloorViolation where rho < rho_floor.
ScalarField quantum_potential(const ScalarField& rho, const PhysicalConstants& c, double rho_floor);

// (hbar^2/2m)(|grad rho|^2/(4 rho^2) - lap rho/(2 rho)); cross-check of the sqrt form.
ScalarField quantum_potential_expanded(const ScalarField& rho, const PhysicalConstants& c, double rho_floor);

struct QuantumPotentialParts {
    ScalarField prime;   // (hbar^2/8m)|grad ln rho|^2
    ScalarField dprime;  // -(hbar^2/4m) lap rho / rho
};

QuantumPotentialParts quantum_potential_parts(const ScalarField& rho, const PhysicalConstants& c, double rho_floor);

enum class EffectiveVariant { Schrodinger, Variational, TrueOscillating };

// Schrodinger: U + U_q. Variational: U + U'_q. TrueOscillating: U - (hbar w/sqrt2) cos(wt) ln rho.
ScalarField effective_potential(const ScalarField& U, const ScalarField& rho, EffectiveVariant variant,
                                const PhysicalConstants& c, double rho_floor, double t = 0.0, double omega = 0.0);

struct QuantumPotentialSet {
    ScalarField U_q;
    ScalarField U_q_prime;
    ScalarField U_q_dprime;
    ScalarField U_ef_schrodinger;
    ScalarField U_ef_variational;
};

QuantumPotentialSet quantum_potential_set(const ScalarField& U, const ScalarField& rho, const PhysicalConstants& c,
                                          double rho_floor);

// Force f_c cos(wt) + f_s sin(wt).
struct OscillatingForceSpec {
    VectorField f_c;
    VectorField f_s;
    double omega = 0.0;
};

// (|f_c|^2 + |f_s|^2)/(4 m w^2), axis by axis.
ScalarField ponderomotive_potential(const OscillatingForceSpec& force, const PhysicalConstants& c);

// f_c = (hbar w/sqrt2) grad ln rho, f_s = 0.
OscillatingForceSpec density_oscillating_force(const ScalarField& rho, double omega, const PhysicalConstants& c,
                                               double rho_floor);

// Charged particle in a uniform wave field q E0 cos(wt).
OscillatingForceSpec uniform_wave_force(const Grid& g, const std::vector<double>& qE0, double omega);

// Throws FloorViolation at the first node with rho < floor (or non-finite rho).
void check_floor(const ScalarField& rho, double rho_floor, const char* op);

}  // namespace qh
