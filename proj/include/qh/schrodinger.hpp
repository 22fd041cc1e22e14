#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qh/constants.hpp"
#include "qh/field.hpp"

namespace qh {

struct PotentialSpec {
    enum class Kind { Free, Harmonic, Box, Barrier, GaussianWell, PairGaussian, Linear, Tabulated, Sum };

    Kind kind = Kind::Free;
    double omega0 = 1.0;    // harmonic
    double height = 0.0;    // barrier
    double width = 1.0;     // barrier, gaussian_well, pair_gaussian
    double depth = 0.0;     // gaussian_well
    double strength = 0.0;  // pair_gaussian
    double slope = 0.0;     // linear: U = slope * x_0
    std::shared_ptr<const ScalarField> table;
    std::vector<PotentialSpec> terms;

    static PotentialSpec free() { return {}; }
    static PotentialSpec harmonic(double w0);
    static PotentialSpec barrier(double height, double width);
    static PotentialSpec gaussian_well(double depth, double width);
    static PotentialSpec pair_gaussian(double strength, double width);
    static PotentialSpec linear(double slope);
    static PotentialSpec tabulated(ScalarField u);
    static PotentialSpec sum(std::vector<PotentialSpec> terms);

    // Box is U = 0 inside the grid; its walls are the dirichlet boundary nodes.
    static PotentialSpec box();

    ScalarField evaluate(const Grid& g, const PhysicalConstants& c) const;
    std::string describe() const;
};

struct EMPotentialSpec {
    VectorField A;
    ScalarField phi;

    static EMPotentialSpec zero(const Grid& g);
    static EMPotentialSpec uniform(const Grid& g, std::vector<double> a, const ScalarField& phi);

    bool is_uniform() const;
    // E = -grad phi (static A) and the scalar curl dA_y/dx - dA_x/dy on 2D grids.
    VectorField electric_field() const;
    ScalarField magnetic_field_2d() const;
};

enum class Scheme { SplitStep, ImplicitDifference };

const char* to_string(Scheme s);

Wavefunction evolve_schrodinger(const Wavefunction& psi0, const PotentialSpec& U, const PhysicalConstants& c,
                                double dt, std::size_t steps, Scheme scheme = Scheme::SplitStep);

Wavefunction evolve_schrodinger(const Wavefunction& psi0, const ScalarField& U, const PhysicalConstants& c,
                                double dt, std::size_t steps, Scheme scheme = Scheme::SplitStep);

Wavefunction evolve_schrodinger_em(const Wavefunction& psi0, const EMPotentialSpec& em, const PhysicalConstants& c,
                                   double dt, std::size_t steps);

// Two 1D particles on a 2-axis configuration grid; axis k carries mass c.mass(k).
Wavefunction evolve_schrodinger_many(const Wavefunction& psi0, const ScalarField& U, const PhysicalConstants& c,
                                     double dt, std::size_t steps);

double norm(const Wavefunction& psi);
void normalize(Wavefunction& psi);
// <psi|H|psi> with spectral kinetic energy; requires an all-periodic grid.
double energy(const Wavefunction& psi, const ScalarField& U, const PhysicalConstants& c);

// Initial states used by scenarios and tests.
Wavefunction gaussian_packet(const Grid& g, const std::vector<double>& center, const std::vector<double>& s0,
                             const std::vector<double>& k0);
Wavefunction harmonic_ground_state(const Grid& g, double omega0, const PhysicalConstants& c);
Wavefunction plane_wave(const Grid& g, const std::vector<double>& k);

struct MadelungFields {
    ScalarField rho;
    ScalarField S;
    // 1 where S was unwrapped; 0 in low-density tails that reach the domain edge.
    std::vector<unsigned char> valid;
};

double default_rho_floor(const ScalarField& rho);

// S is hbar times the phase unwrapped from the density maximum, axis by axis.
// A sub-floor node followed by supra-floor nodes on an unwrap path is a NodeError;
// a sub-floor run that extends to the domain edge is marked invalid instead.
MadelungFields madelung_decompose(const Wavefunction& psi, double rho_floor, double hbar = 1.0);
Wavefunction madelung_compose(const ScalarField& rho, const ScalarField& S, double hbar = 1.0);

}  // namespace qh
