#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "qh/constants.hpp"
#include "qh/field.hpp"

namespace qh {

struct SourceIndex;

// Randomly placed delta sources regularized as unit-mass Gaussians of width epsilon,
// truncated at 6 epsilon, all sharing one amplitude a(t) = (-(hbar w/sqrt2) cos wt - tau)/n.
struct DeltaSourceField {
    Grid domain;
    std::vector<Point> positions;
    double n = 0.0;  // sources per unit volume
    double epsilon = 0.0;
    double tau = 0.0;
    double hbar = 1.0;
    double omega = 1.0;
    std::uint64_t seed = 0;
    // False when n * volume < 1e3: too few sources for the averaged picture.
    bool statistically_dense = false;

    // Cell list over `positions`; sample_sources builds it, build_index() after manual edits.
    std::shared_ptr<const SourceIndex> index;
    void build_index();

    double amplitude(double t) const;
    // a(t) n + tau; with no sources only tau remains.
    double pressure_coefficient(double t) const;
    double cutoff() const { return 6.0 * epsilon; }
    void validate() const;
};

DeltaSourceField sample_sources(const Grid& domain, double n, double epsilon, std::uint64_t seed, double tau = 0.0,
                                double hbar = 1.0, double omega = 1.0);

// -grad U(r) + a(t) sum_k grad G_eps(r - r_k). grad_U holds the components of grad U
// on the source domain; it is interpolated multilinearly.
Point pinball_force(const Point& r, double t, const DeltaSourceField& sources, const VectorField& grad_U);

// Positions and velocities of M particles. Escaped particles (left a dirichlet axis) are frozen
// and excluded from every estimate.
struct EnsembleState {
    std::size_t dims = 1;
    double t = 0.0;
    std::vector<Point> r;
    std::vector<Point> v;
    std::vector<unsigned char> alive;
    std::uint64_t seed = 0;

    std::size_t size() const { return r.size(); }
    std::size_t alive_count() const;
};

// Independent normal positions and velocities per axis. Particle i draws from its own engine
// seeded by (seed, i), so the result does not depend on how the work is split.
struct GaussianEnsembleSpec {
    std::size_t count = 1000;
    std::vector<double> center{0.0};
    std::vector<double> position_std{1.0};
    std::vector<double> velocity_mean{0.0};
    std::vector<double> velocity_std{0.0};
    std::uint64_t seed = 1;
};

EnsembleState sample_ensemble(const GaussianEnsembleSpec& spec, double t0 = 0.0);

struct PinballStepping {
    double dt_fast = 0.0;
    double duration = 0.0;  // rounded down to whole steps
    std::size_t record_every = 1;
    std::size_t workers = 1;
};

// Velocity Verlet for every particle. dt_fast must resolve w (<= T/16) and the kernel:
// dt_fast * |V| <= epsilon/4 at every step of every particle, else CflViolation.
// Returns the states at t0 and every record_every steps.
std::vector<EnsembleState> evolve_ensemble(const EnsembleState& initial, const DeltaSourceField& sources,
                                           const ScalarField& U, const PinballStepping& stepping,
                                           const PhysicalConstants& c);

// Gaussian kernel density estimates of the velocity moments on a grid.
struct EnsembleMoments {
    ScalarField rho;      // integrates to the alive fraction
    VectorField flux;     // rho v
    VectorField v;        // flux/rho where rho >= 1e-8 max rho, else 0
    std::vector<ScalarField> Pi;    // D*D, row-major
    std::vector<ScalarField> wcov;  // <w_i w_j> = Pi_ij/rho - v_i v_j, masked like v
    double tau_mean = 0.0;          // rho-weighted mean of the diagonal of wcov
    double offdiag_ratio = 0.0;     // rho-weighted mean |offdiagonal| / tau_mean
    double diag_spread = 0.0;       // max over axes of |<w_a w_a> - tau_mean| / tau_mean
};

EnsembleMoments ensemble_density(const EnsembleState& e, const Grid& grid, double bandwidth);

struct MomentReport {
    std::vector<double> t;  // interior samples
    std::vector<double> continuity_norm;
    std::vector<double> continuity_noise;
    std::vector<double> momentum_norm;
    std::vector<double> momentum_noise;
    // Least-squares c in m[d_t(rho v) + div(rho v v)] + rho grad U = -c grad rho at each sample.
    std::vector<double> fitted_pressure;
    std::vector<double> configured_pressure;
    double pressure_mismatch = 0.0;  // RMS(fitted - configured)/RMS(configured)
    bool continuity_pass = false;
    bool momentum_pass = false;
};

// Residuals of drho/dt + div(rho v) = 0 and of
//   m[d_t(rho v) + div(rho v v)] + rho grad U + (a n + tau) grad rho = 0
// with centered time differences. Noise is the bootstrap spread (resampling particles) of the
// terms entering each residual; a residual passes when it stays within 3 noise units.
MomentReport moment_check(const std::vector<EnsembleState>& series, const ScalarField& U,
                          const DeltaSourceField& sources, const Grid& grid, double bandwidth,
                          const PhysicalConstants& c, std::size_t bootstrap = 20, std::uint64_t seed = 7);

// int P(r) grad G_eps(r - r_k) dr by quadrature on P's grid.
Point kernel_gradient_integral(const ScalarField& P, const Point& r_k, double epsilon);

// M rows: position components, velocity components, alive flag.
void write_ensemble_csv(std::ostream& out, const EnsembleState& e);

}  // namespace qh
