#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qh/averaging.hpp"
#include "qh/constants.hpp"
#include "qh/field.hpp"

namespace qh {

enum class TrajectoryKind { Kinematic, NewtonEffective, NewtonTrue };

const char* to_string(TrajectoryKind k);

struct TrajectorySample {
    TrajectoryKind kind = TrajectoryKind::Kinematic;
    std::size_t dims = 1;
    std::vector<double> times;
    std::vector<Point> positions;
    std::vector<Point> velocities;
    // Set when the particle left a dirichlet axis; the sample then ends at the last inside point.
    bool escaped = false;

    std::size_t size() const { return times.size(); }
};

// Inside [origin, origin + L] on dirichlet axes; periodic axes always contain the point.
bool inside(const Grid& g, const Point& p);
// Maps periodic coordinates into [origin, origin + L).
Point wrap(const Grid& g, Point p);
// Multilinear interpolation; the point must be inside.
double interpolate(const ScalarField& f, const Point& p);

// Per-sample vector fields on one grid, linear in time between samples.
// A single sample is treated as static.
struct VelocitySeries {
    std::vector<double> t;
    std::vector<VectorField> v;
};

// grad S/m per axis. S must be smooth across periodic seams; see velocity_from_wavefunctions.
VelocitySeries velocity_from_action(const FieldSeries& S, const PhysicalConstants& c);
// hbar Im(psi* grad psi)/(m rho), zero where rho < rho_floor. Needs no phase unwrapping.
VelocitySeries velocity_from_wavefunctions(const std::vector<double>& t, const std::vector<Wavefunction>& psi,
                                           const PhysicalConstants& c, double rho_floor);

// Density guard for kinematic runs: a trajectory point where the interpolated density
// drops below `floor` raises NodeError carrying the step index.
struct NodeGuard {
    const FieldSeries* rho = nullptr;
    double floor = 0.0;
};

// RK4 for r' = v(r, t) from the first series time over `duration` (rounded to whole steps).
TrajectorySample kinematic_trajectory(const VelocitySeries& v, const Point& r0, double dt, double duration,
                                      NodeGuard guard = {});
TrajectorySample kinematic_trajectory(const FieldSeries& S, const Point& r0, double dt, double duration,
                                      const PhysicalConstants& c, NodeGuard guard = {});

// Velocity Verlet in the time-interpolated potential series.
TrajectorySample newton_effective(const FieldSeries& U_ef, const Point& r0, const Point& v0, double dt,
                                  double duration, const PhysicalConstants& c);

// U_ref = U - (hbar w/sqrt2) cos(wt) ln rho_r. log_rho_r may hold one (frozen) sample.
struct TruePotential {
    ScalarField U;
    FieldSeries log_rho_r;
    double omega = 1.0;
};

// Velocity Verlet against U_ref with dt_fast <= 2 pi/(16 w).
TrajectorySample newton_true(const TruePotential& U_ref, const Point& r0, const Point& v0, double dt_fast,
                             double duration, const PhysicalConstants& c);

// Moving trapezoid over one fast period of positions and velocities; needs a uniform time
// base with a whole number of steps per period.
TrajectorySample cycle_average_trajectory(const TrajectorySample& s, double omega);

// Kinetic plus interpolated potential energy at each sample.
std::vector<double> trajectory_energy(const TrajectorySample& s, const ScalarField& U, const PhysicalConstants& c);

// t, x0.., v0.., kind
void write_trajectory_csv(std::ostream& out, const TrajectorySample& s);

}  // namespace qh
