#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qh/ops.hpp"
#include "qh/parallel.hpp"
#include "qh/quantum_potential.hpp"
#include "qh/schrodinger.hpp"
#include "qh/trajectories.hpp"

using namespace qh;

namespace {

const double pi = std::numbers::pi;

// Free packet with rho variance 1 at t = 0 (hbar = m = 1): sigma(t)^2 = 1 + t^2/4.
double free_sigma(double t) { return std::sqrt(1.0 + 0.25 * t * t); }

FieldSeries free_action(const Grid& g, double t_end, double h) {
    FieldSeries S;
    for (double t = 0.0; t <= t_end + 1e-12; t += h) {
        const double rate = 0.25 * t / (1.0 + 0.25 * t * t);  // sigma'/sigma
        S.push(t, ScalarField::sample(g, [&](const Point& p) { return 0.5 * rate * p[0] * p[0]; }));
    }
    return S;
}

// Inverse standard normal CDF by Newton iteration on erfc.
double normal_quantile(double u) {
    double x = 0.0;
    for (int k = 0; k < 60; ++k) {
        const double F = 0.5 * std::erfc(-x / std::numbers::sqrt2);
        const double f = std::exp(-0.5 * x * x) / std::sqrt(2 * pi);
        const double step = (F - u) / f;
        x -= step;
        if (std::abs(step) < 1e-14) break;
    }
    return x;
}

// Zero crossings (upward) of x(t) - centre by linear interpolation.
std::vector<double> upward_crossings(const TrajectorySample& s, double centre) {
    std::vector<double> out;
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
        const double a = s.positions[j][0] - centre, b = s.positions[j + 1][0] - centre;
        if (a < 0.0 && b >= 0.0) out.push_back(s.times[j] + (s.times[j + 1] - s.times[j]) * (-a) / (b - a));
    }
    return out;
}

FieldSeries single(const ScalarField& f) {
    FieldSeries s;
    s.push(0.0, f);
    return s;
}

}  // namespace

TEST_CASE("property: multilinear interpolation is exact on bilinear functions") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = u(rng), b = u(rng), cc = u(rng), d = u(rng);
        const Grid g({Axis::centered(9, 4.0, Boundary::Dirichlet), Axis::centered(13, 6.0, Boundary::Dirichlet)});
        const ScalarField f = ScalarField::sample(g, [&](const Point& p) { return a + b * p[0] + cc * p[1] + d * p[0] * p[1]; });
        for (int k = 0; k < 20; ++k) {
            const Point p{2.0 * u(rng), 3.0 * u(rng), 0.0};
            CHECK(interpolate(f, p) == doctest::Approx(a + b * p[0] + cc * p[1] + d * p[0] * p[1]).epsilon(1e-12));
        }
    }
    const Grid ring = Grid::line(8, 8.0, Boundary::Periodic);
    const ScalarField idx = ScalarField::sample(ring, [](const Point& p) { return p[0]; });
    // Between the last node (x = 3) and the wrapped first node (x = -4 == 4).
    CHECK(interpolate(idx, {3.5, 0, 0}) == doctest::Approx(-0.5));
    CHECK(wrap(ring, {5.0, 0, 0})[0] == doctest::Approx(-3.0));
    CHECK(inside(ring, {100.0, 0, 0}));
    CHECK_FALSE(inside(Grid::line(9, 2.0, Boundary::Dirichlet), {1.5, 0, 0}));
}

TEST_CASE("kinematic: plane wave gives a straight line") {
    const Grid g = Grid::line(101, 20.0, Boundary::Dirichlet);
    PhysicalConstants c;
    c.masses = {2.0};
    const double k = 1.3;
    const FieldSeries S = single(ScalarField::sample(g, [&](const Point& p) { return c.hbar * k * p[0]; }));
    const TrajectorySample s = kinematic_trajectory(S, {-3.0, 0, 0}, 0.01, 5.0, c);
    REQUIRE(s.size() == 501);
    CHECK_FALSE(s.escaped);
    CHECK(s.kind == TrajectoryKind::Kinematic);
    for (std::size_t j = 0; j < s.size(); ++j) {
        CHECK(s.positions[j][0] == doctest::Approx(-3.0 + k / 2.0 * s.times[j]).epsilon(1e-12));
        CHECK(s.velocities[j][0] == doctest::Approx(k / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("kinematic: free packet centre is fixed and other paths scale with the width") {
    const Grid g = Grid::line(161, 16.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const FieldSeries S = free_action(g, 4.0, 0.02);
    const TrajectorySample centre = kinematic_trajectory(S, {0.0, 0, 0}, 0.01, 4.0, c);
    for (const auto& p : centre.positions) CHECK(std::abs(p[0]) <= 1e-12);
    const TrajectorySample side = kinematic_trajectory(S, {1.5, 0, 0}, 0.01, 4.0, c);
    CHECK(side.positions.back()[0] == doctest::Approx(1.5 * free_sigma(4.0)).epsilon(1e-4));
}

TEST_CASE("property: kinematic ensembles transport the density") {
    const Grid g = Grid::line(241, 24.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const double t_end = 3.0;
    const FieldSeries S = free_action(g, t_end, 0.05);
    const std::size_t M = 10000;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::vector<double> r0(M);
    for (std::size_t i = 0; i < M; ++i) r0[i] = normal_quantile((static_cast<double>(i) + jitter(rng)) / M);
    std::vector<double> r1(M);
    const VelocitySeries v = velocity_from_action(S, c);
    parallel_for(M, 4, [&](std::size_t i) { r1[i] = kinematic_trajectory(v, {r0[i], 0, 0}, 0.02, t_end).positions.back()[0]; });

    const double sig = free_sigma(t_end);
    const int bins = 40;
    const double lo = -4.0 * sig, w = 8.0 * sig / bins;
    std::vector<double> hist(bins, 0.0);
    for (double x : r1) {
        const int b = static_cast<int>(std::floor((x - lo) / w));
        if (b >= 0 && b < bins) hist[b] += 1.0 / (M * w);
    }
    double l1 = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double xa = lo + b * w, xb = xa + w;
        const double exact = 0.5 * (std::erf(xb / (sig * std::numbers::sqrt2)) - std::erf(xa / (sig * std::numbers::sqrt2))) / w;
        l1 += std::abs(hist[b] - exact) * w;
    }
    INFO("L1 " << l1);
    CHECK(l1 <= 0.05);
}

TEST_CASE("kinematic: coherent state from Schrodinger data follows the classical orbit") {
    const Grid g = Grid::line(256, 32.0, Boundary::Periodic);
    const PhysicalConstants c;
    const ScalarField U = PotentialSpec::harmonic(1.0).evaluate(g, c);
    // Displaced ground state of the unit oscillator: rho variance 1/2, s0 = 1/sqrt2.
    Wavefunction psi = gaussian_packet(g, {2.0}, {1.0 / std::numbers::sqrt2}, {0.0});
    std::vector<double> t;
    std::vector<Wavefunction> states;
    const double h = 0.05;
    for (int j = 0; j <= 160; ++j) {
        t.push_back(j * h);
        states.push_back(psi);
        psi = evolve_schrodinger(psi, U, c, 0.001, 50);
    }
    const VelocitySeries v = velocity_from_wavefunctions(t, states, c, 1e-12);
    const TrajectorySample s = kinematic_trajectory(v, {2.0, 0, 0}, 0.01, 8.0, NodeGuard{});
    double lo = 1e9, hi = -1e9;
    for (const auto& p : s.positions) {
        lo = std::min(lo, p[0]);
        hi = std::max(hi, p[0]);
    }
    CHECK(0.5 * (hi - lo) == doctest::Approx(2.0).epsilon(0.01));
    const std::vector<double> up = upward_crossings(s, 0.0);
    REQUIRE(!up.empty());
    // First upward crossing of the centre is at 3/4 of a period.
    CHECK(up.front() / 0.75 == doctest::Approx(2 * pi).epsilon(0.01));
}

TEST_CASE("newton_effective: harmonic period and energy drift") {
    const Grid g = Grid::line(1001, 10.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const double w0 = 1.0;
    const ScalarField U = PotentialSpec::harmonic(w0).evaluate(g, c);
    const TrajectorySample s = newton_effective(single(U), {1.0, 0, 0}, {0.0, 0, 0}, 0.01, 30.0, c);
    CHECK(s.kind == TrajectoryKind::NewtonEffective);
    const std::vector<double> up = upward_crossings(s, 0.0);
    REQUIRE(up.size() >= 3);
    CHECK((up.back() - up.front()) / static_cast<double>(up.size() - 1) == doctest::Approx(2 * pi / w0).epsilon(1e-3));

    const std::vector<double> e = trajectory_energy(s, U, c);
    double drift = 0.0;
    for (std::size_t j = 0; j <= 1000; ++j) drift = std::max(drift, std::abs(e[j] - e[0]));
    CHECK(drift / e[0] <= 1e-4);
}

TEST_CASE("newton_effective: constant and ground-state potentials exert no force") {
    const Grid g = Grid::line(601, 6.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const TrajectorySample flat = newton_effective(single(ScalarField(g, 0.4)), {-2.0, 0, 0}, {0.3, 0, 0}, 0.01, 10.0, c);
    CHECK(flat.positions.back()[0] == doctest::Approx(1.0).epsilon(1e-12));

    const ScalarField U = PotentialSpec::harmonic(1.0).evaluate(g, c);
    const ScalarField rho = density_of(harmonic_ground_state(g, 1.0, c));
    const ScalarField U_ef = U + quantum_potential(rho, c, 1e-300);
    for (double x0 : {-1.0, 0.0, 0.7}) {
        const TrajectorySample s = newton_effective(single(U_ef), {x0, 0, 0}, {0.0, 0, 0}, 0.01, 10.0, c);
        CHECK(std::abs(s.positions.back()[0] - x0) <= 1e-6);
    }
}

TEST_CASE("newton_true: uniform density reduces to motion in U") {
    const Grid g = Grid::line(801, 8.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const ScalarField U = PotentialSpec::harmonic(1.0).evaluate(g, c);
    const double omega = 100.0, dt = 2 * pi / (omega * 32);
    const TruePotential tp{U, single(ScalarField(g, std::log(0.125))), omega};
    const TrajectorySample a = newton_true(tp, {1.0, 0, 0}, {0.0, 0, 0}, dt, 5.0, c);
    const TrajectorySample b = newton_effective(single(U), {1.0, 0, 0}, {0.0, 0, 0}, dt, 5.0, c);
    REQUIRE(a.size() == b.size());
    CHECK(a.kind == TrajectoryKind::NewtonTrue);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a.positions[j][0] - b.positions[j][0]) <= 1e-10);
}

namespace {

// Cycle-averaged newton_true in a frozen unit Gaussian against newton_effective in
// U' = (hbar^2/8m)|grad ln rho|^2 = x^2/8, over one slow period 4 pi. Returns the largest
// position gap relative to the amplitude.
double ponderomotive_gap(double omega, std::size_t K) {
    const Grid g = Grid::line(401, 10.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const ScalarField l = ScalarField::sample(g, [](const Point& p) { return -0.5 * p[0] * p[0] - 0.5 * std::log(2 * pi); });
    const ScalarField Up = ScalarField::sample(g, [](const Point& p) { return p[0] * p[0] / 8.0; });
    const double dt = 2 * pi / (omega * K), T_slow = 4 * pi;
    const TruePotential tp{ScalarField(g, 0.0), single(l), omega};
    const TrajectorySample fast = newton_true(tp, {1.0, 0, 0}, {0.0, 0, 0}, dt, T_slow + 2 * pi / omega, c);
    const TrajectorySample avg = cycle_average_trajectory(fast, omega);
    const TrajectorySample eff = newton_effective(single(Up), {1.0, 0, 0}, {0.0, 0, 0}, dt, T_slow + 2 * pi / omega, c);
    double gap = 0.0;
    for (std::size_t j = 0; j < avg.size(); ++j) {
        REQUIRE(avg.times[j] == doctest::Approx(eff.times[j + K / 2]));
        gap = std::max(gap, std::abs(avg.positions[j][0] - eff.positions[j + K / 2][0]));
    }
    return gap;
}

}  // namespace

TEST_CASE("newton_true: cycle average follows the ponderomotive potential U'") {
    const double g200 = ponderomotive_gap(200.0, 32);
    INFO("gap at 200: " << g200);
    CHECK(g200 <= 0.05);
}

TEST_CASE("property: the ponderomotive gap halves per omega doubling") {
    // Verlet shifts the averaged potential by O((w dt)^2); K = 256 keeps that below the 1/w gap.
    const double a = ponderomotive_gap(100.0, 256), b = ponderomotive_gap(200.0, 256), d = ponderomotive_gap(400.0, 256);
    INFO("gaps " << a << " " << b << " " << d);
    for (double r : {a / b, b / d}) {
        CHECK(r >= 1.5);
        CHECK(r <= 3.0);
    }
}

namespace {

// Largest |x - x_avg| over the first few periods for a start near the density maximum.
double wiggle(double omega, double hbar, double x0) {
    const Grid g = Grid::line(401, 10.0, Boundary::Dirichlet);
    PhysicalConstants c;
    c.hbar = hbar;
    const ScalarField l = ScalarField::sample(g, [](const Point& p) { return -0.5 * p[0] * p[0]; });
    const double dt = 2 * pi / (omega * 64);
    const TrajectorySample s = newton_true(TruePotential{ScalarField(g, 0.0), single(l), omega}, {x0, 0, 0},
                                           {0.0, 0, 0}, dt, 4 * 2 * pi / omega, c);
    const TrajectorySample avg = cycle_average_trajectory(s, omega);
    double amp = 0.0;
    for (std::size_t j = 0; j < avg.size(); ++j) amp = std::max(amp, std::abs(s.positions[j + 32][0] - avg.positions[j][0]));
    return amp;
}

}  // namespace

TEST_CASE("newton_true: at the density maximum the particle stays put; wiggle amplitude scaling") {
    CHECK(wiggle(200.0, 1.0, 0.0) <= 1e-15);
    // The oscillating force is (hbar w/sqrt2) grad ln rho, growing with w: the wiggle falls as 1/w.
    const double r1 = wiggle(100.0, 1.0, 0.1) / wiggle(200.0, 1.0, 0.1);
    CHECK(r1 == doctest::Approx(2.0).epsilon(0.05));
    // A force amplitude held fixed (hbar scaled as 1/w) gives the ponderomotive 1/w^2 law.
    const double r2 = wiggle(100.0, 1.0, 0.1) / wiggle(200.0, 0.5, 0.1);
    CHECK(r2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("errors: escape, under-resolution, nodes, window") {
    const Grid g = Grid::line(41, 4.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const FieldSeries S = single(ScalarField::sample(g, [](const Point& p) { return 2.0 * p[0]; }));
    const TrajectorySample out = kinematic_trajectory(S, {0.0, 0, 0}, 0.01, 5.0, c);
    CHECK(out.escaped);
    CHECK(out.positions.back()[0] <= 2.0);
    CHECK_THROWS_AS(kinematic_trajectory(S, {3.0, 0, 0}, 0.01, 1.0, c), EscapeError);

    const TruePotential tp{ScalarField(g, 0.0), single(ScalarField(g, 0.0)), 100.0};
    CHECK_THROWS(newton_true(tp, {0.0, 0, 0}, {0.0, 0, 0}, 2 * pi / (100.0 * 8), 1.0, c));

    // First excited oscillator state: node at x = 0.
    FieldSeries rho;
    rho.push(0.0, ScalarField::sample(g, [](const Point& p) { return p[0] * p[0] * std::exp(-p[0] * p[0]); }));
    const FieldSeries still = single(ScalarField(g, 0.0));
    CHECK_THROWS_AS(kinematic_trajectory(still, {0.0, 0, 0}, 0.01, 1.0, c, NodeGuard{&rho, 1e-8}), NodeError);
    CHECK_NOTHROW(kinematic_trajectory(still, {1.0, 0, 0}, 0.01, 1.0, c, NodeGuard{&rho, 1e-8}));

    FieldSeries two = still;
    two.push(0.5, ScalarField(g, 0.0));
    CHECK_THROWS(kinematic_trajectory(two, {0.0, 0, 0}, 0.01, 1.0, c));
}

TEST_CASE("trajectory CSV") {
    TrajectorySample s;
    s.kind = TrajectoryKind::NewtonTrue;
    s.dims = 2;
    s.times = {0.0, 0.5};
    s.positions = {Point{1, 2, 0}, Point{3, 4, 0}};
    s.velocities = {Point{5, 6, 0}, Point{7, 8, 0}};
    std::ostringstream os;
    write_trajectory_csv(os, s);
    CHECK(os.str() == "t,x0,x1,v0,v1,kind\n0,1,2,5,6,newton_true\n0.5,3,4,7,8,newton_true\n");
}
