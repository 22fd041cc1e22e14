#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "qh/action_functional.hpp"
#include "qh/ops.hpp"
#include "qh/schrodinger.hpp"

using namespace qh;

namespace {

const double pi = std::numbers::pi;

using Profile = std::function<double(const Point&, double)>;

FieldSeries sampled(const Grid& g, const Profile& f, double t0, double h, std::size_t n) {
    FieldSeries s;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = t0 + h * static_cast<double>(j);
        s.push(t, ScalarField::sample(g, [&](const Point& p) { return f(p, t); }));
    }
    return s;
}

// Classical free fall in U = g x: p(t) = p0 - g t, S = p x - int p^2/2m dt.
struct FreeFall {
    double p0, g, m;
    double S(const Point& x, double t) const {
        const double p = p0 - g * t;
        return p * x[0] - (p0 * p0 * t - p0 * g * t * t + g * g * t * t * t / 3.0) / (2.0 * m);
    }
};

// Free Schrodinger packet sampled at t_mid - h, t_mid, t_mid + h on the window [-7, 7]
// of a fine periodic grid, with S unwrapped in time.
std::pair<FieldSeries, FieldSeries> schrodinger_history(double h) {
    // dx = 1/32 keeps the fourth-order spatial error of the flux below the h^2 term.
    const Grid g = Grid::line(1024, 32.0, Boundary::Periodic);
    const PhysicalConstants c;
    const Grid w = window(g, {288}, {449});
    Wavefunction psi = gaussian_packet(g, {0.0}, {1.0}, {0.5});
    const double t0 = 0.5 - h;
    psi = evolve_schrodinger(psi, PotentialSpec{}, c, t0 / 8.0, 8);
    FieldSeries rho, S;
    for (int j = 0; j < 3; ++j) {
        if (j > 0) psi = evolve_schrodinger(psi, PotentialSpec{}, c, h / 4.0, 4);
        const MadelungFields mf = madelung_decompose(psi, default_rho_floor(density_of(psi)), c.hbar);
        rho.push(t0 + j * h, restrict_to(mf.rho, w));
        S.push(t0 + j * h, restrict_to(mf.S, w));
    }
    std::size_t anchor = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (rho.f[1][i] > rho.f[1][anchor]) anchor = i;
    unwrap_action_in_time(S, c.hbar, anchor);
    return {rho, S};
}

// exp of a random low-mode field and a random low-mode action, both slowly time dependent.
std::pair<FieldSeries, FieldSeries> random_history(const Grid& g, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::array<double, 12> a{};
    for (double& v : a) v = u(rng);
    const double L = g.axis(0).length;
    auto phase = [&](const Point& p, int k) { return 2.0 * pi * k * (p[0] - g.axis(0).origin) / L; };
    const Profile rho = [=](const Point& p, double t) {
        return std::exp(0.5 * a[0] * std::cos(phase(p, 1) + a[1] * t) + 0.3 * a[2] * std::sin(phase(p, 2) + a[3]) +
                        0.2 * a[4] * t);
    };
    const Profile S = [=](const Point& p, double t) {
        return a[5] * std::sin(phase(p, 1) + a[6]) * (1.0 + a[7] * t) + 0.4 * a[8] * std::cos(phase(p, 3) + a[9] * t) +
               a[10] * t + a[11] * t * t;
    };
    return {sampled(g, rho, 0.0, 0.01, 5), sampled(g, S, 0.0, 0.01, 5)};
}

}  // namespace

TEST_CASE("plane wave: classical and quantum residuals vanish") {
    const Grid g = Grid::line(65, 4.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const double p = 1.3;
    const FieldSeries rho = sampled(g, [](const Point&, double) { return 0.25; }, 0.0, 0.01, 5);
    const FieldSeries S = sampled(g, [&](const Point& x, double t) { return p * x[0] - p * p * t / 2.0; }, 0.0, 0.01, 5);
    const ScalarField U(g, 0.0);
    const ActionReport cl = classical_action_residual(rho, S, U, c);
    const ActionReport qu = quantum_action_residual(rho, S, U, c, 1e-12);
    CHECK(cl.hj_residual_norm <= 1e-8);
    CHECK(cl.continuity_residual_norm <= 1e-8);
    CHECK(qu.hj_residual_norm <= 1e-8);
    CHECK(qu.continuity_residual_norm <= 1e-8);
    CHECK(cl.t.size() == 3);
    // rho (S_t + p^2/2m) vanishes pointwise.
    CHECK(std::abs(cl.action_value) <= 1e-10);
}

TEST_CASE("free fall in a linear potential") {
    const Grid g = Grid::line(65, 4.0, Boundary::Dirichlet);
    const PhysicalConstants c{1.0, {2.0}};
    const FreeFall ff{0.7, 1.5, 2.0};
    const FieldSeries rho = sampled(g, [](const Point&, double) { return 0.25; }, 0.0, 1e-3, 7);
    const FieldSeries S = sampled(g, [&](const Point& x, double t) { return ff.S(x, t); }, 0.0, 1e-3, 7);
    const ScalarField U = ScalarField::sample(g, [&](const Point& x) { return ff.g * x[0]; });
    const ActionReport r = classical_action_residual(rho, S, U, c);
    INFO("hj " << r.hj_residual_norm << " cont " << r.continuity_residual_norm);
    CHECK(r.hj_residual_norm <= 1e-6);
    CHECK(r.continuity_residual_norm <= 1e-6);
    // The wrong field strength leaves (g' - g) x.
    const ScalarField U2 = ScalarField::sample(g, [&](const Point& x) { return 1.1 * ff.g * x[0]; });
    CHECK(classical_action_residual(rho, S, U2, c).hj_residual_norm >= 0.1);
}

TEST_CASE("harmonic ground state: stationary quantum solution, not a classical one") {
    const PhysicalConstants c;
    const double w0 = 1.0, E = 0.5 * c.hbar * w0;
    const Profile rho_f = [&](const Point& x, double) { return std::exp(-w0 * x[0] * x[0]) / std::sqrt(pi / w0); };
    const Profile S_f = [&](const Point&, double t) { return -E * t; };
    const Grid wide = Grid::line(257, 16.0, Boundary::Dirichlet);
    const ScalarField U = ScalarField::sample(wide, [&](const Point& x) { return 0.5 * w0 * w0 * x[0] * x[0]; });
    const FieldSeries rho = sampled(wide, rho_f, 0.0, 0.1, 11);
    const FieldSeries S = sampled(wide, S_f, 0.0, 0.1, 11);
    const ActionReport q = quantum_action_residual(rho, S, U, c, 1e-300);
    INFO("hj " << q.hj_residual_norm << " boundary " << q.boundary_term);
    CHECK(q.hj_residual_norm <= 1e-5);
    CHECK(q.continuity_residual_norm <= 1e-12);
    CHECK(std::abs(q.boundary_term) <= 1e-8);
    // <p^2/2m + U> = E, so the Lagrangian density integrates to zero.
    CHECK(std::abs(q.action_value) <= 1e-8);

    const ActionReport cl = classical_action_residual(rho, S, U, c);
    CHECK(cl.hj_residual_norm >= 0.1);
    CHECK(cl.boundary_term == 0.0);

    // On [-2, 2] the density gradient crosses the faces:
    // (hbar^2/4m) (rho'(2) - rho'(-2)) over the 0.8 interior span = -(8 e^-4/sqrt(pi))/4 * 0.8.
    const Grid narrow = Grid::line(129, 4.0, Boundary::Dirichlet);
    const ScalarField Un = ScalarField::sample(narrow, [&](const Point& x) { return 0.5 * x[0] * x[0]; });
    const ActionReport qn = quantum_action_residual(sampled(narrow, rho_f, 0.0, 0.1, 11),
                                                    sampled(narrow, S_f, 0.0, 0.1, 11), Un, c, 1e-300);
    const double expected = -0.25 * 8.0 * std::exp(-4.0) / std::sqrt(pi) * 0.8;
    CHECK(qn.boundary_term == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("periodic axes contribute no surface term") {
    const Grid g = Grid::line(64, 2.0 * pi, Boundary::Periodic);
    const ScalarField f = ScalarField::sample(g, [](const Point& p) { return std::sin(p[0]) + 2.0; });
    CHECK(surface_flux(f, {1.0}) == 0.0);
    const Grid d = Grid::line(65, 2.0, Boundary::Dirichlet);
    const ScalarField x3 = ScalarField::sample(d, [](const Point& p) { return p[0] * p[0] * p[0]; });
    CHECK(surface_flux(x3, {0.5}) == doctest::Approx(0.5 * (3.0 - 3.0)).epsilon(1e-12));
    const ScalarField x2 = ScalarField::sample(d, [](const Point& p) { return p[0] * p[0]; });
    CHECK(surface_flux(x2, {1.0}) == doctest::Approx(4.0).epsilon(1e-12));
    // 2D: f = x^2 + y^2 on [-1,1]^2, each axis has flux 2 * 2 over a face of length 2.
    const Grid sq = Grid::square(33, 2.0, Boundary::Dirichlet);
    const ScalarField r2 = ScalarField::sample(sq, [](const Point& p) { return p[0] * p[0] + p[1] * p[1]; });
    CHECK(surface_flux(r2, {1.0, 1.0}) == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("uniform density at rest gives zero residuals") {
    const Grid g = Grid::line(64, 4.0, Boundary::Periodic);
    const PhysicalConstants c;
    const FieldSeries rho = sampled(g, [](const Point&, double) { return 1.0; }, 0.0, 0.1, 4);
    const FieldSeries S = sampled(g, [](const Point&, double) { return 0.0; }, 0.0, 0.1, 4);
    const ScalarField U(g, 0.0);
    const ActionReport q = quantum_action_residual(rho, S, U, c, 1e-12);
    CHECK(q.hj_residual_norm == 0.0);
    CHECK(q.continuity_residual_norm == 0.0);
    CHECK(q.action_value == 0.0);
    const ActionReport cl = classical_action_residual(rho, S, U, c);
    CHECK(cl.hj_residual_norm == 0.0);
    CHECK(cl.continuity_residual_norm == 0.0);
}

TEST_CASE("random smooth histories are not stationary") {
    std::mt19937 rng(11);
    const Grid g = Grid::line(64, 2.0 * pi, Boundary::Periodic);
    const PhysicalConstants c;
    const ScalarField U = ScalarField::sample(g, [](const Point& p) { return std::cos(p[0]); });
    for (int trial = 0; trial < 20; ++trial) {
        const auto [rho, S] = random_history(g, rng);
        const ActionReport q = quantum_action_residual(rho, S, U, c, 1e-12);
        const ActionReport cl = classical_action_residual(rho, S, U, c);
        CHECK(std::isfinite(q.action_value));
        CHECK(q.hj_residual_norm > 1e-3);
        CHECK(cl.hj_residual_norm > 1e-3);
        CHECK(q.continuity_residual_norm > 1e-3);
        CHECK(q.boundary_term == 0.0);
    }
}

TEST_CASE("quantum operator reduces to the classical one without hbar terms") {
    std::mt19937 rng(5);
    const Grid g = Grid::line(64, 2.0 * pi, Boundary::Periodic);
    const ScalarField U = ScalarField::sample(g, [](const Point& p) { return 0.5 * std::sin(p[0]); });
    for (int trial = 0; trial < 10; ++trial) {
        const auto [rho, S] = random_history(g, rng);
        PhysicalConstants off;
        off.hbar = 0.0;
        const ActionReport q0 = quantum_action_residual(rho, S, U, off, 1e-12);
        const ActionReport cl = classical_action_residual(rho, S, U, off);
        CHECK(q0.hj_residual_norm == cl.hj_residual_norm);
        CHECK(q0.continuity_residual_norm == cl.continuity_residual_norm);
        CHECK(q0.action_value == cl.action_value);
        // The hbar terms shrink as hbar^2.
        double prev = 0.0;
        for (double hb : {0.4, 0.2, 0.1}) {
            PhysicalConstants c;
            c.hbar = hb;
            const ActionReport q = quantum_action_residual(rho, S, U, c, 1e-12);
            double diff = 0.0;
            for (std::size_t j = 0; j < q.hj.size(); ++j) diff = std::max(diff, max_abs(q.hj[j], cl.hj[j]));
            if (prev > 0.0) CHECK(prev / diff == doctest::Approx(4.0).epsilon(1e-9));
            prev = diff;
        }
    }
}

TEST_CASE("free Schrodinger packet: residuals fall as the sample spacing squared") {
    const PhysicalConstants c;
    double prev_hj = 0.0, prev_cont = 0.0;
    for (double h : {0.04, 0.02, 0.01}) {
        const auto [rho, S] = schrodinger_history(h);
        const ScalarField U(rho.grid(), 0.0);
        const ActionReport q = quantum_action_residual(rho, S, U, c, 1e-30);
        INFO("h " << h << " hj " << q.hj_residual_norm << " cont " << q.continuity_residual_norm);
        CHECK(q.hj_residual_norm <= 1e-3);
        if (prev_hj > 0.0) {
            CHECK(prev_hj / q.hj_residual_norm == doctest::Approx(4.0).epsilon(0.1));
            CHECK(prev_cont / q.continuity_residual_norm == doctest::Approx(4.0).epsilon(0.1));
        }
        prev_hj = q.hj_residual_norm;
        prev_cont = q.continuity_residual_norm;
        // The classical operator misses the quantum potential of a spreading packet.
        CHECK(classical_action_residual(rho, S, U, c).hj_residual_norm >= 0.05);
    }
}

TEST_CASE("input validation") {
    const Grid g = Grid::line(16, 4.0, Boundary::Periodic);
    const PhysicalConstants c;
    const ScalarField U(g, 0.0);
    const FieldSeries two = sampled(g, [](const Point&, double) { return 1.0; }, 0.0, 0.1, 2);
    CHECK_THROWS_AS(classical_action_residual(two, two, U, c), InsufficientSamples);
    const FieldSeries rho = sampled(g, [](const Point& p, double) { return p[0] > 1.0 ? 0.0 : 1.0; }, 0.0, 0.1, 3);
    const FieldSeries S = sampled(g, [](const Point&, double) { return 0.0; }, 0.0, 0.1, 3);
    CHECK_THROWS_AS(quantum_action_residual(rho, S, U, c, 1e-12), FloorViolation);
    CHECK_NOTHROW(classical_action_residual(rho, S, U, c));
    const ScalarField Uo(Grid::line(16, 5.0, Boundary::Periodic), 0.0);
    CHECK_THROWS_AS(classical_action_residual(rho, S, Uo, c), GridMismatch);
}
