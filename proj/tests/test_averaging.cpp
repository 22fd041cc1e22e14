#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qh/averaging.hpp"
#include "qh/ops.hpp"

using namespace qh;

namespace {

const double pi = std::numbers::pi;

FieldSeries synthetic(const Grid& g, double omega, std::size_t K, std::size_t periods,
                      const std::function<double(double, const Point&)>& f) {
    FieldSeries s;
    const double dt = 2 * pi / (omega * K);
    for (std::size_t j = 0; j <= K * periods; ++j) {
        const double t = j * dt;
        s.push(t, ScalarField::sample(g, [&](const Point& p) { return f(t, p); }));
    }
    return s;
}

ScalarField unit_gaussian(const Grid& g) {
    return ScalarField::sample(g, [](const Point& p) { return std::exp(-0.5 * p[0] * p[0]) / std::sqrt(2 * pi); });
}

struct FreeRun {
    RunResult run;
    FastSlowDecomposition split;
};

// Free unit packet up to t = 1 with substeps captured over the last three periods.
FreeRun free_packet(double omega) {
    const Grid g = Grid::line(17, 8.0, Boundary::Dirichlet);
    OscillationConfig o;
    o.omega = omega;
    RunOptions opts;
    opts.duration = 1.0;
    const std::size_t periods = static_cast<std::size_t>(std::floor(opts.duration / o.period() + 1e-9));
    opts.capture_first = periods - 3;
    opts.capture_count = 3;
    FreeRun out;
    out.run = run_from_wavefunction(gaussian_packet(g, {0.0}, {1.0}, {0.0}), 0.0,
                                    HydroModel::scalar(ScalarField(g, 0.0), PhysicalConstants{}), o, opts);
    out.split = decompose(density_series(out.run.captured), action_series(out.run.captured), omega);
    return out;
}

// Nodes [first, first + n) of a 1D series, on a dirichlet axis.
FieldSeries restrict(const FieldSeries& s, std::size_t first, std::size_t n) {
    const Axis& a = s.grid().axis(0);
    const Grid sub({Axis{n, (n - 1) * a.spacing(), a.coord(first), Boundary::Dirichlet}});
    FieldSeries out;
    for (std::size_t j = 0; j < s.size(); ++j) {
        ScalarField f(sub, 0.0);
        for (std::size_t i = 0; i < n; ++i) f[i] = s.f[j][first + i];
        out.push(s.t[j], f);
    }
    return out;
}

// The one-period slice of a series starting at sample `first`.
FieldSeries slice(const FieldSeries& s, std::size_t first, std::size_t count) {
    FieldSeries out;
    for (std::size_t j = first; j < first + count; ++j) out.push(s.t[j], s.f[j]);
    return out;
}

}  // namespace

TEST_CASE("cycle average of a cosine vanishes and of a constant is exact") {
    const Grid g = Grid::line(8, 1.0, Boundary::Periodic);
    const double omega = 37.0;
    const FieldSeries c = synthetic(g, omega, 32, 4, [&](double t, const Point&) { return std::cos(omega * t); });
    const FieldSeries avg = cycle_average(c, omega);
    CHECK(avg.size() == 3 * 32 + 1);
    for (const auto& f : avg.f) CHECK(max_abs(f) <= 1e-6);

    const FieldSeries k = synthetic(g, omega, 32, 2, [](double, const Point&) { return 0.75; });
    for (const auto& f : cycle_average(k, omega).f) CHECK(max_abs(f, ScalarField(g, 0.75)) == 0.0);

    const FieldSeries two = cycle_average(c, omega, 2);
    CHECK(two.t.front() == doctest::Approx(2 * pi / omega));
    CHECK_THROWS_AS(cycle_average(c, omega, 5), InsufficientSamples);
}

TEST_CASE("property: full-period means of sin(wt) g and cos(wt) g vanish") {
    const Grid g = Grid::line(33, 4.0, Boundary::Dirichlet);
    for (double omega : {10.0, 123.0, 1000.0}) {
        for (std::size_t K : {16, 24, 64}) {
            const auto gfun = [](const Point& p) { return std::exp(-p[0] * p[0]) * (2.0 + std::sin(3 * p[0])); };
            const FieldSeries s = synthetic(g, omega, K, 1, [&](double t, const Point& p) { return std::sin(omega * t + 0.3) * gfun(p); });
            const ScalarField gf = ScalarField::sample(g, gfun);
            CHECK(max_abs(cycle_average(s, omega).f[0]) <= 1e-6 * max_abs(gf));
        }
    }
}

TEST_CASE("extract_fast: identity and exact recovery") {
    const Grid g = Grid::line(65, 8.0, Boundary::Dirichlet);
    const double omega = 50.0;
    const PhysicalConstants c;
    const FieldSeries slow = synthetic(g, omega, 32, 2, [](double t, const Point& p) {
        return std::exp(-0.5 * p[0] * p[0] / (1 + 0.1 * t)) / std::sqrt(2 * pi * (1 + 0.1 * t));
    });
    const FieldSeries same = extract_fast(slow, slow);
    for (const auto& f : same.f) CHECK(max_abs(f) == 0.0);

    const FastSlowDecomposition an = analytic_fast_components(slow, omega, c);
    FieldSeries full;
    for (std::size_t j = 0; j < slow.size(); ++j) full.push(slow.t[j], slow.f[j] + an.fast_zeta.f[j]);
    const FieldSeries z = extract_fast(full, slow);
    for (std::size_t j = 0; j < z.size(); ++j) CHECK(max_abs(z.f[j], an.fast_zeta.f[j]) <= 1e-8);

    FieldSeries shifted;
    shifted.push(slow.t[1] * 0.5, slow.f[0]);
    CHECK_THROWS(extract_fast(slow, shifted));
}

TEST_CASE("identities hold on analytic fast parts of the unit gaussian") {
    const Grid g = Grid::line(161, 10.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    for (double omega : {20.0, 200.0}) {
        const FieldSeries slow = synthetic(g, omega, 32, 1, [&](double, const Point& p) {
            return std::exp(-0.5 * p[0] * p[0]) / std::sqrt(2 * pi);
        });
        const FastSlowDecomposition an = analytic_fast_components(slow, omega, c);
        const IdentityReport r = verify_identities(an.fast_sigma, an.fast_zeta, slow, omega, c, 1e-6);
        CHECK(r.zeta_grad_sigma <= 1e-6);
        CHECK(r.kinetic <= 1e-6);
        CHECK(r.pressure <= 1e-6);
        CHECK(r.kinetic_relative);
        CHECK(r.passed());
    }
}

TEST_CASE("identities on a uniform density: both sides vanish") {
    const Grid g = Grid::line(32, 3.0, Boundary::Periodic);
    const double omega = 40.0;
    const FieldSeries slow = synthetic(g, omega, 32, 1, [](double, const Point&) { return 1.0 / 3.0; });
    const FastSlowDecomposition an = analytic_fast_components(slow, omega, PhysicalConstants{});
    const IdentityReport r = verify_identities(an.fast_sigma, an.fast_zeta, slow, omega, PhysicalConstants{}, 1e-10);
    CHECK_FALSE(r.kinetic_relative);
    CHECK_FALSE(r.pressure_relative);
    CHECK(r.kinetic <= 1e-12);
    CHECK(r.pressure <= 1e-12);
}

TEST_CASE("many-body identities use per-particle masses") {
    const Grid g({Axis::centered(41, 8.0, Boundary::Dirichlet), Axis::centered(41, 8.0, Boundary::Dirichlet)});
    PhysicalConstants c;
    c.masses = {1.0, 3.0};
    const double omega = 100.0;
    const FieldSeries slow = synthetic(g, omega, 32, 1, [](double, const Point& p) {
        return std::exp(-0.5 * (p[0] * p[0] + 0.5 * p[1] * p[1]) + 0.2 * p[0] * p[1]);
    });
    const FastSlowDecomposition an = analytic_fast_components(slow, omega, c);
    const IdentityReport r = verify_identities(an.fast_sigma, an.fast_zeta, slow, omega, c, 1e-6);
    CHECK(r.passed());
}

TEST_CASE("simulated free packet: fast parts, identities and averaged density") {
    const PhysicalConstants c;
    double prev_err = 1.0;
    for (double omega : {100.0, 200.0, 400.0}) {
        const FreeRun fr = free_packet(omega);
        REQUIRE(fr.run.completed);
        const FastComponentError e = fast_component_error(fr.split, c);
        INFO("omega " << omega << " sigma " << e.sigma << " zeta " << e.zeta);
        CHECK(e.sigma <= 0.05);
        CHECK(e.zeta <= 0.05);
        CHECK(std::max(e.sigma, e.zeta) < prev_err);
        prev_err = std::max(e.sigma, e.zeta);
        // A fast part whose amplitude g drifts has a one-window mean of order g'/(g w); on this
        // packet that reaches 1e-3 of the RMS at w = 400.
        INFO("mean/rms " << fr.split.zeta_mean_to_rms << " " << fr.split.sigma_mean_to_rms);
        CHECK(fr.split.zeta_mean_to_rms <= 0.4 / omega);
        CHECK(fr.split.sigma_mean_to_rms <= 0.4 / omega);
        if (omega >= 400.0) {
            CHECK(fr.split.zeta_mean_to_rms <= 1e-3);
            CHECK(fr.split.sigma_mean_to_rms <= 1e-3);
        }

        const std::size_t K = 32;
        const IdentityReport r = verify_identities(slice(fr.split.fast_sigma, 0, K + 1), slice(fr.split.fast_zeta, 0, K + 1),
                                                   slice(fr.split.slow_rho, 0, K + 1), omega, c, 0.05);
        INFO("identities " << r.zeta_grad_sigma << " " << r.kinetic << " " << r.pressure);
        CHECK(r.passed());
    }
}

TEST_CASE("recovered residual: stationary ground state") {
    const Grid g = Grid::line(401, 10.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    const ScalarField rho = density_of(harmonic_ground_state(g, 1.0, c));
    const ScalarField U = PotentialSpec::harmonic(1.0).evaluate(g, c);
    FieldSeries rs, ss;
    for (int j = 0; j < 5; ++j) {
        rs.push(0.1 * j, rho);
        ss.push(0.1 * j, ScalarField(g, -0.5 * 0.1 * j));
    }
    const SlowResidual r = recovered_slow_residual(rs, ss, U, c);
    CHECK(r.t.size() == 3);
    for (const auto& f : r.continuity) CHECK(max_abs(f) <= 1e-14);
    CHECK(r.hj_norm <= 1e-5);

    FieldSeries two = rs;
    two.t.resize(2);
    two.f.resize(2);
    CHECK_THROWS_AS(recovered_slow_residual(two, two, U, c), InsufficientSamples);
}

TEST_CASE("recovered residual: Schrodinger data reach the time-difference floor") {
    const Grid g = Grid::line(256, 32.0, Boundary::Periodic);
    const PhysicalConstants c;
    const ScalarField U = PotentialSpec::harmonic(0.5).evaluate(g, c);
    const Wavefunction psi0 = gaussian_packet(g, {1.0}, {1.0}, {0.5});
    double prev = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
        FieldSeries rs, ss;
        Wavefunction psi = psi0;
        const std::size_t sub = static_cast<std::size_t>(std::lround(h / 0.001));
        for (int j = 0; j < 5; ++j) {
            const MadelungFields mf = madelung_decompose(psi, default_rho_floor(density_of(psi)));
            rs.push(j * h, mf.rho);
            ss.push(j * h, mf.S);
            psi = evolve_schrodinger(psi, U, c, 0.001, sub);
        }
        unwrap_action_in_time(ss, c.hbar, 128);
        // S carries net momentum and is not periodic; difference it on the interior [-6, 6].
        const FieldSeries rs_in = restrict(rs, 80, 97), ss_in = restrict(ss, 80, 97);
        const SlowResidual r = recovered_slow_residual(rs_in, ss_in, restrict(FieldSeries{{0.0}, {U}}, 80, 97).f[0], c);
        INFO("h " << h << " hj " << r.hj_norm << " cont " << r.continuity_norm);
        if (prev > 0.0) CHECK(prev / r.continuity_norm >= 3.5);
        CHECK(r.hj_norm <= 1e-3);
        prev = r.continuity_norm;
    }
}

TEST_CASE("recovered residual decreases with omega on averaged hydro data") {
    const Grid g = Grid::line(17, 8.0, Boundary::Dirichlet);
    const PhysicalConstants c;
    double prev = 1e9;
    for (double omega : {100.0, 200.0, 400.0}) {
        OscillationConfig o;
        o.omega = omega;
        RunOptions opts;
        opts.duration = 0.5;
        const RunResult r = run_from_wavefunction(gaussian_packet(g, {0.0}, {1.0}, {0.0}), 0.0,
                                                  HydroModel::scalar(ScalarField(g, 0.0), c), o, opts);
        FieldSeries rs, ss;
        for (const auto& p : r.periods) {
            rs.push(p.t_center, p.rho_avg);
            ss.push(p.t_center, p.S_avg);
        }
        const SlowResidual res = recovered_slow_residual(rs, ss, ScalarField(g, 0.0), c);
        const double n = res.hj_norm + res.continuity_norm;
        INFO("omega " << omega << " residual " << n);
        CHECK(n < prev);
        prev = n;
    }
}

TEST_CASE("scale estimates") {
    const Grid g = Grid::line(801, 16.0, Boundary::Dirichlet);
    PhysicalConstants c;
    c.masses = {2.0};
    const double k = 1.5, omega = 100.0;
    const ScalarField rho = unit_gaussian(g);
    const ScalarField S = ScalarField::sample(g, [&](const Point& p) { return k * p[0]; });
    const ScaleEstimates e = scale_estimates(rho, S, omega, c);
    CHECK(e.V == doctest::Approx(k / 2.0).epsilon(1e-10));
    CHECK(e.L == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(e.S_m == doctest::Approx(k).epsilon(1e-6));
    CHECK(e.T == doctest::Approx(2.0 / k).epsilon(1e-6));
    CHECK(e.zeta_rho_bound == doctest::Approx(1.0 / (2 * k) * k / (2.0 * omega)).epsilon(1e-6));

    const ScaleEstimates still = scale_estimates(rho, ScalarField(g, 0.3), omega, c);
    CHECK(still.V == 0.0);
    CHECK(std::isinf(still.T));
    CHECK(still.zeta_rho_bound == 0.0);
}

TEST_CASE("measured |zeta|/rho: within the predicted scale and falling as 1/omega") {
    const PhysicalConstants c;
    const FreeRun lo = free_packet(40.0), hi = free_packet(400.0);
    REQUIRE(lo.run.completed);
    REQUIRE(hi.run.completed);
    const double m_lo = measured_zeta_over_rho(lo.split.fast_zeta, lo.split.slow_rho);
    const double m_hi = measured_zeta_over_rho(hi.split.fast_zeta, hi.split.slow_rho);
    const ScaleEstimates e = scale_estimates(hi.run.final.rho_r(), hi.run.final.S, 400.0, c);
    INFO("measured " << m_hi << " bound " << e.zeta_rho_bound << " ratio " << m_lo / m_hi);
    CHECK(m_hi <= 3.0 * e.zeta_rho_bound);
    CHECK(m_lo / m_hi >= 5.0);
    CHECK(m_lo / m_hi <= 20.0);
}
