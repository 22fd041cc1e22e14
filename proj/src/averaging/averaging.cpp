#include "qh/averaging.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qh/ops.hpp"
#include "qh/quantum_potential.hpp"

namespace qh {

namespace {

const double sqrt2 = std::numbers::sqrt2;

double spacing(const FieldSeries& s) {
    if (s.size() < 2) throw InsufficientSamples("series needs at least two samples");
    const double dt = s.t[1] - s.t[0];
    if (!(dt > 0.0)) throw Error("series times must increase");
    for (std::size_t j = 2; j < s.size(); ++j)
        if (std::abs(s.t[j] - s.t[j - 1] - dt) > 1e-6 * dt) throw Error("series times must be uniformly spaced");
    return dt;
}

// Samples per `periods` fast periods; throws unless it is a whole number.
std::size_t samples_per(double periods, double omega, double dt) {
    const double m = periods * 2.0 * std::numbers::pi / omega / dt;
    const double r = std::round(m);
    if (r < 1.0 || std::abs(m - r) > 1e-6 * r)
        throw Error("series spacing does not divide the fast period (" + std::to_string(m) + " samples)");
    return static_cast<std::size_t>(r);
}

double trapezoid_weight(std::size_t j, std::size_t M) {
    return (j == 0 || j == M) ? 0.5 / static_cast<double>(M) : 1.0 / static_cast<double>(M);
}

void check_aligned(const FieldSeries& a, const FieldSeries& b, const char* op) {
    if (a.size() != b.size()) throw Error(std::string(op) + ": series lengths differ");
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (std::abs(a.t[j] - b.t[j]) > 1e-9 * std::max(1.0, std::abs(a.t[j])))
            throw Error(std::string(op) + ": series time bases differ");
        require_same_grid(a.f[j].grid(), b.f[j].grid(), op);
    }
}

// sqrt(int w f^2) with optional density weighting.
double weighted_norm(const ScalarField& f, const ScalarField& q, const ScalarField* rho) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += q[i] * (rho ? (*rho)[i] : 1.0) * f[i] * f[i];
    return std::sqrt(s);
}

// sum_a (1/m_a) d_a^2 rho / rho through l = ln rho.
ScalarField lap_over_rho(const ScalarField& l, const PhysicalConstants& c) {
    ScalarField out(l.grid(), 0.0);
    for (std::size_t a = 0; a < l.grid().dims(); ++a) {
        const ScalarField d1 = derivative(l, a), d2 = second_derivative(l, a);
        const double inv_m = 1.0 / c.mass(a);
        for (std::size_t i = 0; i < l.size(); ++i) out[i] += inv_m * (d2[i] + d1[i] * d1[i]);
    }
    return out;
}

ScalarField log_of(const ScalarField& rho, const char* op) {
    check_floor(rho, std::numeric_limits<double>::min(), op);
    return rho.map([](double r) { return std::log(r); });
}

double mean_to_rms(const FieldSeries& fast, std::size_t M) {
    if (fast.size() < M + 1) return std::numeric_limits<double>::quiet_NaN();
    const ScalarField q = quadrature_weights(fast.grid());
    ScalarField mean(fast.grid(), 0.0);
    double ms = 0.0;
    for (std::size_t j = 0; j <= M; ++j) {
        const double w = trapezoid_weight(j, M);
        mean += fast.f[j] * w;
        const double n = weighted_norm(fast.f[j], q, nullptr);
        ms += w * n * n;
    }
    return ms > 0.0 ? weighted_norm(mean, q, nullptr) / std::sqrt(ms) : 0.0;
}

}  // namespace

void FieldSeries::push(double time, ScalarField field) {
    if (!f.empty()) require_same_grid(f.front().grid(), field.grid(), "series push");
    t.push_back(time);
    f.push_back(std::move(field));
}

FieldSeries density_series(const std::vector<HydroState>& states) {
    FieldSeries s;
    for (const auto& st : states) s.push(st.t, st.rho_r());
    return s;
}

FieldSeries action_series(const std::vector<HydroState>& states) {
    FieldSeries s;
    for (const auto& st : states) s.push(st.t, st.S);
    return s;
}

void unwrap_action_in_time(FieldSeries& S, double hbar, std::size_t anchor) {
    const double twopi = 2.0 * std::numbers::pi * hbar;
    for (std::size_t j = 1; j < S.size(); ++j) {
        const double jump = S.f[j][anchor] - S.f[j - 1][anchor];
        const double k = std::round(jump / twopi);
        if (k != 0.0) S.f[j] += -k * twopi;
    }
}

FieldSeries cycle_average(const FieldSeries& s, double omega, std::size_t window_periods) {
    if (!(omega > 0.0)) throw Error("cycle_average: omega must be positive");
    if (window_periods == 0) throw Error("cycle_average: window must be at least one period");
    const double dt = spacing(s);
    const std::size_t M = samples_per(static_cast<double>(window_periods), omega, dt);
    if (M / window_periods < 16) throw Error("cycle_average: at least 16 samples per period are required");
    if (s.size() < M + 1)
        throw InsufficientSamples("cycle_average: window of " + std::to_string(window_periods) +
                                  " periods exceeds the series span");
    FieldSeries out;
    const double inv = 1.0 / static_cast<double>(M);
    // Running interior sum plus the two half-weighted ends.
    ScalarField inner(s.grid(), 0.0);
    for (std::size_t j = 1; j < M; ++j) inner += s.f[j];
    for (std::size_t j = 0; j + M < s.size(); ++j) {
        if (j > 0) {
            inner -= s.f[j];
            inner += s.f[j + M - 1];
        }
        ScalarField avg = inner;
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = (avg[i] + 0.5 * (s.f[j][i] + s.f[j + M][i])) * inv;
        out.push(s.t[j] + 0.5 * static_cast<double>(M) * dt, std::move(avg));
    }
    return out;
}

FieldSeries corrected_cycle_average(const FieldSeries& s, double omega, std::size_t window_periods) {
    const FieldSeries once = cycle_average(s, omega, window_periods);
    const FieldSeries twice = cycle_average(once, omega, window_periods);
    const std::size_t M = samples_per(static_cast<double>(window_periods), omega, spacing(s));
    if (M % 2 != 0) throw Error("corrected_cycle_average: an even number of samples per window is required");
    FieldSeries out;
    for (std::size_t j = 0; j < twice.size(); ++j)
        out.push(twice.t[j], once.f[j + M / 2] * 2.0 - twice.f[j]);
    return out;
}

FieldSeries extract_fast(const FieldSeries& series, const FieldSeries& slow) {
    if (slow.empty()) return {};
    const double dt = spacing(series);
    FieldSeries out;
    for (std::size_t k = 0; k < slow.size(); ++k) {
        const double pos = (slow.t[k] - series.t[0]) / dt;
        const double r = std::round(pos);
        if (r < 0.0 || r >= static_cast<double>(series.size()) || std::abs(pos - r) > 1e-6)
            throw Error("extract_fast: slow sample at t = " + std::to_string(slow.t[k]) +
                        " is not a sample time of the series");
        const auto j = static_cast<std::size_t>(r);
        out.push(slow.t[k], series.f[j] - slow.f[k]);
    }
    return out;
}

FastSlowDecomposition decompose(const FieldSeries& rho_r, const FieldSeries& S_r, double omega,
                                std::size_t window_periods) {
    check_aligned(rho_r, S_r, "decompose");
    FastSlowDecomposition d;
    d.window = window_periods;
    d.omega = omega;
    d.slow_rho = corrected_cycle_average(rho_r, omega, window_periods);
    d.slow_S = corrected_cycle_average(S_r, omega, window_periods);
    d.fast_zeta = extract_fast(rho_r, d.slow_rho);
    d.fast_sigma = extract_fast(S_r, d.slow_S);
    const std::size_t M = samples_per(static_cast<double>(window_periods), omega, spacing(rho_r));
    d.zeta_mean_to_rms = mean_to_rms(d.fast_zeta, M);
    d.sigma_mean_to_rms = mean_to_rms(d.fast_sigma, M);
    return d;
}

FastSlowDecomposition analytic_fast_components(const FieldSeries& slow_rho, double omega, const PhysicalConstants& c) {
    FastSlowDecomposition d;
    d.omega = omega;
    d.slow_rho = slow_rho;
    for (std::size_t j = 0; j < slow_rho.size(); ++j) {
        const double t = slow_rho.t[j];
        const ScalarField& rho = slow_rho.f[j];
        const ScalarField l = log_of(rho, "analytic_fast_components");
        d.fast_sigma.push(t, l * (c.hbar / sqrt2 * std::sin(omega * t)));
        d.fast_zeta.push(t, rho * lap_over_rho(l, c) * (c.hbar / (sqrt2 * omega) * std::cos(omega * t)));
    }
    return d;
}

FastComponentError fast_component_error(const FastSlowDecomposition& d, const PhysicalConstants& c) {
    if (d.fast_zeta.empty()) throw InsufficientSamples("fast_component_error: no fast samples");
    const FastSlowDecomposition a = analytic_fast_components(d.slow_rho, d.omega, c);
    check_aligned(a.fast_zeta, d.fast_zeta, "fast_component_error");
    check_aligned(a.fast_sigma, d.fast_sigma, "fast_component_error");
    const ScalarField q = quadrature_weights(d.slow_rho.grid());
    double ez = 0.0, nz = 0.0, es = 0.0, ns = 0.0;
    for (std::size_t j = 0; j < a.fast_zeta.size(); ++j) {
        const ScalarField& rho = d.slow_rho.f[j];
        const double dz = weighted_norm(d.fast_zeta.f[j] - a.fast_zeta.f[j], q, nullptr);
        const double pz = weighted_norm(a.fast_zeta.f[j], q, nullptr);
        // sigma carries ln rho, which grows without bound in the tails: weight by density.
        const double ds = weighted_norm(d.fast_sigma.f[j] - a.fast_sigma.f[j], q, &rho);
        const double ps = weighted_norm(a.fast_sigma.f[j], q, &rho);
        ez += dz * dz;
        nz += pz * pz;
        es += ds * ds;
        ns += ps * ps;
    }
    return {ns > 0.0 ? std::sqrt(es / ns) : std::sqrt(es), nz > 0.0 ? std::sqrt(ez / nz) : std::sqrt(ez)};
}

bool IdentityReport::passed() const {
    return zeta_grad_sigma <= tolerance && kinetic <= tolerance && pressure <= tolerance;
}

IdentityReport verify_identities(const FieldSeries& sigma, const FieldSeries& zeta, const FieldSeries& rho,
                                 double omega, const PhysicalConstants& c, double tolerance) {
    check_aligned(sigma, zeta, "verify_identities");
    check_aligned(sigma, rho, "verify_identities");
    const double dt = spacing(sigma);
    const double span = sigma.t.back() - sigma.t.front();
    const double periods = std::round(span * omega / (2.0 * std::numbers::pi));
    if (periods < 1.0) throw InsufficientSamples("verify_identities: series must span a full fast period");
    const std::size_t M = samples_per(periods, omega, dt);
    if (M + 1 != sigma.size()) throw Error("verify_identities: series must span a whole number of fast periods");

    const Grid& g = sigma.grid();
    const std::size_t D = g.dims();
    std::vector<ScalarField> zg(D, ScalarField(g, 0.0)), zg_abs(D, ScalarField(g, 0.0));
    ScalarField kin(g, 0.0), zc(g, 0.0), rho_bar(g, 0.0);
    for (std::size_t j = 0; j <= M; ++j) {
        const double w = trapezoid_weight(j, M);
        const ScalarField& z = zeta.f[j];
        for (std::size_t a = 0; a < D; ++a) {
            const ScalarField ds = derivative(sigma.f[j], a);
            const double inv2m = 0.5 / c.mass(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                zg[a][i] += w * z[i] * ds[i];
                zg_abs[a][i] += w * std::abs(z[i] * ds[i]);
                kin[i] += w * inv2m * ds[i] * ds[i];
            }
        }
        const double cw = w * std::cos(omega * sigma.t[j]);
        for (std::size_t i = 0; i < g.size(); ++i) zc[i] += cw * z[i];
        rho_bar += rho.f[j] * w;
    }
    const ScalarField l_bar = log_of(rho_bar, "verify_identities");

    const ScalarField q = quadrature_weights(g);
    IdentityReport r;
    r.tolerance = tolerance;
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < D; ++a) {
        num += std::pow(weighted_norm(zg[a], q, nullptr), 2);
        den += std::pow(weighted_norm(zg_abs[a], q, nullptr), 2);
    }
    r.zeta_grad_sigma = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);

    const double h2 = c.hbar * c.hbar;
    ScalarField kin_ref(g, 0.0), p_lhs(g, 0.0);
    for (std::size_t a = 0; a < D; ++a) {
        const ScalarField d1 = derivative(l_bar, a);
        const double m = c.mass(a);
        for (std::size_t i = 0; i < g.size(); ++i) kin_ref[i] += h2 * d1[i] * d1[i] / (8.0 * m);
    }
    const ScalarField p_ref = lap_over_rho(l_bar, c) * (h2 / 4.0);
    for (std::size_t i = 0; i < g.size(); ++i) p_lhs[i] = c.hbar * omega / (sqrt2 * rho_bar[i]) * zc[i];

    auto residual = [&](const ScalarField& lhs, const ScalarField& ref, bool& relative) {
        const double dn = weighted_norm(lhs - ref, q, &rho_bar);
        const double rn = weighted_norm(ref, q, &rho_bar);
        const double ln = weighted_norm(lhs, q, &rho_bar);
        relative = rn > 1e-12 * std::max(1.0, ln);
        return relative ? dn / rn : dn;
    };
    r.kinetic = residual(kin, kin_ref, r.kinetic_relative);
    r.pressure = residual(p_lhs, p_ref, r.pressure_relative);
    return r;
}

SlowResidual recovered_slow_residual(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U,
                                     const PhysicalConstants& c, const VectorField* A) {
    check_aligned(rho, S, "recovered_slow_residual");
    if (rho.size() < 3) throw InsufficientSamples("recovered_slow_residual: at least three samples are required");
    const double dt = spacing(rho);
    const Grid& g = rho.grid();
    require_same_grid(g, U.grid(), "recovered_slow_residual");
    const double qc = c.charge / c.light_speed;
    const ScalarField q = quadrature_weights(g);
    SlowResidual out;
    for (std::size_t j = 1; j + 1 < rho.size(); ++j) {
        const ScalarField& r = rho.f[j];
        const double rmax = max_abs(r);
        const double floor = 1e-10 * rmax;
        const ScalarField clamped = r.map([&](double v) { return std::max(v, floor); });
        const ScalarField uq = quantum_potential(clamped, c, 0.0);
        ScalarField hj = (S.f[j + 1] - S.f[j - 1]) * (0.5 / dt) + U + uq;
        ScalarField cont = (rho.f[j + 1] - rho.f[j - 1]) * (0.5 / dt);
        for (std::size_t a = 0; a < g.dims(); ++a) {
            ScalarField P = derivative(S.f[j], a);
            if (A) P -= A->components[a] * qc;
            const double m = c.mass(a);
            for (std::size_t i = 0; i < g.size(); ++i) hj[i] += P[i] * P[i] / (2.0 * m);
            cont += derivative(r * P, a) * (1.0 / m);
        }
        // The quantum potential is meaningless where the density vanishes.
        for (std::size_t i = 0; i < g.size(); ++i)
            if (r[i] < floor) hj[i] = 0.0;
        double mass = 0.0, hj2 = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            mass += q[i] * r[i];
            hj2 += q[i] * r[i] * hj[i] * hj[i];
        }
        out.hj_norm = std::max(out.hj_norm, std::sqrt(hj2 / mass));
        out.continuity_norm = std::max(out.continuity_norm, l2_norm(cont));
        out.t.push_back(rho.t[j]);
        out.hj.push_back(std::move(hj));
        out.continuity.push_back(std::move(cont));
    }
    return out;
}

ScaleEstimates scale_estimates(const ScalarField& rho, const ScalarField& S, double omega, const PhysicalConstants& c) {
    require_same_grid(rho.grid(), S.grid(), "scale_estimates");
    const Grid& g = rho.grid();
    const double rmax = max_abs(rho);
    const VectorField dS = gradient(S);
    ScaleEstimates e;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (rho[i] < 1e-3 * rmax) continue;
        double v2 = 0.0;
        for (std::size_t a = 0; a < g.dims(); ++a) v2 += std::pow(dS.components[a][i] / c.mass(a), 2);
        e.V = std::max(e.V, std::sqrt(v2));
    }
    const double mass = integrate(rho);
    double var = 0.0;
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const ScalarField x = ScalarField::sample(g, [a](const Point& p) { return p[a]; });
        const double mean = integrate(x * rho) / mass;
        const ScalarField d2 = x.map([mean](double v) { return (v - mean) * (v - mean); });
        var += integrate(d2 * rho) / mass;
    }
    e.L = std::sqrt(var);
    // Round-off gradients of a flat S count as rest.
    if (e.V <= 1e-12 * c.hbar / (c.mass(0) * e.L)) {
        e.V = 0.0;
        e.T = std::numeric_limits<double>::infinity();
        return e;
    }
    e.T = e.L / e.V;
    e.S_m = c.mass(0) * e.V * e.L;
    e.ratio_omegaT = 1.0 / (omega * e.T);
    e.zeta_rho_bound = c.hbar / (2.0 * e.S_m) * e.ratio_omegaT;
    return e;
}

double measured_zeta_over_rho(const FieldSeries& zeta, const FieldSeries& slow_rho) {
    check_aligned(zeta, slow_rho, "measured_zeta_over_rho");
    const ScalarField q = quadrature_weights(zeta.grid());
    double best = 0.0;
    for (std::size_t j = 0; j < zeta.size(); ++j) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            num += q[i] * std::abs(zeta.f[j][i]);
            den += q[i] * slow_rho.f[j][i];
        }
        best = std::max(best, num / den);
    }
    return best;
}

}  // namespace qh
