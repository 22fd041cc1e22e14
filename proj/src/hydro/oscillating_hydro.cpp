#include "qh/oscillating_hydro.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qh/ops.hpp"

namespace qh {

namespace {

const double sqrt2 = std::numbers::sqrt2;

// Largest eigenvalue of -d^2/dx^2 as discretized on the axis.
double max_symbol(const Axis& ax) {
    const double h = ax.spacing();
    return ax.boundary == Boundary::Periodic ? std::pow(std::numbers::pi / h, 2) : 16.0 / (3.0 * h * h);
}

struct Rates {
    ScalarField dl;
    ScalarField dS;
};

Rates rhs(const ScalarField& l, const ScalarField& S, double t, const HydroModel& m, const OscillationConfig& osc) {
    const Grid& g = l.grid();
    const double qc = m.consts.charge / m.consts.light_speed;
    Rates r{ScalarField(g, 0.0), ScalarField(g, 0.0)};
    for (std::size_t a = 0; a < g.dims(); ++a) {
        ScalarField P = derivative(S, a);
        ScalarField divP = second_derivative(S, a);
        if (m.has_vector_potential()) {
            const ScalarField& A = m.A.components[a];
            const ScalarField& dA = m.divA_parts[a];
            for (std::size_t i = 0; i < P.size(); ++i) {
                P[i] -= qc * A[i];
                divP[i] -= qc * dA[i];
            }
        }
        const ScalarField dl = derivative(l, a);
        const double inv_m = 1.0 / m.consts.mass(a);
        for (std::size_t i = 0; i < P.size(); ++i) {
            r.dl[i] -= inv_m * (dl[i] * P[i] + divP[i]);
            r.dS[i] -= 0.5 * inv_m * P[i] * P[i];
        }
    }
    const double k = osc.oscillating_term ? m.consts.hbar * osc.omega / sqrt2 * std::cos(osc.omega * t) : 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) r.dS[i] += k * l[i] - m.U[i];
    return r;
}

void axpy(ScalarField& out, const ScalarField& x, double a, const ScalarField& y) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * y[i];
}

HydroState rk4(const HydroState& s, const HydroModel& m, const OscillationConfig& osc, double dt) {
    const Rates k1 = rhs(s.log_rho, s.S, s.t, m, osc);
    ScalarField l(s.log_rho.grid()), S(s.S.grid());
    axpy(l, s.log_rho, 0.5 * dt, k1.dl);
    axpy(S, s.S, 0.5 * dt, k1.dS);
    const Rates k2 = rhs(l, S, s.t + 0.5 * dt, m, osc);
    axpy(l, s.log_rho, 0.5 * dt, k2.dl);
    axpy(S, s.S, 0.5 * dt, k2.dS);
    const Rates k3 = rhs(l, S, s.t + 0.5 * dt, m, osc);
    axpy(l, s.log_rho, dt, k3.dl);
    axpy(S, s.S, dt, k3.dS);
    const Rates k4 = rhs(l, S, s.t + dt, m, osc);
    HydroState out{s.log_rho, s.S, s.t + dt};
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        out.log_rho[i] += w * (k1.dl[i] + 2.0 * k2.dl[i] + 2.0 * k3.dl[i] + k4.dl[i]);
        out.S[i] += w * (k1.dS[i] + 2.0 * k2.dS[i] + 2.0 * k3.dS[i] + k4.dS[i]);
    }
    return out;
}

// Index of the first bad node, or npos.
std::size_t first_bad(const HydroState& s, double log_floor) {
    for (std::size_t i = 0; i < s.log_rho.size(); ++i)
        if (!std::isfinite(s.S[i]) || !(s.log_rho[i] >= log_floor) || !std::isfinite(s.log_rho[i])) return i;
    return std::string::npos;
}

void check_cfl(const HydroState& s, const HydroModel& m, double dt) {
    const VectorField v = s.velocity(m.consts, m.has_vector_potential() ? &m.A : nullptr);
    for (std::size_t a = 0; a < v.dims(); ++a) {
        const double vmax = max_abs(v.components[a]);
        if (dt * vmax > 0.5 * s.log_rho.grid().dx(a))
            throw CflViolation("hydro step: dt*max|v| = " + std::to_string(dt * vmax) + " exceeds 0.5*dx = " +
                               std::to_string(0.5 * s.log_rho.grid().dx(a)) + " on axis " + std::to_string(a));
    }
}

void require_state_grid(const HydroState& s, const HydroModel& m) {
    require_same_grid(s.log_rho.grid(), s.S.grid(), "hydro state");
    require_same_grid(s.log_rho.grid(), m.grid(), "hydro model");
}

}  // namespace

double OscillationConfig::period() const { return 2.0 * std::numbers::pi / omega; }

double OscillationConfig::dt() const { return period() / static_cast<double>(substeps_per_period); }

void OscillationConfig::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw Error("oscillation: omega must be positive");
    if (substeps_per_period < 16) throw Error("oscillation: at least 16 substeps per period are required");
    if (!(rho_floor > 0.0)) throw Error("oscillation: rho_floor must be positive");
}

HydroState HydroState::from_density(const ScalarField& rho, const ScalarField& S, double t, double rho_floor) {
    require_same_grid(rho.grid(), S.grid(), "hydro state");
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (!(rho[i] >= rho_floor))
            throw FloorViolation("hydro state: density below floor at node " + std::to_string(i), i);
    return {rho.map([](double r) { return std::log(r); }), S, t};
}

ScalarField HydroState::rho_r() const {
    return log_rho.map([](double l) { return std::exp(l); });
}

double HydroState::mass() const { return integrate(rho_r()); }

VectorField HydroState::velocity(const PhysicalConstants& c, const VectorField* A) const {
    VectorField v = gradient(S);
    const double qc = c.charge / c.light_speed;
    for (std::size_t a = 0; a < v.dims(); ++a) {
        if (A) v.components[a] -= A->components[a] * qc;
        v.components[a] *= 1.0 / c.mass(a);
    }
    return v;
}

double PressureLaw::coefficient(double t) const { return -hbar * omega / sqrt2 * std::cos(omega * t); }

ScalarField PressureLaw::pressure(const ScalarField& rho_r, double t) const { return rho_r * coefficient(t); }

double PressureLaw::temperature(double t, double boltzmann) const { return coefficient(t) / boltzmann; }

HydroModel HydroModel::scalar(const ScalarField& U, const PhysicalConstants& c) {
    c.validate();
    ensure_finite(U, "hydro potential");
    return {U, VectorField{}, c, {}};
}

HydroModel HydroModel::scalar(const Grid& g, const PotentialSpec& U, const PhysicalConstants& c) {
    return scalar(U.evaluate(g, c), c);
}

HydroModel HydroModel::em(const EMPotentialSpec& em, const PhysicalConstants& c) {
    c.validate();
    require_same_grid(em.A.grid, em.phi.grid(), "hydro em model");
    if (em.A.dims() != em.phi.grid().dims()) throw Error("hydro em model: A needs one component per axis");
    HydroModel m{em.phi * c.charge, em.A, c, {}};
    for (std::size_t a = 0; a < em.A.dims(); ++a) m.divA_parts.push_back(derivative(em.A.components[a], a));
    return m;
}

HydroModel HydroModel::many(const ScalarField& U, const PhysicalConstants& c) {
    if (U.grid().dims() != 2) throw Error("many-body hydro: a 2-axis configuration grid is required");
    if (c.masses.size() != 1 && c.masses.size() != 2) throw Error("many-body hydro: give one or two masses");
    return scalar(U, c);
}

namespace {

HydroState advance_counted(const HydroState& s, const HydroModel& model, const OscillationConfig& osc, double dt,
                           std::size_t* retries) {
    osc.validate();
    require_state_grid(s, model);
    if (!(dt > 0.0) || dt > osc.dt() * (1.0 + 1e-12))
        throw Error("hydro step: dt must lie in (0, 2 pi/(omega K)]");
    check_cfl(s, model, dt);
    const double log_floor = std::log(osc.rho_floor);
    HydroState out = rk4(s, model, osc, dt);
    if (first_bad(out, log_floor) == std::string::npos) return out;
    if (retries) ++*retries;
    out = rk4(rk4(s, model, osc, 0.5 * dt), model, osc, 0.5 * dt);
    const std::size_t bad = first_bad(out, log_floor);
    if (bad == std::string::npos) return out;
    const std::string where = " at node " + std::to_string(bad) + " (t = " + std::to_string(s.t + dt) + ")";
    if (!std::isfinite(out.log_rho[bad]) || !std::isfinite(out.S[bad]))
        throw NonFiniteError("hydro step: non-finite value" + where);
    throw FloorViolation("hydro step: density below floor" + where, bad);
}

}  // namespace

HydroState advance(const HydroState& s, const HydroModel& model, const OscillationConfig& osc, double dt) {
    return advance_counted(s, model, osc, dt, nullptr);
}

HydroState hj_step(const HydroState& s, const ScalarField& U, const PhysicalConstants& c,
                   const OscillationConfig& osc, double dt) {
    return advance(s, HydroModel::scalar(U, c), osc, dt);
}

HydroState hj_step_em(const HydroState& s, const EMPotentialSpec& em, const PhysicalConstants& c,
                      const OscillationConfig& osc, double dt) {
    return advance(s, HydroModel::em(em, c), osc, dt);
}

HydroState hj_step_many(const HydroState& s, const ScalarField& U, const PhysicalConstants& c,
                        const OscillationConfig& osc, double dt) {
    return advance(s, HydroModel::many(U, c), osc, dt);
}

namespace {

// sum_k (1/m_k)(d_k^2 l + (d_k l)^2) = sum_k lap_k rho/(m_k rho).
ScalarField weighted_lap_over_rho(const ScalarField& l, const PhysicalConstants& c) {
    ScalarField out(l.grid(), 0.0);
    for (std::size_t a = 0; a < l.grid().dims(); ++a) {
        const ScalarField d1 = derivative(l, a), d2 = second_derivative(l, a);
        const double inv_m = 1.0 / c.mass(a);
        for (std::size_t i = 0; i < l.size(); ++i) out[i] += inv_m * (d2[i] + d1[i] * d1[i]);
    }
    return out;
}

ScalarField checked_log(const ScalarField& rho, double floor, const char* op) {
    ScalarField l(rho.grid());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!(rho[i] >= floor))
            throw FloorViolation(std::string(op) + ": density below floor at node " + std::to_string(i), i);
        l[i] = std::log(rho[i]);
    }
    return l;
}

}  // namespace

FastComponents seed_fast_components(const ScalarField& rho, double t0, const OscillationConfig& osc,
                                    const PhysicalConstants& c) {
    osc.validate();
    const ScalarField l = checked_log(rho, osc.rho_floor, "seed_fast_components");
    const double w = osc.omega;
    FastComponents f{l * (c.hbar / sqrt2 * std::sin(w * t0)), ScalarField(rho.grid(), 0.0)};
    const ScalarField lap = weighted_lap_over_rho(l, c);
    const double k = c.hbar / (sqrt2 * w) * std::cos(w * t0);
    for (std::size_t i = 0; i < rho.size(); ++i) f.zeta[i] = k * rho[i] * lap[i];
    return f;
}

HydroState seeded_state(const ScalarField& rho, const ScalarField& S, double t0, const OscillationConfig& osc,
                        const PhysicalConstants& c) {
    osc.validate();
    require_same_grid(rho.grid(), S.grid(), "seeded_state");
    HydroState s{checked_log(rho, osc.rho_floor, "seeded_state"), S, t0};
    if (!osc.seed_fast) return s;
    const double w = osc.omega;
    const ScalarField lap = weighted_lap_over_rho(s.log_rho, c);
    const double kz = c.hbar / (sqrt2 * w) * std::cos(w * t0), ks = c.hbar / sqrt2 * std::sin(w * t0);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        s.S[i] += ks * s.log_rho[i];
        s.log_rho[i] += kz * lap[i];
    }
    // exp() adds O(1/w^2) mass that zeta itself does not carry.
    s.log_rho += std::log(integrate(rho) / s.mass());
    return s;
}

StabilityMargins stability_margins(const HydroState& s, const HydroModel& model, const OscillationConfig& osc) {
    const Grid& g = s.log_rho.grid();
    StabilityMargins out;
    double lam = 0.0;
    for (std::size_t a = 0; a < g.dims(); ++a) lam += max_symbol(g.axis(a)) / model.consts.mass(a);
    out.parametric = model.consts.hbar * lam / (0.642 * osc.omega);
    for (std::size_t a = 0; a < g.dims(); ++a)
        out.peclet = std::max(out.peclet, max_abs(derivative(s.log_rho, a)) * g.dx(a) / (2.0 * 0.9));
    return out;
}

double euler_form_mismatch(const HydroState& s, const HydroModel& model, const OscillationConfig& osc) {
    const Grid& g = s.log_rho.grid();
    const PhysicalConstants& c = model.consts;
    const Rates r = rhs(s.log_rho, s.S, s.t, model, osc);
    const VectorField v = s.velocity(c, model.has_vector_potential() ? &model.A : nullptr);
    const PressureLaw law{c.hbar, osc.omega};
    const ScalarField rho = s.rho_r();
    const ScalarField p = osc.oscillating_term ? law.pressure(rho, s.t) : ScalarField(g, 0.0);
    double diff = 0.0, scale = 0.0;
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const double m = c.mass(a);
        const ScalarField hj = derivative(r.dS, a) * (1.0 / m);
        ScalarField euler = derivative(model.U, a) * (-1.0 / m);
        const ScalarField dp = derivative(p, a);
        for (std::size_t i = 0; i < rho.size(); ++i) euler[i] -= dp[i] / (m * rho[i]);
        for (std::size_t b = 0; b < g.dims(); ++b) {
            const ScalarField dv = derivative(v.components[a], b);
            for (std::size_t i = 0; i < rho.size(); ++i) euler[i] -= v.components[b][i] * dv[i];
        }
        diff = std::max(diff, max_abs(hj, euler));
        scale = std::max(scale, max_abs(hj));
    }
    return scale > 0.0 ? diff / scale : diff;
}

namespace {

double slow_energy(const ScalarField& rho, const ScalarField& S, const HydroModel& m) {
    const PhysicalConstants& c = m.consts;
    const double qc = c.charge / c.light_speed;
    const ScalarField l = rho.map([](double r) { return std::log(std::max(r, 1e-300)); });
    ScalarField e = m.U;
    for (std::size_t a = 0; a < rho.grid().dims(); ++a) {
        ScalarField P = derivative(S, a);
        if (m.has_vector_potential()) P -= m.A.components[a] * qc;
        const ScalarField dl = derivative(l, a);
        const double mm = c.mass(a);
        for (std::size_t i = 0; i < e.size(); ++i)
            e[i] += P[i] * P[i] / (2.0 * mm) + c.hbar * c.hbar * dl[i] * dl[i] / (8.0 * mm);
    }
    return integrate(e * rho);
}

// Running rho_r-weighted sums for the convective ratio.
struct ConvectiveAccumulator {
    double conv = 0.0;
    double osc = 0.0;

    void add(const HydroState& s, const HydroModel& m, const OscillationConfig& o, const ScalarField& w) {
        const PhysicalConstants& c = m.consts;
        const ScalarField rho = s.rho_r();
        const VectorField v = s.velocity(c, m.has_vector_potential() ? &m.A : nullptr);
        const double k = c.hbar * o.omega / sqrt2 * std::cos(o.omega * s.t);
        double mass = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            mass += w[i] * rho[i];
            mean += w[i] * rho[i] * k * s.log_rho[i];
        }
        mean /= mass;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            double kin = 0.0;
            for (std::size_t a = 0; a < v.dims(); ++a) kin += 0.5 * c.mass(a) * v.components[a][i] * v.components[a][i];
            const double term = k * s.log_rho[i] - mean;
            conv += w[i] * rho[i] * kin * kin;
            osc += w[i] * rho[i] * term * term;
        }
    }
    double ratio() const { return osc > 0.0 ? std::sqrt(conv / osc) : 0.0; }
};

double curl_2d(const HydroState& s) {
    if (s.S.grid().dims() != 2) return 0.0;
    return max_abs(derivative(derivative(s.S, 0), 1), derivative(derivative(s.S, 1), 0));
}

double pressure_mismatch(const HydroState& s, const HydroModel& m, const OscillationConfig& o) {
    if (!o.oscillating_term) return 0.0;
    // grad p / rho_r against the force of the ln rho_r term it stands for.
    const PressureLaw law{m.consts.hbar, o.omega};
    const double k = law.coefficient(s.t);
    if (k == 0.0) return 0.0;
    const ScalarField rho = s.rho_r();
    const ScalarField p = law.pressure(rho, s.t);
    double diff = 0.0, scale = 0.0;
    for (std::size_t a = 0; a < rho.grid().dims(); ++a) {
        const ScalarField dp = derivative(p, a), dl = derivative(s.log_rho, a);
        for (std::size_t i = 0; i < rho.size(); ++i) {
            diff = std::max(diff, std::abs(dp[i] / rho[i] - k * dl[i]));
            scale = std::max(scale, std::abs(k * dl[i]));
        }
    }
    return scale > 0.0 ? diff / scale : 0.0;
}

}  // namespace

RunResult run(const HydroState& initial, const HydroModel& model, const OscillationConfig& osc,
              const RunOptions& opts) {
    osc.validate();
    require_state_grid(initial, model);
    if (!(opts.duration >= 0.0)) throw Error("hydro run: duration must be non-negative");
    RunResult res;
    res.initial = initial;
    res.final = initial;
    const std::size_t K = osc.substeps_per_period;
    const double dt = osc.dt();
    const std::size_t periods = static_cast<std::size_t>(std::floor(opts.duration / osc.period() + 1e-9));
    const ScalarField w = quadrature_weights(initial.log_rho.grid());
    const double m0 = initial.mass();
    res.diag.mass.push_back(m0);
    res.diag.margins = stability_margins(initial, model, osc);
    ConvectiveAccumulator conv;
    HydroState s = initial;
    try {
        for (std::size_t p = 0; p < periods; ++p) {
            const bool capture = p >= opts.capture_first && p < opts.capture_first + opts.capture_count;
            const double t_start = s.t;
            ScalarField rho_sum = s.rho_r() * 0.5, S_sum = s.S * 0.5;
            if (capture && (res.captured.empty() || res.captured.back().t != s.t)) res.captured.push_back(s);
            for (std::size_t j = 1; j <= K; ++j) {
                s = advance_counted(s, model, osc, dt, &res.diag.retried_steps);
                // Pin the clock to the substep grid so period boundaries do not drift.
                s.t = t_start + static_cast<double>(j) * dt;
                ++res.diag.steps;
                const double wj = j == K ? 0.5 : 1.0;
                rho_sum += s.rho_r() * wj;
                S_sum += s.S * wj;
                if (capture) res.captured.push_back(s);
                if (opts.diagnostics) conv.add(s, model, osc, w);
            }
            PeriodRecord rec;
            rec.index = p;
            rec.t_start = t_start;
            rec.t_center = t_start + 0.5 * osc.period();
            rec.rho_avg = rho_sum * (1.0 / static_cast<double>(K));
            rec.S_avg = S_sum * (1.0 / static_cast<double>(K));
            rec.mass = s.mass();
            if (opts.diagnostics) {
                rec.slow_energy = slow_energy(rec.rho_avg, rec.S_avg, model);
                res.diag.max_curl = std::max(res.diag.max_curl, curl_2d(s));
                res.diag.max_pressure_mismatch = std::max(res.diag.max_pressure_mismatch, pressure_mismatch(s, model, osc));
                const StabilityMargins sm = stability_margins(s, model, osc);
                res.diag.margins.peclet = std::max(res.diag.margins.peclet, sm.peclet);
            }
            res.diag.mass.push_back(rec.mass);
            res.diag.max_mass_drift = std::max(res.diag.max_mass_drift, std::abs(rec.mass - m0));
            res.final = s;
            if (opts.on_period) opts.on_period(rec);
            res.periods.push_back(std::move(rec));
        }
    } catch (const Error& e) {
        res.completed = false;
        res.error = e.what();
    }
    res.diag.convective_ratio = conv.ratio();
    return res;
}

RunResult run_from_wavefunction(const Wavefunction& psi, double t0, const HydroModel& model,
                                const OscillationConfig& osc, const RunOptions& opts) {
    const MadelungFields mf = madelung_decompose(psi, default_rho_floor(density_of(psi)), model.consts.hbar);
    return run(seeded_state(mf.rho, mf.S, t0, osc, model.consts), model, osc, opts);
}

}  // namespace qh
