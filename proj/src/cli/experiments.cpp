#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "qh/action_functional.hpp"
#include "qh/averaging.hpp"
#include "qh/errors.hpp"
#include "qh/ops.hpp"
#include "qh/parallel.hpp"
#include "qh/pinball.hpp"
#include "qh/quantum_potential.hpp"
#include "setup.hpp"

namespace qh {

namespace {

using namespace lab;
using nlohmann::json;

const double pi = std::numbers::pi;

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string tag_of(double omega) { return "w" + fmt(omega); }

std::string write_csv(const ExperimentContext& ctx, const std::string& rel, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream f(ctx.path(rel));
    f << std::setprecision(17) << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << '\n';
    }
    if (!f) throw Error("cannot write " + rel);
    return rel;
}

double tolerance(const Config& cfg, const std::string& name, double fallback) {
    return positive(cfg, "tolerances." + name, fallback);
}

std::string read_system(const Config& cfg, const std::string& fallback, const std::vector<std::string>& allowed) {
    const std::string s = cfg.string("scenario.system", fallback);
    for (const auto& a : allowed)
        if (s == a) return s;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    cfg.fail("scenario.system", "this experiment supports " + list + ", got '" + s + "'");
}

double duration_for(const Config& cfg, const std::vector<double>& omegas, double fallback) {
    const double d = positive(cfg, "run.duration", fallback);
    for (double w : omegas)
        if (d < 2 * pi / w) cfg.fail("run.duration", "shorter than one fast period at omega " + fmt(w));
    return d;
}

std::size_t whole_periods(double duration, double omega) {
    return static_cast<std::size_t>(std::floor(duration * omega / (2 * pi) + 1e-9));
}

// A hydro problem without a reference: [constants], [grid], [potential], [initial].
struct HydroProblem {
    PhysicalConstants consts;
    Grid grid;
    ScalarField U;
    InitialSpec initial;

    HydroModel model() const { return HydroModel::scalar(U, consts); }
    Wavefunction psi() const { return initial.make(grid, consts); }
};

HydroProblem read_hydro(const Config& cfg) {
    HydroProblem p;
    p.consts = read_constants(cfg);
    p.grid = read_grid(cfg, "grid", Boundary::Dirichlet);
    if (p.consts.masses.size() != 1 && p.consts.masses.size() != p.grid.dims())
        cfg.fail("constants.mass", "expected 1 or " + std::to_string(p.grid.dims()) + " masses");
    p.U = potential_on(cfg, "potential", read_potential(cfg, "potential"), p.grid, p.consts);
    p.initial = read_initial(cfg, "initial", p.grid.dims());
    if (p.initial.has_snapshot) {
        try {
            (void)p.psi();
        } catch (const GridMismatch& e) {
            cfg.fail("initial.file", e.what());
        }
    }
    return p;
}

// Run over `duration` keeping the substeps of the last `capture` periods.
RunResult captured_run(const HydroProblem& p, const OscillationConfig& osc, double duration, std::size_t capture) {
    RunOptions opts;
    opts.duration = duration;
    const std::size_t n = whole_periods(duration, osc.omega);
    opts.capture_first = n - capture;
    opts.capture_count = capture;
    RunResult r = run_from_wavefunction(p.psi(), 0.0, p.model(), osc, opts);
    if (!r.completed)
        throw Error("hydro run at omega " + fmt(osc.omega) + " stopped after " + std::to_string(r.periods.size()) +
                    " periods: " + r.error);
    return r;
}

FieldSeries slice(const FieldSeries& s, std::size_t first, std::size_t count) {
    FieldSeries out;
    for (std::size_t j = first; j < first + count; ++j) out.push(s.t[j], s.f[j]);
    return out;
}

RunRecord hydro_record(const std::string& name, const RunResult& r, const OscillationConfig& osc,
                       const PhysicalConstants& c, std::size_t snapshots, const ExperimentContext& ctx) {
    RunRecord rec;
    rec.name = name;
    rec.kind = "oscillating_hydro";
    rec.grid = r.initial.log_rho.grid();
    const auto idx = spread_indices(r.periods.size(), snapshots);
    rec.info = hydro_info(r, osc, c, idx);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& p = r.periods[idx[i]];
        rec.series.emplace_back(p.t_center, ctx.snapshot(name, i, p.rho_avg, p.t_center));
    }
    return rec;
}

json identity_json(const IdentityReport& r) {
    return {{"zeta_grad_sigma", r.zeta_grad_sigma},
            {"kinetic", r.kinetic},
            {"pressure", r.pressure},
            {"kinetic_relative", r.kinetic_relative},
            {"pressure_relative", r.pressure_relative}};
}

double identity_max(const IdentityReport& r) { return std::max({r.zeta_grad_sigma, r.kinetic, r.pressure}); }

// ---------------------------------------------------------------------------------------------
// omega_sweep: averaged hydro density against the Schrodinger reference for increasing omega.

ExperimentJob prepare_omega_sweep(const Config& cfg) {
    const std::string system = read_system(cfg, "scalar", {"scalar", "em", "many_body"});
    const PairedSystem s = read_paired(cfg, system);
    const OscillationSpec osc = read_oscillation(cfg);
    for (std::size_t i = 1; i < osc.omegas.size(); ++i)
        if (!(osc.omegas[i] > osc.omegas[i - 1])) cfg.fail("oscillation.omega", "must be strictly increasing");
    if (osc.omegas.size() < 2) cfg.fail("oscillation.omega", "a sweep needs at least two values");
    const double duration = duration_for(cfg, osc.omegas, 1.0);
    const std::size_t snapshots = count(cfg, "run.snapshots", 4, 1, 64);
    const bool unseeded = cfg.boolean("sweep.report_unseeded", false);
    const double exp_min = cfg.number("tolerances.exponent_min", 0.5);
    const double exp_max = cfg.number("tolerances.exponent_max", 1.5);
    if (!(exp_min < exp_max)) cfg.fail("tolerances.exponent_max", "must exceed tolerances.exponent_min");
    const std::optional<double> max_error =
        cfg.has("tolerances.max_error") ? std::optional<double>(positive(cfg, "tolerances.max_error")) : std::nullopt;

    return [=](const ExperimentContext& ctx) {
        const std::size_t n = osc.omegas.size();
        std::vector<OscillationConfig> jobs;
        for (double w : osc.omegas) jobs.push_back(osc.at(w));
        if (unseeded)
            for (double w : osc.omegas) {
                OscillationConfig o = osc.at(w);
                o.seed_fast = false;
                jobs.push_back(o);
            }
        std::vector<PairedRun> runs(jobs.size());
        parallel_for(jobs.size(), ctx.workers, [&](std::size_t i) { runs[i] = run_paired(s, jobs[i], duration, snapshots); });

        ExperimentOutput out;
        std::vector<double> errors, errors_unseeded;
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < n; ++i) {
            const PairedRun& r = runs[i];
            errors.push_back(r.final_error);
            std::vector<double> row{r.omega, r.final_error, r.hydro.periods.back().t_center,
                                    static_cast<double>(r.hydro.periods.size())};
            if (unseeded) {
                errors_unseeded.push_back(runs[n + i].final_error);
                row.push_back(runs[n + i].final_error);
            }
            rows.push_back(row);
            for (auto& rec : record_paired(r, s, tag_of(r.omega), ctx)) out.runs.push_back(std::move(rec));
        }
        out.files.push_back(write_csv(ctx, "convergence.csv",
                                      unseeded ? "omega,error,t_center,periods,error_unseeded" : "omega,error,t_center,periods",
                                      rows));
        bool monotone = true;
        for (std::size_t i = 1; i < n; ++i) monotone = monotone && errors[i] < errors[i - 1];
        const double p = decay_exponent(osc.omegas, errors);
        out.checks.push_back(Check::holds("error decreases monotonically with omega", monotone));
        out.checks.push_back(Check::within("fitted decay exponent", p, exp_min, exp_max));
        if (max_error) out.checks.push_back(Check::at_most("largest error", errors.front(), *max_error));
        out.metrics["paired_runs"] = n;
        out.metrics["omegas"] = osc.omegas;
        out.metrics["errors"] = errors;
        out.metrics["exponent"] = p;
        if (unseeded) {
            out.metrics["errors_unseeded"] = errors_unseeded;
            out.metrics["exponent_unseeded"] = decay_exponent(osc.omegas, errors_unseeded);
        }
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// fast_components: extracted sigma and zeta against their analytic forms; identities on the
// simulated fast parts.

struct FastResult {
    double omega = 0.0;
    RunResult run;
    FastComponentError error;
    IdentityReport identities;
    double zeta_mean_to_rms = 0.0, sigma_mean_to_rms = 0.0;
};

FastResult fast_components_at(const HydroProblem& p, const OscillationConfig& osc, double duration, double id_tol) {
    FastResult f;
    f.omega = osc.omega;
    f.run = captured_run(p, osc, duration, 3);
    const FastSlowDecomposition d = decompose(density_series(f.run.captured), action_series(f.run.captured), osc.omega);
    f.error = fast_component_error(d, p.consts);
    const std::size_t K = osc.substeps_per_period;
    f.identities = verify_identities(slice(d.fast_sigma, 0, K + 1), slice(d.fast_zeta, 0, K + 1),
                                     slice(d.slow_rho, 0, K + 1), osc.omega, p.consts, id_tol);
    f.zeta_mean_to_rms = d.zeta_mean_to_rms;
    f.sigma_mean_to_rms = d.sigma_mean_to_rms;
    return f;
}

ExperimentJob prepare_fast_components(const Config& cfg) {
    (void)read_system(cfg, "scalar", {"scalar"});
    const HydroProblem p = read_hydro(cfg);
    const OscillationSpec osc = read_oscillation(cfg);
    const double check_omega = positive(cfg, "fast.check_omega", 200.0);
    bool found = false;
    for (double w : osc.omegas) found = found || w == check_omega;
    if (!found) cfg.fail("fast.check_omega", "must be one of oscillation.omega");
    const double duration = duration_for(cfg, osc.omegas, 1.0);
    for (double w : osc.omegas)
        if (whole_periods(duration, w) < 4) cfg.fail("run.duration", "needs at least 4 fast periods at omega " + fmt(w));
    const double tol = tolerance(cfg, "max_error", 0.05);
    const double id_tol = tolerance(cfg, "identity", 0.05);

    return [=](const ExperimentContext& ctx) {
        std::vector<FastResult> res(osc.omegas.size());
        parallel_for(res.size(), ctx.workers, [&](std::size_t i) {
            res[i] = fast_components_at(p, osc.at(osc.omegas[i]), duration, id_tol);
        });
        ExperimentOutput out;
        std::vector<std::vector<double>> rows;
        json per = json::array();
        for (const auto& f : res) {
            rows.push_back({f.omega, f.error.sigma, f.error.zeta, identity_max(f.identities)});
            per.push_back({{"omega", f.omega},
                           {"sigma_error", f.error.sigma},
                           {"zeta_error", f.error.zeta},
                           {"sigma_mean_to_rms", f.sigma_mean_to_rms},
                           {"zeta_mean_to_rms", f.zeta_mean_to_rms},
                           {"identities", identity_json(f.identities)}});
            out.runs.push_back(hydro_record("hydro-" + tag_of(f.omega), f.run, osc.at(f.omega), p.consts, 3, ctx));
            if (f.omega == check_omega) {
                out.checks.push_back(Check::at_most("sigma relative RMS error at omega " + fmt(f.omega), f.error.sigma, tol));
                out.checks.push_back(Check::at_most("zeta relative RMS error at omega " + fmt(f.omega), f.error.zeta, tol));
            }
        }
        out.files.push_back(write_csv(ctx, "fast_components.csv", "omega,sigma_error,zeta_error,identity_residual", rows));
        const auto worst = [](const FastResult& f) { return std::max(f.error.sigma, f.error.zeta); };
        out.checks.push_back(Check::below("error at the largest omega against the smallest", worst(res.back()),
                                          worst(res.front())));
        out.metrics["per_omega"] = per;
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// identities: the three averaging identities on analytic fast parts and on simulated data.

ExperimentJob prepare_identities(const Config& cfg) {
    (void)read_system(cfg, "scalar", {"scalar"});
    const std::size_t n = count(cfg, "analytic.points", 161, 16, 4096);
    const double L = positive(cfg, "analytic.length", 10.0);
    const double width = positive(cfg, "analytic.width", 1.0);
    const double an_omega = positive(cfg, "analytic.omega", 200.0);
    const std::size_t K = count(cfg, "analytic.substeps", 32, 16, 4096);
    const HydroProblem p = read_hydro(cfg);
    const OscillationSpec osc = read_oscillation(cfg, {200.0});
    if (osc.omegas.size() != 1) cfg.fail("oscillation.omega", "expected a single value");
    const double duration = duration_for(cfg, osc.omegas, 1.0);
    if (whole_periods(duration, osc.omegas[0]) < 4) cfg.fail("run.duration", "needs at least 4 fast periods");
    const double an_tol = tolerance(cfg, "analytic", 1e-6);
    const double sim_tol = tolerance(cfg, "simulated", 0.05);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;
        const Grid g = Grid::line(n, L, Boundary::Dirichlet);
        const ScalarField rho = ScalarField::sample(g, [&](const Point& x) {
            return std::exp(-0.5 * x[0] * x[0] / (width * width)) / (std::sqrt(2 * pi) * width);
        });
        FieldSeries slow;
        const double dt = 2 * pi / (an_omega * static_cast<double>(K));
        for (std::size_t j = 0; j <= K; ++j) slow.push(static_cast<double>(j) * dt, rho);
        const FastSlowDecomposition an = analytic_fast_components(slow, an_omega, p.consts);
        const IdentityReport a = verify_identities(an.fast_sigma, an.fast_zeta, slow, an_omega, p.consts, an_tol);
        out.checks.push_back(Check::at_most("analytic <zeta grad sigma>", a.zeta_grad_sigma, an_tol));
        out.checks.push_back(Check::at_most("analytic kinetic identity", a.kinetic, an_tol));
        out.checks.push_back(Check::at_most("analytic pressure identity", a.pressure, an_tol));

        const FastResult f = fast_components_at(p, osc.at(osc.omegas[0]), duration, sim_tol);
        const std::string at = " at omega " + fmt(f.omega);
        out.checks.push_back(Check::at_most("simulated <zeta grad sigma>" + at, f.identities.zeta_grad_sigma, sim_tol));
        out.checks.push_back(Check::at_most("simulated kinetic identity" + at, f.identities.kinetic, sim_tol));
        out.checks.push_back(Check::at_most("simulated pressure identity" + at, f.identities.pressure, sim_tol));
        out.metrics["analytic"] = identity_json(a);
        out.metrics["simulated"] = identity_json(f.identities);
        out.runs.push_back(hydro_record("hydro-" + tag_of(f.omega), f.run, osc.at(f.omega), p.consts, 3, ctx));
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// quantum_potential: U_q = U'_q + U''_q on a gaussian and the pointwise values.

ExperimentJob prepare_quantum_potential(const Config& cfg) {
    (void)read_system(cfg, "scalar", {"scalar"});
    const PhysicalConstants c = read_constants(cfg);
    if (c.masses.size() != 1) cfg.fail("constants.mass", "expected a single mass");
    const std::vector<double> pts = positive_list(cfg, "decomposition.points", {129, 257, 513});
    std::vector<std::size_t> points;
    for (double v : pts) {
        if (v != std::floor(v) || v < 9 || v > 8193 || static_cast<std::size_t>(v) % 2 == 0)
            cfg.fail("decomposition.points", "expected odd integers in [9, 8193], got " + fmt(v));
        points.push_back(static_cast<std::size_t>(v));
    }
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i] != 2 * points[i - 1] - 1) cfg.fail("decomposition.points", "each grid must halve the previous spacing");
    const double half = positive(cfg, "decomposition.half_width", 2.0);
    const double s = positive(cfg, "decomposition.width", 1.0);
    const std::size_t check_points = count(cfg, "decomposition.check_points", 257, 9, 8193);
    bool found = false;
    for (auto n : points) found = found || n == check_points;
    if (!found) cfg.fail("decomposition.check_points", "must be one of decomposition.points");
    const std::vector<double> probe = cfg.numbers("pointwise.x", {0.0, 1.0});
    {
        const double dx = 2 * half / static_cast<double>(check_points - 1);
        for (double x : probe) {
            const double k = (x + half) / dx;
            if (std::abs(k - std::round(k)) > 1e-9 || k < 0 || k > static_cast<double>(check_points - 1))
                cfg.fail("pointwise.x", "x = " + fmt(x) + " is not a node of the check grid");
        }
    }
    const double res_tol = tolerance(cfg, "max_residual", 1e-6);
    const double ratio_min = positive(cfg, "tolerances.min_ratio", 12.0);
    const double point_tol = tolerance(cfg, "pointwise", 1e-6);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;
        const double h2m = c.hbar * c.hbar / c.mass(0);
        auto density = [&](const Grid& g) {
            return ScalarField::sample(g, [&](const Point& x) {
                return std::exp(-0.5 * x[0] * x[0] / (s * s)) / (std::sqrt(2 * pi) * s);
            });
        };
        std::vector<double> residuals;
        std::vector<std::vector<double>> rows;
        for (std::size_t n : points) {
            const Grid g = Grid::line(n, 2 * half, Boundary::Dirichlet);
            const ScalarField rho = density(g);
            const ScalarField uq = quantum_potential(rho, c, 0.0);
            const auto parts = quantum_potential_parts(rho, c, 0.0);
            const double r = max_abs(uq, parts.prime + parts.dprime) / max_abs(uq);
            residuals.push_back(r);
            rows.push_back({static_cast<double>(n), g.dx(0), r});
            if (n == check_points) {
                out.checks.push_back(Check::at_most("decomposition residual at " + std::to_string(n) + " points", r, res_tol));
                json pw = json::array();
                for (double x : probe) {
                    const auto i = static_cast<std::size_t>(std::lround((x + half) / g.dx(0)));
                    // Exact forms for the gaussian of width s.
                    const double up = h2m / 8.0 * x * x / (s * s * s * s);
                    const double upp = -h2m / 4.0 * (x * x / (s * s * s * s) - 1.0 / (s * s));
                    const double eq = uq[i] - (up + upp), ep = parts.prime[i] - up, epp = parts.dprime[i] - upp;
                    pw.push_back({{"x", x}, {"U_q", uq[i]}, {"U_q_prime", parts.prime[i]}, {"U_q_dprime", parts.dprime[i]}});
                    out.checks.push_back(Check::at_most("U_q(" + fmt(x) + ") against " + fmt(up + upp), std::abs(eq), point_tol));
                    out.checks.push_back(Check::at_most("U'_q(" + fmt(x) + ") against " + fmt(up), std::abs(ep), point_tol));
                    out.checks.push_back(Check::at_most("U''_q(" + fmt(x) + ") against " + fmt(upp), std::abs(epp), point_tol));
                }
                out.metrics["pointwise"] = pw;
            }
        }
        std::vector<double> ratios;
        for (std::size_t i = 1; i < residuals.size(); ++i) {
            ratios.push_back(residuals[i - 1] / residuals[i]);
            out.checks.push_back(Check::at_least("residual ratio " + std::to_string(points[i - 1]) + " -> " +
                                                     std::to_string(points[i]) + " points",
                                                 ratios.back(), ratio_min));
        }
        out.files.push_back(write_csv(ctx, "decomposition.csv", "points,dx,residual", rows));
        out.metrics["points"] = points;
        out.metrics["residuals"] = residuals;
        out.metrics["ratios"] = ratios;
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// ponderomotive: the time-averaged potential of the oscillating density force is U'_q.

ExperimentJob prepare_ponderomotive(const Config& cfg) {
    (void)read_system(cfg, "scalar", {"scalar"});
    const PhysicalConstants c = read_constants(cfg);
    const std::size_t densities = count(cfg, "ponderomotive.densities", 8, 1, 1000);
    const std::vector<double> omegas = positive_list(cfg, "ponderomotive.omega", {10.0, 100.0, 1000.0});
    const double tol = tolerance(cfg, "max_difference", 1e-10);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;
        std::mt19937_64 rng(ctx.seed);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        double worst = 0.0;
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < densities; ++k) {
            const bool two_d = k % 2 == 1;
            const Grid g = two_d ? Grid({Axis::centered(33, 6.0, Boundary::Dirichlet), Axis::centered(32, 6.0, Boundary::Periodic)})
                                 : Grid::line(101, 8.0, Boundary::Dirichlet);
            PhysicalConstants ck = c;
            if (two_d && ck.masses.size() == 1) ck.masses = {c.masses[0], 2.0 * c.masses[0]};
            if (!two_d) ck.masses = {c.masses[0]};
            const double a = u(rng), b = u(rng), q = 1.0 + u(rng), s = 1.0 + u(rng);
            const ScalarField rho = ScalarField::sample(g, [&](const Point& x) {
                double e = -0.5 * x[0] * x[0] / (s * s) + a * std::sin(q * x[0]) + b * x[0];
                if (two_d) e += 0.3 * std::cos(2 * pi * x[1] / 6.0 + a);
                return std::exp(e);
            });
            for (double w : omegas) {
                const ScalarField up = ponderomotive_potential(density_oscillating_force(rho, w, ck, 1e-300), ck);
                const double d = max_abs(up, quantum_potential_parts(rho, ck, 1e-300).prime);
                worst = std::max(worst, d);
                rows.push_back({static_cast<double>(k), static_cast<double>(g.dims()), w, d});
            }
        }
        out.checks.push_back(Check::at_most("max |U_pond - U'_q| over all densities", worst, tol));
        out.files.push_back(write_csv(ctx, "ponderomotive.csv", "density,dims,omega,max_difference", rows));
        out.metrics["max_difference"] = worst;
        out.metrics["densities"] = densities;
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// stationarity: the harmonic ground state under the oscillating solver and the reference.

ExperimentJob prepare_stationarity(const Config& cfg) {
    (void)read_system(cfg, "scalar", {"scalar"});
    const PairedSystem s = read_paired(cfg, "scalar");
    if (s.potential.kind != PotentialSpec::Kind::Harmonic) cfg.fail("potential.kind", "stationarity needs a harmonic potential");
    if (s.initial.state != "ground_state") cfg.fail("initial.state", "stationarity needs the ground state");
    const OscillationSpec osc = read_oscillation(cfg, {200.0});
    if (osc.omegas.size() != 1) cfg.fail("oscillation.omega", "expected a single value");
    const std::size_t slow_periods = count(cfg, "run.slow_periods", 10, 1, 1000);
    const double slow_T = 2 * pi / s.potential.omega0;
    const double hydro_tol = tolerance(cfg, "hydro_drift", 0.01);
    const double ref_tol = tolerance(cfg, "reference_drift", 1e-6);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;
        const OscillationConfig o = osc.at(osc.omegas[0]);
        RunOptions opts;
        opts.duration = slow_T * static_cast<double>(slow_periods);
        const RunResult r = run_from_wavefunction(s.psi_hydro(), 0.0, s.model(), o, opts);
        if (!r.completed) throw Error("hydro run stopped after " + std::to_string(r.periods.size()) + " periods: " + r.error);
        const ScalarField& first = r.periods.front().rho_avg;
        double hydro_drift = 0.0;
        std::vector<std::vector<double>> rows;
        std::vector<double> per_slow(slow_periods, 0.0);
        for (const auto& p : r.periods) {
            const double d = max_abs(p.rho_avg, first) / max_abs(first);
            hydro_drift = std::max(hydro_drift, d);
            const auto k = std::min(slow_periods - 1, static_cast<std::size_t>(p.t_center / slow_T));
            per_slow[k] = std::max(per_slow[k], d);
        }

        Wavefunction psi = s.psi_reference();
        const ScalarField rho0 = density_of(psi);
        const auto steps = static_cast<std::size_t>(std::ceil(slow_T / s.reference_dt - 1e-9));
        RunRecord ref;
        ref.name = "reference";
        ref.kind = "schrodinger";
        ref.grid = s.reference;
        ref.info = {{"dt", slow_T / static_cast<double>(steps)}};
        ref.series.emplace_back(0.0, ctx.snapshot(ref.name, 0, rho0, 0.0));
        double ref_drift = 0.0;
        for (std::size_t k = 0; k < slow_periods; ++k) {
            psi = s.evolve_reference(psi, slow_T / static_cast<double>(steps), steps);
            const ScalarField rho = density_of(psi);
            const double d = max_abs(rho, rho0) / max_abs(rho0);
            ref_drift = std::max(ref_drift, d);
            rows.push_back({static_cast<double>(k + 1), slow_T * static_cast<double>(k + 1), per_slow[k], d});
            ref.series.emplace_back(slow_T * static_cast<double>(k + 1),
                                    ctx.snapshot(ref.name, k + 1, rho, slow_T * static_cast<double>(k + 1)));
        }
        out.runs.push_back(hydro_record("hydro-" + tag_of(o.omega), r, o, s.consts, slow_periods + 1, ctx));
        out.runs.push_back(std::move(ref));
        out.files.push_back(write_csv(ctx, "drift.csv", "slow_period,t,hydro_drift,reference_drift", rows));
        out.checks.push_back(Check::at_most("hydro averaged-density Linf drift", hydro_drift, hydro_tol));
        out.checks.push_back(Check::at_most("reference density Linf drift", ref_drift, ref_tol));
        out.metrics["hydro_drift"] = hydro_drift;
        out.metrics["reference_drift"] = ref_drift;
        out.metrics["final_slow_energy"] = r.periods.back().slow_energy;
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// em_reduction: A = 0 against the scalar pipeline, the uniform-flow solution, and the paired run.

ExperimentJob prepare_em_reduction(const Config& cfg) {
    (void)read_system(cfg, "em", {"em"});
    const PairedSystem s = read_paired(cfg, "em");
    const OscillationSpec osc = read_oscillation(cfg, {200.0});
    if (osc.omegas.size() != 1) cfg.fail("oscillation.omega", "expected a single value");
    const double duration = duration_for(cfg, osc.omegas, 1.0);
    const std::size_t snapshots = count(cfg, "run.snapshots", 4, 1, 64);
    const double bit_duration = positive(cfg, "bitwise.duration", 0.2);
    if (bit_duration < 2 * pi / osc.omegas[0]) cfg.fail("bitwise.duration", "shorter than one fast period");

    PhysicalConstants fc;
    fc.charge = cfg.number("uniform_flow.charge", 2.0);
    fc.light_speed = positive(cfg, "uniform_flow.light_speed", 4.0);
    fc.masses = {positive(cfg, "uniform_flow.mass", 1.5)};
    const double A0 = cfg.number("uniform_flow.vector_potential", 0.9);
    const double flow_omega = positive(cfg, "uniform_flow.omega", 80.0);
    const std::size_t flow_points = count(cfg, "uniform_flow.points", 32, 8, 512);
    const std::size_t flow_steps = count(cfg, "uniform_flow.steps", 200, 1, 1000000);
    const ScalarField phi = potential_on(cfg, "potential", s.potential, s.hydro, s.consts);
    const double band = tolerance(cfg, "max_error", 2e-2);
    const double v_tol = tolerance(cfg, "velocity", 1e-12);
    const double flow_tol = tolerance(cfg, "translation", 1e-8);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;
        const OscillationConfig o = osc.at(osc.omegas[0]);

        // A = 0 through the EM path against q phi through the scalar path.
        RunOptions opts;
        opts.duration = bit_duration;
        const RunResult a = run_from_wavefunction(s.psi_hydro(), 0.0, HydroModel::scalar(phi * s.consts.charge, s.consts), o, opts);
        const RunResult b = run_from_wavefunction(s.psi_hydro(), 0.0,
                                                  HydroModel::em(EMPotentialSpec{VectorField(s.hydro), phi}, s.consts), o, opts);
        if (!a.completed || !b.completed) throw Error("A = 0 comparison run stopped: " + a.error + b.error);
        double bit = std::max(max_abs(a.final.log_rho, b.final.log_rho), max_abs(a.final.S, b.final.S));
        bool identical = a.final.log_rho.values() == b.final.log_rho.values() && a.final.S.values() == b.final.S.values() &&
                         a.periods.size() == b.periods.size();
        for (std::size_t k = 0; identical && k < a.periods.size(); ++k) {
            identical = a.periods[k].rho_avg.values() == b.periods[k].rho_avg.values();
            bit = std::max(bit, max_abs(a.periods[k].rho_avg, b.periods[k].rho_avg));
        }
        out.checks.push_back(Check::holds("A = 0 reproduces the scalar pipeline bit for bit", identical));
        out.metrics["a_zero_max_difference"] = bit;

        // Uniform density and a rigidly translated profile under constant A.
        const double L = 2 * pi;
        const Grid g = Grid::line(flow_points, L, Boundary::Periodic);
        const EMPotentialSpec em = EMPotentialSpec::uniform(g, {A0}, ScalarField(g, 0.0));
        const HydroModel m = HydroModel::em(em, fc);
        const double v = -fc.charge * A0 / (fc.masses[0] * fc.light_speed);
        OscillationConfig fo;
        fo.omega = flow_omega;
        fo.seed_fast = false;
        HydroState u = HydroState::from_density(ScalarField(g, 1.0 / L), ScalarField(g, 0.0), 0.0, 1e-12);
        for (std::size_t i = 0; i < flow_steps; ++i) u = advance(u, m, fo, fo.dt());
        const double v_err = max_abs(u.velocity(fc, &em.A).components[0], ScalarField(g, v));
        fo.oscillating_term = false;
        auto profile = [&](double shift) {
            return ScalarField::sample(g, [&](const Point& p) { return std::exp(0.4 * std::cos(p[0] - shift)); });
        };
        HydroState d = HydroState::from_density(profile(0.0), ScalarField(g, 0.0), 0.0, 1e-12);
        for (std::size_t i = 0; i < flow_steps; ++i) d = advance(d, m, fo, fo.dt());
        const double flow_err = max_abs(d.rho_r(), profile(v * d.t)) / max_abs(profile(0.0));
        out.checks.push_back(Check::at_most("uniform flow velocity against -qA/mc", v_err, v_tol));
        out.checks.push_back(Check::at_most("rigid translation of a profile under constant A", flow_err, flow_tol));
        out.metrics["uniform_flow"] = {{"velocity", v}, {"velocity_error", v_err}, {"translation_error", flow_err}};

        const PairedRun r = run_paired(s, o, duration, snapshots);
        for (auto& rec : record_paired(r, s, tag_of(o.omega), ctx)) out.runs.push_back(std::move(rec));
        out.checks.push_back(Check::at_most("EM hydro against EM reference at omega " + fmt(o.omega), r.final_error, band));
        out.metrics["paired_error"] = r.final_error;
        out.metrics["paired_errors"] = r.errors;
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// many_body: factorization of a non-interacting pair and the interacting pair against the
// configuration-space reference.

ExperimentJob prepare_many_body(const Config& cfg) {
    (void)read_system(cfg, "many_body", {"many_body"});
    const PairedSystem s = read_paired(cfg, "many_body");
    const OscillationSpec osc = read_oscillation(cfg, {200.0});
    if (osc.omegas.size() != 1) cfg.fail("oscillation.omega", "expected a single value");
    const double duration = duration_for(cfg, osc.omegas, 1.0);
    const std::size_t snapshots = count(cfg, "run.snapshots", 4, 1, 64);

    const Grid fg = read_grid(cfg, "factorized", Boundary::Dirichlet);
    if (fg.dims() != 2) cfg.fail("factorized.dims", "needs a 2-axis configuration grid");
    const std::vector<double> fmass = positive_list(cfg, "factorized.mass", {1.0, 2.0});
    if (fmass.size() != 2) cfg.fail("factorized.mass", "expected two masses");
    const std::vector<double> fcenter = cfg.numbers("factorized.center", {0.5, -0.5});
    if (fcenter.size() != 2) cfg.fail("factorized.center", "expected two coordinates");
    const double fduration = positive(cfg, "factorized.duration", 0.5);
    if (fduration < 2 * pi / osc.omegas[0]) cfg.fail("factorized.duration", "shorter than one fast period");
    const double l1_tol = tolerance(cfg, "factorization", 1e-3);
    const double band = tolerance(cfg, "max_error", 2e-2);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;
        const OscillationConfig o = osc.at(osc.omegas[0]);

        PhysicalConstants fc = s.consts;
        fc.masses = fmass;
        RunOptions opts;
        opts.duration = fduration;
        const RunResult f = run_from_wavefunction(gaussian_packet(fg, fcenter, {1.0, 1.0}, {0.0, 0.0}), 0.0,
                                                  HydroModel::many(ScalarField(fg, 0.0), fc), o, opts);
        if (!f.completed) throw Error("non-interacting run stopped: " + f.error);
        const ScalarField& joint = f.periods.back().rho_avg;
        const std::size_t n0 = fg.points(0), n1 = fg.points(1);
        const ScalarField w0 = quadrature_weights(Grid({fg.axis(0)})), w1 = quadrature_weights(Grid({fg.axis(1)}));
        std::vector<double> m0(n0, 0.0), m1(n1, 0.0);
        for (std::size_t i = 0; i < n0; ++i)
            for (std::size_t j = 0; j < n1; ++j) {
                m0[i] += w1[j] * joint[i * n1 + j];
                m1[j] += w0[i] * joint[i * n1 + j];
            }
        const double total = integrate(joint);
        ScalarField product(fg);
        for (std::size_t i = 0; i < n0; ++i)
            for (std::size_t j = 0; j < n1; ++j) product[i * n1 + j] = m0[i] * m1[j] / total;
        const double l1 = l1_distance(joint, product);
        out.checks.push_back(Check::at_most("joint density against the product of marginals (L1)", l1, l1_tol));
        out.metrics["factorization_l1"] = l1;
        out.metrics["max_curl"] = f.diag.max_curl;
        out.runs.push_back(hydro_record("hydro-noninteracting", f, o, fc, snapshots, ctx));

        const PairedRun r = run_paired(s, o, duration, snapshots);
        for (auto& rec : record_paired(r, s, tag_of(o.omega), ctx)) out.runs.push_back(std::move(rec));
        out.checks.push_back(Check::at_most("interacting hydro against the reference at omega " + fmt(o.omega), r.final_error, band));
        out.metrics["paired_error"] = r.final_error;
        out.metrics["paired_errors"] = r.errors;
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// pinball: zero-source Liouville transport, the kernel property, the moment check and spreading.

struct PinballSources {
    double n = 0.0, epsilon = 0.0, omega = 1.0, tau = 0.0, dt = 0.0;
};

PinballSources read_sources(const Config& cfg, const std::string& sec, double n, double eps, double omega, double tau,
                            double dt) {
    PinballSources p;
    p.n = positive(cfg, sec + ".density", n);
    p.epsilon = positive(cfg, sec + ".epsilon", eps);
    p.omega = positive(cfg, sec + ".omega", omega);
    p.tau = cfg.number(sec + ".tau", tau);
    if (p.tau < 0) cfg.fail(sec + ".tau", "must not be negative");
    p.dt = positive(cfg, sec + ".dt", dt);
    if (p.dt > 2 * pi / (16 * p.omega)) cfg.fail(sec + ".dt", "must resolve the source oscillation (at most T/16)");
    return p;
}

double ensemble_variance(const EnsembleState& e) {
    double s = 0.0, s2 = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < e.size(); ++i)
        if (e.alive[i]) {
            s += e.r[i][0];
            s2 += e.r[i][0] * e.r[i][0];
            ++k;
        }
    const double mean = s / static_cast<double>(k);
    return s2 / static_cast<double>(k) - mean * mean;
}

ExperimentJob prepare_pinball(const Config& cfg) {
    (void)read_system(cfg, "pinball", {"pinball"});
    const PhysicalConstants c = read_constants(cfg);
    if (c.masses.size() != 1) cfg.fail("constants.mass", "expected a single mass");

    const std::size_t lv_count = count(cfg, "liouville.count", 10000, 100, 10000000);
    const Grid lv_grid = read_grid(cfg, "liouville", Boundary::Dirichlet);
    const double lv_v0 = cfg.number("liouville.velocity_mean", 0.5);
    const double lv_vs = positive(cfg, "liouville.velocity_std", 0.3);
    const double lv_T = positive(cfg, "liouville.duration", 2.0);
    const double lv_dt = positive(cfg, "liouville.dt", 0.005);
    const double lv_h = positive(cfg, "liouville.bandwidth", 0.2);

    const std::vector<double> k_eps = positive_list(cfg, "kernel.epsilon", {0.2, 0.1, 0.05});
    for (std::size_t i = 1; i < k_eps.size(); ++i)
        if (!(k_eps[i] < k_eps[i - 1])) cfg.fail("kernel.epsilon", "must be strictly decreasing");
    if (k_eps.size() < 2) cfg.fail("kernel.epsilon", "needs at least two values");
    const double k_r = cfg.number("kernel.source", 0.8);

    const Grid mg = read_grid(cfg, "moments", Boundary::Dirichlet);
    const PinballSources ms = read_sources(cfg, "moments", 70.0, 0.004, 20.0, 0.5, 2e-5);
    const std::size_t m_count = count(cfg, "moments.count", 10000, 100, 10000000);
    const std::size_t m_periods = count(cfg, "moments.periods", 2, 1, 1000);
    const std::size_t m_records = count(cfg, "moments.records_per_period", 8, 3, 1000);
    const double m_h = positive(cfg, "moments.bandwidth", 0.15);
    const double m_omega0 = positive(cfg, "moments.omega0", 1.0);

    const Grid sg = read_grid(cfg, "spreading", Boundary::Dirichlet);
    const PinballSources ss = read_sources(cfg, "spreading", 70.0, 0.004, 20.0, 0.0, 2e-5);
    const std::size_t s_count = count(cfg, "spreading.count", 2000, 100, 10000000);
    const double s_T = positive(cfg, "spreading.duration", 0.5);
    const double s_vs = cfg.number("spreading.velocity_std", 0.0);
    if (s_vs < 0) cfg.fail("spreading.velocity_std", "must not be negative");

    const double lv_tol = tolerance(cfg, "liouville_l1", 0.05);
    const double k_ratio = positive(cfg, "tolerances.kernel_ratio", 2.0);
    const double p_tol = tolerance(cfg, "pressure_mismatch", 0.2);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;

        // (a) No sources: free streaming of a gaussian ensemble.
        GaussianEnsembleSpec lv;
        lv.count = lv_count;
        lv.velocity_mean = {lv_v0};
        lv.velocity_std = {lv_vs};
        lv.seed = ctx.seed;
        const DeltaSourceField none = sample_sources(lv_grid, 0.0, 0.0, ctx.seed);
        const auto lv_series = evolve_ensemble(sample_ensemble(lv), none, ScalarField(lv_grid, 0.0),
                                               {lv_dt, lv_T, static_cast<std::size_t>(std::lround(lv_T / lv_dt)), ctx.workers}, c);
        const EnsembleState& lv_end = lv_series.back();
        const ScalarField lv_rho = ensemble_density(lv_end, lv_grid, lv_h).rho;
        const double t = lv_end.t, mean = lv_v0 * t, var = 1.0 + lv_vs * lv_vs * t * t + lv_h * lv_h;
        const ScalarField exact = ScalarField::sample(lv_grid, [&](const Point& p) {
            return std::exp(-0.5 * (p[0] - mean) * (p[0] - mean) / var) / std::sqrt(2 * pi * var);
        });
        const double lv_l1 = l1_distance(lv_rho, exact);
        out.checks.push_back(Check::at_most("zero-source ensemble against Liouville transport (L1)", lv_l1, lv_tol));
        RunRecord lrec;
        lrec.name = "liouville";
        lrec.kind = "pinball_ensemble";
        lrec.grid = lv_grid;
        lrec.info = {{"count", lv_count}, {"bandwidth", lv_h}, {"l1", lv_l1}};
        lrec.series.emplace_back(0.0, ctx.snapshot(lrec.name, 0, ensemble_density(lv_series.front(), lv_grid, lv_h).rho, 0.0));
        lrec.series.emplace_back(t, ctx.snapshot(lrec.name, 1, lv_rho, t));
        out.runs.push_back(std::move(lrec));

        // (b) int P grad G_eps(r - r_k) dr -> -grad P(r_k).
        const Grid kg = Grid::line(4001, 10.0, Boundary::Dirichlet);
        const ScalarField P = ScalarField::sample(kg, [](const Point& p) {
            return std::exp(-0.5 * (p[0] - 0.3) * (p[0] - 0.3)) / std::sqrt(2 * pi) * (1.0 + 0.3 * std::sin(p[0]));
        });
        const double g0 = std::exp(-0.5 * (k_r - 0.3) * (k_r - 0.3)) / std::sqrt(2 * pi);
        const double dP = g0 * (-(k_r - 0.3) * (1.0 + 0.3 * std::sin(k_r)) + 0.3 * std::cos(k_r));
        std::vector<double> k_err;
        std::vector<std::vector<double>> k_rows;
        for (double eps : k_eps) {
            k_err.push_back(std::abs(kernel_gradient_integral(P, {k_r, 0, 0}, eps)[0] + dP));
            k_rows.push_back({eps, k_err.back()});
        }
        for (std::size_t i = 1; i < k_err.size(); ++i)
            out.checks.push_back(Check::at_least("kernel error ratio eps " + fmt(k_eps[i - 1]) + " -> " + fmt(k_eps[i]),
                                                 k_err[i - 1] / k_err[i], k_ratio));
        out.files.push_back(write_csv(ctx, "kernel.csv", "epsilon,error", k_rows));

        // (c) Thermal harmonic ensemble among oscillating sources.
        const DeltaSourceField msrc = sample_sources(mg, ms.n, ms.epsilon, ctx.seed + 2, ms.tau, c.hbar, ms.omega);
        const ScalarField U = PotentialSpec::harmonic(m_omega0).evaluate(mg, c);
        GaussianEnsembleSpec me;
        me.count = m_count;
        const double sd = ms.tau > 0 ? std::sqrt(ms.tau) : 1.0;
        me.position_std = {sd / m_omega0};
        me.velocity_std = {ms.tau > 0 ? sd : 0.0};
        me.seed = ctx.seed + 1;
        const double fastT = 2 * pi / ms.omega;
        const auto every = static_cast<std::size_t>(std::max(1L, std::lround(fastT / m_records / ms.dt)));
        const auto m_series = evolve_ensemble(sample_ensemble(me), msrc, U,
                                              {ms.dt, fastT * static_cast<double>(m_periods), every, ctx.workers}, c);
        const MomentReport mr = moment_check(m_series, U, msrc, mg, m_h, c, 20, ctx.seed + 3);
        out.checks.push_back(Check::at_most("fitted pressure coefficient against the configured law", mr.pressure_mismatch, p_tol));
        std::vector<std::vector<double>> m_rows;
        for (std::size_t j = 0; j < mr.t.size(); ++j)
            m_rows.push_back({mr.t[j], mr.fitted_pressure[j], mr.configured_pressure[j], mr.continuity_norm[j],
                              mr.continuity_noise[j], mr.momentum_norm[j], mr.momentum_noise[j]});
        out.files.push_back(write_csv(ctx, "moments.csv",
                                      "t,fitted_pressure,configured_pressure,continuity,continuity_noise,momentum,momentum_noise",
                                      m_rows));
        const auto mean_v2 = [](const EnsembleState& e) {
            double s = 0.0;
            std::size_t k = 0;
            for (std::size_t i = 0; i < e.size(); ++i)
                if (e.alive[i]) {
                    s += e.v[i][0] * e.v[i][0];
                    ++k;
                }
            return s / static_cast<double>(k);
        };
        out.metrics["moments"] = {{"sources", msrc.positions.size()},
                                  {"statistically_dense", msrc.statistically_dense},
                                  {"pressure_mismatch", mr.pressure_mismatch},
                                  {"continuity_pass", mr.continuity_pass},
                                  {"momentum_pass", mr.momentum_pass},
                                  {"mean_v2_start", mean_v2(m_series.front())},
                                  {"mean_v2_end", mean_v2(m_series.back())}};

        // (d) Spreading of a packet at rest among the sources against force-free streaming.
        const DeltaSourceField ssrc = sample_sources(sg, ss.n, ss.epsilon, ctx.seed + 4, ss.tau, c.hbar, ss.omega);
        GaussianEnsembleSpec se;
        se.count = s_count;
        se.velocity_std = {s_vs};
        se.seed = ctx.seed + 5;
        const auto s_steps = static_cast<std::size_t>(std::lround(s_T / ss.dt));
        const auto pin = evolve_ensemble(sample_ensemble(se), ssrc, ScalarField(sg, 0.0), {ss.dt, s_T, s_steps, ctx.workers}, c);
        const DeltaSourceField no_src = sample_sources(sg, 0.0, 0.0, ctx.seed + 4);
        const auto fre = evolve_ensemble(sample_ensemble(se), no_src, ScalarField(sg, 0.0), {ss.dt, s_T, s_steps, ctx.workers}, c);
        const double g_pin = ensemble_variance(pin.back()) - ensemble_variance(pin.front());
        const double g_free = ensemble_variance(fre.back()) - ensemble_variance(fre.front());
        const double tq = pin.back().t;
        const double g_quantum = c.hbar * c.hbar * tq * tq / (4 * c.mass(0) * c.mass(0));
        out.checks.push_back(Check::holds("pinball variance grows faster than force-free", g_pin > g_free));
        out.checks.push_back(Check::holds("pinball variance grows", g_pin > 0.0));
        out.metrics["spreading"] = {{"pinball_growth", g_pin}, {"free_growth", g_free}, {"quantum_growth", g_quantum}};
        out.metrics["liouville_l1"] = lv_l1;
        out.metrics["kernel_errors"] = k_err;
        return out;
    };
}

// ---------------------------------------------------------------------------------------------
// action: residuals of the action functional on Schrodinger histories, and the boundary term.

struct History {
    FieldSeries rho, S;
};

// Samples t0, t0 + h, ... (n samples) of the reference evolution restricted to `w`, with S
// unwrapped in time about the density maximum.
History schrodinger_history(const PairedSystem& s, const Grid& w, double t0, double h, std::size_t n) {
    Wavefunction psi = s.psi_reference();
    const auto sub = [&](double span) { return static_cast<std::size_t>(std::max(1.0, std::ceil(span / s.reference_dt - 1e-9))); };
    if (t0 > 0) {
        const std::size_t k = sub(t0);
        psi = s.evolve_reference(psi, t0 / static_cast<double>(k), k);
    }
    History out;
    const std::size_t k = sub(h);
    for (std::size_t j = 0; j < n; ++j) {
        if (j > 0) psi = s.evolve_reference(psi, h / static_cast<double>(k), k);
        const MadelungFields mf = madelung_decompose(psi, default_rho_floor(density_of(psi)), s.consts.hbar);
        out.rho.push(t0 + static_cast<double>(j) * h, restrict_to(mf.rho, w));
        out.S.push(t0 + static_cast<double>(j) * h, restrict_to(mf.S, w));
    }
    std::size_t anchor = 0;
    const ScalarField& mid = out.rho.f[n / 2];
    for (std::size_t i = 0; i < w.size(); ++i)
        if (mid[i] > mid[anchor]) anchor = i;
    unwrap_action_in_time(out.S, s.consts.hbar, anchor);
    return out;
}

ExperimentJob prepare_action(const Config& cfg) {
    (void)read_system(cfg, "scalar", {"scalar"});
    PairedSystem s;
    s.consts = read_constants(cfg);
    s.reference = read_grid(cfg, "reference", Boundary::Periodic);
    if (!s.reference.all_periodic()) cfg.fail("reference.boundary", "the split-step reference needs a periodic grid");
    if (s.reference.dims() != 1) cfg.fail("reference.dims", "the action experiment is one-dimensional");
    s.reference_dt = positive(cfg, "reference.dt", 1e-3);
    s.potential = read_potential(cfg, "potential");
    const ScalarField U_ref = potential_on(cfg, "potential", s.potential, s.reference, s.consts);
    s.initial = read_initial(cfg, "initial", 1);
    const double half = positive(cfg, "action.half_width", 7.0);
    const Axis& ax = s.reference.axis(0);
    const double first = (-half - ax.origin) / ax.spacing();
    if (std::abs(first - std::round(first)) > 1e-9 || first < 1)
        cfg.fail("action.half_width", "the window edges must be interior reference nodes");
    const auto i0 = static_cast<std::size_t>(std::lround(first));
    const auto cnt = static_cast<std::size_t>(std::lround(2 * half / ax.spacing())) + 1;
    if (i0 + cnt >= ax.points) cfg.fail("action.half_width", "the window must fit inside the reference grid");
    const Grid w = window(s.reference, {i0}, {cnt});
    const double t_mid = positive(cfg, "action.t_mid", 0.5);
    const std::vector<double> hs = positive_list(cfg, "action.spacing", {0.04, 0.02, 0.01});
    for (std::size_t i = 1; i < hs.size(); ++i)
        if (std::abs(hs[i] - 0.5 * hs[i - 1]) > 1e-12 * hs[i - 1]) cfg.fail("action.spacing", "each spacing must halve the previous one");
    if (hs.size() < 2) cfg.fail("action.spacing", "needs at least two values");
    if (hs[0] >= t_mid) cfg.fail("action.spacing", "must be smaller than action.t_mid");
    const double b_t0 = cfg.number("boundary.t_start", 0.1);
    const double b_h = positive(cfg, "boundary.spacing", 0.05);
    const std::size_t b_n = count(cfg, "boundary.samples", 19, 3, 100000);
    if (b_t0 < 0) cfg.fail("boundary.t_start", "must not be negative");
    const double r_lo = positive(cfg, "tolerances.ratio_min", 3.5);
    const double r_hi = positive(cfg, "tolerances.ratio_max", 4.5);
    const double hj_max = tolerance(cfg, "hj_residual", 1e-3);
    const double b_tol = tolerance(cfg, "boundary", 1e-8);

    return [=](const ExperimentContext& ctx) {
        ExperimentOutput out;
        const ScalarField U = restrict_to(U_ref, w);
        std::vector<History> hist(hs.size());
        parallel_for(hs.size(), ctx.workers, [&](std::size_t i) { hist[i] = schrodinger_history(s, w, t_mid - hs[i], hs[i], 3); });
        std::vector<double> hj, cont, classical;
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < hs.size(); ++i) {
            const ActionReport q = quantum_action_residual(hist[i].rho, hist[i].S, U, s.consts, 1e-300);
            const ActionReport cl = classical_action_residual(hist[i].rho, hist[i].S, U, s.consts);
            hj.push_back(q.hj_residual_norm);
            cont.push_back(q.continuity_residual_norm);
            classical.push_back(cl.hj_residual_norm);
            rows.push_back({hs[i], q.hj_residual_norm, q.continuity_residual_norm, cl.hj_residual_norm});
        }
        out.checks.push_back(Check::at_most("quantum HJ residual at the coarsest spacing", hj.front(), hj_max));
        for (std::size_t i = 1; i < hs.size(); ++i) {
            const std::string step = " " + fmt(hs[i - 1]) + " -> " + fmt(hs[i]);
            out.checks.push_back(Check::within("HJ residual ratio" + step, hj[i - 1] / hj[i], r_lo, r_hi));
            out.checks.push_back(Check::within("continuity residual ratio" + step, cont[i - 1] / cont[i], r_lo, r_hi));
        }
        out.files.push_back(write_csv(ctx, "action_residuals.csv", "spacing,hj,continuity,classical_hj", rows));

        const History b = schrodinger_history(s, w, b_t0, b_h, b_n);
        const ActionReport br = quantum_action_residual(b.rho, b.S, U, s.consts, 1e-300);
        out.checks.push_back(Check::at_most("boundary term over the window", std::abs(br.boundary_term), b_tol));
        RunRecord rec;
        rec.name = "reference";
        rec.kind = "schrodinger";
        rec.grid = w;
        rec.info = {{"window", w.describe()}, {"grid", s.reference.describe()}};
        for (std::size_t j : spread_indices(b.rho.size(), 5))
            rec.series.emplace_back(b.rho.t[j], ctx.snapshot(rec.name, rec.series.size(), b.rho.f[j], b.rho.t[j]));
        out.runs.push_back(std::move(rec));
        out.metrics["spacings"] = hs;
        out.metrics["hj_residuals"] = hj;
        out.metrics["continuity_residuals"] = cont;
        out.metrics["classical_hj_residuals"] = classical;
        out.metrics["boundary_term"] = br.boundary_term;
        out.metrics["action_value"] = br.action_value;
        return out;
    };
}

}  // namespace

const std::vector<ExperimentKind>& experiment_kinds() {
    static const std::vector<ExperimentKind> kinds{
        {"omega_sweep", "averaged hydro density against the Schrodinger reference over increasing omega", prepare_omega_sweep},
        {"fast_components", "extracted fast parts against their analytic forms", prepare_fast_components},
        {"identities", "averaging identities on analytic and simulated fast parts", prepare_identities},
        {"quantum_potential", "U_q = U'_q + U''_q with grid refinement and pointwise values", prepare_quantum_potential},
        {"ponderomotive", "ponderomotive potential of the density force against U'_q", prepare_ponderomotive},
        {"stationarity", "harmonic ground state under the oscillating solver and the reference", prepare_stationarity},
        {"em_reduction", "A = 0 reduction, uniform flow, EM hydro against the EM reference", prepare_em_reduction},
        {"many_body", "factorization and the interacting pair against the reference", prepare_many_body},
        {"pinball", "pinball ensembles: Liouville limit, kernel, moments, spreading", prepare_pinball},
        {"action", "action-functional residuals and boundary term on Schrodinger histories", prepare_action},
    };
    return kinds;
}

}  // namespace qh
