#include "setup.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "qh/averaging.hpp"
#include "qh/errors.hpp"
#include "qh/ops.hpp"

namespace qh::lab {

namespace {

const std::size_t max_points_per_axis = 4096;
const std::size_t max_nodes = 512 * 512;

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::filesystem::path relative_to_config(const Config& cfg, const std::string& file) {
    const std::filesystem::path p(file);
    if (p.is_absolute()) return p;
    return std::filesystem::path(cfg.origin()).parent_path() / p;
}

SnapshotMode read_mode(const Config& cfg, const std::string& key) {
    const std::string m = cfg.string(key, "text");
    if (m == "text") return SnapshotMode::Text;
    if (m == "binary") return SnapshotMode::Binary;
    cfg.fail(key, "expected text or binary, got '" + m + "'");
}

ScalarField evaluate_on(const PotentialSpec& U, const Grid& g, const PhysicalConstants& c) {
    if (U.kind == PotentialSpec::Kind::Tabulated)
        return U.table->grid() == g ? *U.table : restrict_to(*U.table, g);
    if (U.kind == PotentialSpec::Kind::Sum) {
        ScalarField out(g, 0.0);
        for (const auto& t : U.terms) out += evaluate_on(t, g, c);
        return out;
    }
    return U.evaluate(g, c);
}

std::vector<double> per_axis(const Config& cfg, const std::string& key, std::vector<double> fallback,
                             std::size_t dims) {
    std::vector<double> v = cfg.numbers(key, fallback);
    if (v.size() == 1) v.assign(dims, v[0]);
    if (v.size() != dims) cfg.fail(key, "expected 1 or " + std::to_string(dims) + " values");
    return v;
}

}  // namespace

double positive(const Config& cfg, const std::string& key) {
    const double v = cfg.number(key);
    if (!(v > 0.0) || !std::isfinite(v)) cfg.fail(key, "must be positive, got " + fmt(v));
    return v;
}

double positive(const Config& cfg, const std::string& key, double fallback) {
    return cfg.has(key) ? positive(cfg, key) : fallback;
}

std::size_t count(const Config& cfg, const std::string& key, std::size_t fallback, std::size_t lo, std::size_t hi) {
    if (!cfg.has(key)) return fallback;
    const std::int64_t v = cfg.integer(key);
    if (v < static_cast<std::int64_t>(lo) || v > static_cast<std::int64_t>(hi))
        cfg.fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + std::to_string(v));
    return static_cast<std::size_t>(v);
}

std::vector<double> positive_list(const Config& cfg, const std::string& key, const std::vector<double>& fallback) {
    const std::vector<double> v = cfg.numbers(key, fallback);
    if (v.empty()) cfg.fail(key, "needs at least one value");
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x)) cfg.fail(key, "must be positive, got " + fmt(x));
    return v;
}

PhysicalConstants read_constants(const Config& cfg) {
    PhysicalConstants c;
    c.hbar = positive(cfg, "constants.hbar", 1.0);
    c.masses = positive_list(cfg, "constants.mass", {1.0});
    c.charge = cfg.number("constants.charge", 1.0);
    c.light_speed = positive(cfg, "constants.light_speed", 1.0);
    return c;
}

Grid read_grid(const Config& cfg, const std::string& sec, Boundary fallback) {
    const std::size_t dims = count(cfg, sec + ".dims", 1, 1, 2);
    const std::string pkey = sec + ".points";
    const std::int64_t n = cfg.integer(pkey);
    if (n < 8) cfg.fail(pkey, "needs at least 8 points per axis");
    if (n > static_cast<std::int64_t>(max_points_per_axis))
        cfg.fail(pkey, "exceeds the resource limit of " + std::to_string(max_points_per_axis) + " points per axis");
    const double L = positive(cfg, sec + ".length");
    Boundary b = fallback;
    if (cfg.has(sec + ".boundary")) {
        const std::string s = cfg.string(sec + ".boundary");
        if (s == "periodic") b = Boundary::Periodic;
        else if (s == "dirichlet") b = Boundary::Dirichlet;
        else cfg.fail(sec + ".boundary", "expected periodic or dirichlet, got '" + s + "'");
    }
    std::size_t nodes = 1;
    for (std::size_t a = 0; a < dims; ++a) nodes *= static_cast<std::size_t>(n);
    if (nodes > max_nodes)
        cfg.fail(pkey, "exceeds the resource limit of " + std::to_string(max_nodes) + " grid nodes");
    return Grid(std::vector<Axis>(dims, Axis::centered(static_cast<std::size_t>(n), L, b)));
}

PotentialSpec read_potential(const Config& cfg, const std::string& sec) {
    const std::string kkey = sec + ".kind";
    const std::vector<std::string> kinds = cfg.has(kkey) ? cfg.words(kkey) : std::vector<std::string>{"free"};
    std::vector<PotentialSpec> terms;
    for (const std::string& k : kinds) {
        if (k == "free") terms.push_back(PotentialSpec::free());
        else if (k == "harmonic") terms.push_back(PotentialSpec::harmonic(positive(cfg, sec + ".omega0", 1.0)));
        else if (k == "linear") terms.push_back(PotentialSpec::linear(cfg.number(sec + ".slope")));
        else if (k == "barrier")
            terms.push_back(PotentialSpec::barrier(cfg.number(sec + ".barrier_height"), positive(cfg, sec + ".barrier_width")));
        else if (k == "gaussian_well")
            terms.push_back(PotentialSpec::gaussian_well(cfg.number(sec + ".well_depth"), positive(cfg, sec + ".well_width")));
        else if (k == "pair_gaussian")
            terms.push_back(PotentialSpec::pair_gaussian(cfg.number(sec + ".pair_strength"), positive(cfg, sec + ".pair_width")));
        else if (k == "box") terms.push_back(PotentialSpec::box());
        else if (k == "tabulated") {
            const std::string fkey = sec + ".file";
            const auto path = relative_to_config(cfg, cfg.string(fkey));
            if (!std::filesystem::exists(path)) cfg.fail(fkey, "file not found: " + path.string());
            try {
                terms.push_back(PotentialSpec::tabulated(read_snapshot(path.string(), read_mode(cfg, sec + ".format")).scalar()));
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                cfg.fail(fkey, e.what());
            }
        } else {
            cfg.fail(kkey, "unknown potential kind '" + k + "'");
        }
    }
    return terms.size() == 1 ? terms[0] : PotentialSpec::sum(terms);
}

ScalarField potential_on(const Config& cfg, const std::string& sec, const PotentialSpec& U, const Grid& g,
                         const PhysicalConstants& c) {
    try {
        return evaluate_on(U, g, c);
    } catch (const Error& e) {
        cfg.fail(sec + ".kind", std::string("cannot evaluate on grid ") + g.describe() + ": " + e.what());
    }
}

Wavefunction InitialSpec::make(const Grid& g, const PhysicalConstants& c) const {
    if (state == "gaussian") return gaussian_packet(g, center, width, momentum);
    if (state == "ground_state") return harmonic_ground_state(g, omega0, c);
    Wavefunction src = snapshot.components == 2 ? snapshot.wavefunction() : Wavefunction(snapshot.grid);
    if (snapshot.components == 1)
        for (std::size_t i = 0; i < src.size(); ++i) src[i] = std::sqrt(std::max(snapshot.values[i], 0.0));
    if (src.grid() == g) return src;
    ScalarField re(src.grid()), im(src.grid());
    for (std::size_t i = 0; i < src.size(); ++i) {
        re[i] = src[i].real();
        im[i] = src[i].imag();
    }
    const ScalarField r = restrict_to(re, g), m = restrict_to(im, g);
    Wavefunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = cplx(r[i], m[i]);
    return out;
}

InitialSpec read_initial(const Config& cfg, const std::string& sec, std::size_t dims) {
    InitialSpec s;
    s.state = cfg.string(sec + ".state", "gaussian");
    if (s.state == "gaussian") {
        s.center = per_axis(cfg, sec + ".center", {0.0}, dims);
        s.width = per_axis(cfg, sec + ".width", {1.0}, dims);
        for (double w : s.width)
            if (!(w > 0.0)) cfg.fail(sec + ".width", "must be positive");
        s.momentum = per_axis(cfg, sec + ".momentum", {0.0}, dims);
    } else if (s.state == "ground_state") {
        s.omega0 = positive(cfg, sec + ".omega0", 1.0);
    } else if (s.state == "snapshot") {
        const std::string fkey = sec + ".file";
        const auto path = relative_to_config(cfg, cfg.string(fkey));
        if (!std::filesystem::exists(path)) cfg.fail(fkey, "file not found: " + path.string());
        try {
            s.snapshot = read_snapshot(path.string(), read_mode(cfg, sec + ".format"));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            cfg.fail(fkey, e.what());
        }
        if (s.snapshot.grid.dims() != dims) cfg.fail(fkey, "snapshot has the wrong number of axes");
        s.has_snapshot = true;
    } else {
        cfg.fail(sec + ".state", "expected gaussian, ground_state or snapshot, got '" + s.state + "'");
    }
    return s;
}

OscillationConfig OscillationSpec::at(double omega) const {
    OscillationConfig o;
    o.omega = omega;
    o.substeps_per_period = substeps;
    o.seed_fast = seed_fast;
    o.rho_floor = rho_floor;
    return o;
}

OscillationSpec read_oscillation(const Config& cfg, const std::vector<double>& omega_fallback) {
    OscillationSpec s;
    s.omegas = omega_fallback.empty() ? positive_list(cfg, "oscillation.omega", {})
                                      : positive_list(cfg, "oscillation.omega", omega_fallback);
    s.substeps = count(cfg, "oscillation.substeps", 32, 16, 4096);
    s.seed_fast = cfg.boolean("oscillation.seed_fast", true);
    s.rho_floor = positive(cfg, "oscillation.rho_floor", 1e-100);
    return s;
}

HydroModel PairedSystem::model() const {
    const ScalarField U = evaluate_on(potential, hydro, consts);
    if (system == "em") return HydroModel::em(EMPotentialSpec::uniform(hydro, vector_potential, U), consts);
    if (system == "many_body") return HydroModel::many(U, consts);
    return HydroModel::scalar(U, consts);
}

Wavefunction PairedSystem::evolve_reference(const Wavefunction& psi, double dt, std::size_t steps) const {
    const ScalarField U = evaluate_on(potential, reference, consts);
    if (system == "em")
        return evolve_schrodinger_em(psi, EMPotentialSpec::uniform(reference, vector_potential, U), consts, dt, steps);
    if (system == "many_body") return evolve_schrodinger_many(psi, U, consts, dt, steps);
    return evolve_schrodinger(psi, U, consts, dt, steps);
}

PairedSystem read_paired(const Config& cfg, const std::string& system) {
    PairedSystem s;
    s.system = system;
    s.consts = read_constants(cfg);
    s.hydro = read_grid(cfg, "grid", Boundary::Dirichlet);
    s.reference = read_grid(cfg, "reference", Boundary::Periodic);
    if (s.reference.dims() != s.hydro.dims()) cfg.fail("reference.dims", "must match grid.dims");
    if (!s.reference.all_periodic()) cfg.fail("reference.boundary", "the split-step reference needs a periodic grid");
    s.reference_dt = positive(cfg, "reference.dt", 1e-3);
    if (system == "many_body" && s.hydro.dims() != 2) cfg.fail("grid.dims", "many_body needs a 2-axis configuration grid");
    if (system == "em" && s.hydro.dims() > 2) cfg.fail("grid.dims", "em supports at most 2 axes");
    if (s.consts.masses.size() != 1 && s.consts.masses.size() != s.hydro.dims())
        cfg.fail("constants.mass", "expected 1 or " + std::to_string(s.hydro.dims()) + " masses");
    try {
        (void)restrict_to(ScalarField(s.reference, 0.0), s.hydro);
    } catch (const GridMismatch&) {
        cfg.fail("grid.points", "hydro nodes must coincide with reference nodes (" + s.hydro.describe() + " inside " +
                                    s.reference.describe() + ")");
    }
    s.potential = read_potential(cfg, "potential");
    (void)potential_on(cfg, "potential", s.potential, s.hydro, s.consts);
    (void)potential_on(cfg, "potential", s.potential, s.reference, s.consts);
    if (system == "em") {
        s.vector_potential = cfg.numbers("em.vector_potential", std::vector<double>(s.hydro.dims(), 0.0));
        if (s.vector_potential.size() != s.hydro.dims())
            cfg.fail("em.vector_potential", "expected " + std::to_string(s.hydro.dims()) + " components");
    }
    s.initial = read_initial(cfg, "initial", s.hydro.dims());
    if (s.initial.has_snapshot) {
        try {
            (void)s.initial.make(s.reference, s.consts);
            (void)s.initial.make(s.hydro, s.consts);
        } catch (const GridMismatch&) {
            cfg.fail("initial.file", "snapshot grid must be the reference grid");
        }
    }
    return s;
}

std::vector<std::size_t> spread_indices(std::size_t n, std::size_t count) {
    std::vector<std::size_t> out;
    if (n == 0) return out;
    count = std::min(count, n);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t k = count == 1 ? n - 1 : (i * (n - 1) + (count - 1) / 2) / (count - 1);
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
}

PairedRun run_paired(const PairedSystem& s, const OscillationConfig& osc, double duration, std::size_t snapshots) {
    PairedRun out;
    out.omega = osc.omega;
    out.osc = osc;
    RunOptions opts;
    opts.duration = duration;
    out.hydro = run_from_wavefunction(s.psi_hydro(), 0.0, s.model(), osc, opts);
    if (!out.hydro.completed)
        throw Error("hydro run at omega " + fmt(osc.omega) + " stopped after " +
                    std::to_string(out.hydro.periods.size()) + " periods: " + out.hydro.error);
    if (out.hydro.periods.empty()) throw Error("duration is shorter than one fast period at omega " + fmt(osc.omega));
    out.snapshot_periods = spread_indices(out.hydro.periods.size(), snapshots);
    Wavefunction psi = s.psi_reference();
    double t = 0.0;
    for (std::size_t k : out.snapshot_periods) {
        const double target = out.hydro.periods[k].t_center;
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((target - t) / s.reference_dt - 1e-9)));
        psi = s.evolve_reference(psi, (target - t) / static_cast<double>(n), n);
        t = target;
        ScalarField ref = restrict_to(density_of(psi), s.hydro);
        out.errors.push_back(relative_l2(out.hydro.periods[k].rho_avg, ref));
        out.reference.push_back(std::move(ref));
    }
    out.final_error = out.errors.back();
    return out;
}

nlohmann::json hydro_info(const RunResult& r, const OscillationConfig& osc, const PhysicalConstants& c,
                          const std::vector<std::size_t>& periods) {
    nlohmann::json j;
    j["omega"] = osc.omega;
    j["substeps_per_period"] = osc.substeps_per_period;
    j["seed_fast"] = osc.seed_fast;
    j["completed"] = r.completed;
    j["steps"] = r.diag.steps;
    j["retried_steps"] = r.diag.retried_steps;
    j["max_mass_drift"] = r.diag.max_mass_drift;
    j["convective_ratio"] = r.diag.convective_ratio;
    j["stability"] = {{"parametric", r.diag.margins.parametric}, {"peclet", r.diag.margins.peclet}};
    nlohmann::json per = nlohmann::json::array();
    for (const auto& p : r.periods)
        per.push_back({{"index", p.index}, {"t_center", p.t_center}, {"mass", p.mass}, {"energy", p.slow_energy}});
    j["periods"] = per;
    nlohmann::json scales = nlohmann::json::array();
    for (std::size_t k : periods) {
        const auto& p = r.periods[k];
        const ScaleEstimates e = scale_estimates(p.rho_avg, p.S_avg, osc.omega, c);
        scales.push_back({{"period", k},
                          {"V", e.V},
                          {"L", e.L},
                          {"T", std::isfinite(e.T) ? nlohmann::json(e.T) : nlohmann::json(nullptr)},
                          {"ratio_omegaT", e.ratio_omegaT},
                          {"zeta_rho_bound", e.zeta_rho_bound}});
    }
    j["scale_estimates"] = scales;
    return j;
}

std::vector<RunRecord> record_paired(const PairedRun& r, const PairedSystem& s, const std::string& tag,
                                     const ExperimentContext& ctx) {
    RunRecord h, ref;
    h.name = "hydro-" + tag;
    h.kind = "oscillating_hydro";
    h.grid = s.hydro;
    h.info = hydro_info(r.hydro, r.osc, s.consts, r.snapshot_periods);
    ref.name = "reference-" + tag;
    ref.kind = "schrodinger";
    ref.grid = s.hydro;
    ref.info = {{"grid", s.reference.describe()}, {"dt_max", s.reference_dt}, {"sampled_on", s.hydro.describe()}};
    nlohmann::json errs = nlohmann::json::array();
    for (std::size_t i = 0; i < r.snapshot_periods.size(); ++i) {
        const auto& p = r.hydro.periods[r.snapshot_periods[i]];
        h.series.emplace_back(p.t_center, ctx.snapshot(h.name, i, p.rho_avg, p.t_center));
        ref.series.emplace_back(p.t_center, ctx.snapshot(ref.name, i, r.reference[i], p.t_center));
        errs.push_back({{"t", p.t_center}, {"relative_l2", r.errors[i]}});
    }
    h.info["reference_errors"] = errs;
    return {h, ref};
}

double decay_exponent(const std::vector<double>& omega, const std::vector<double>& err) {
    const double n = static_cast<double>(omega.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double x = std::log(omega[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qh::lab
