#include "qh/pinball.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "qh/ops.hpp"
#include "qh/parallel.hpp"
#include "qh/trajectories.hpp"

namespace qh {

struct SourceIndex {
    std::array<std::size_t, 3> cells{1, 1, 1};
    std::array<double, 3> width{};
    std::vector<std::size_t> start;  // per flat cell, offsets into `sorted`
    std::vector<Point> sorted;
};

namespace {

constexpr double sqrt2 = std::numbers::sqrt2;

double volume(const Grid& g) {
    double v = 1.0;
    for (const Axis& a : g.axes()) v *= a.length;
    return v;
}

std::size_t cell_of(const SourceIndex& idx, const Grid& g, std::size_t a, double x) {
    const auto c = static_cast<long long>(std::floor((x - g.axis(a).origin) / idx.width[a]));
    return static_cast<std::size_t>(std::clamp<long long>(c, 0, static_cast<long long>(idx.cells[a]) - 1));
}

// r - r_k with the minimum image on periodic axes.
Point displacement(const Grid& g, const Point& r, const Point& rk) {
    Point d{};
    for (std::size_t a = 0; a < g.dims(); ++a) {
        d[a] = r[a] - rk[a];
        if (g.axis(a).boundary == Boundary::Periodic) {
            const double L = g.axis(a).length;
            d[a] -= L * std::round(d[a] / L);
        }
    }
    return d;
}

double kernel(double r2, double eps, std::size_t D) {
    return std::exp(-0.5 * r2 / (eps * eps)) / std::pow(2.0 * std::numbers::pi * eps * eps, 0.5 * static_cast<double>(D));
}

// sum_k grad G(r - r_k) over sources within the cutoff.
Point kernel_gradient_sum(const DeltaSourceField& s, const Point& r) {
    Point out{};
    if (s.positions.empty()) return out;
    const SourceIndex& idx = *s.index;
    const Grid& g = s.domain;
    const std::size_t D = g.dims();
    const double cut2 = s.cutoff() * s.cutoff();
    std::array<std::array<std::size_t, 3>, 3> cand{};
    std::array<std::size_t, 3> ncand{1, 1, 1};
    for (std::size_t a = 0; a < D; ++a) {
        const auto c = static_cast<long long>(cell_of(idx, g, a, r[a]));
        const auto n = static_cast<long long>(idx.cells[a]);
        ncand[a] = 0;
        for (long long k = c - 1; k <= c + 1; ++k) {
            long long kk = k;
            if (g.axis(a).boundary == Boundary::Periodic) kk = ((k % n) + n) % n;
            else if (k < 0 || k >= n) continue;
            const auto cell = static_cast<std::size_t>(kk);
            if (std::find(cand[a].begin(), cand[a].begin() + ncand[a], cell) == cand[a].begin() + ncand[a])
                cand[a][ncand[a]++] = cell;
        }
    }
    for (std::size_t i0 = 0; i0 < ncand[0]; ++i0)
        for (std::size_t i1 = 0; i1 < ncand[1]; ++i1)
            for (std::size_t i2 = 0; i2 < ncand[2]; ++i2) {
                const std::size_t c0 = cand[0][i0], c1 = cand[1][i1], c2 = cand[2][i2];
                const std::size_t flat = (c0 * idx.cells[1] + c1) * idx.cells[2] + c2;
                for (std::size_t k = idx.start[flat]; k < idx.start[flat + 1]; ++k) {
                    const Point d = displacement(g, r, idx.sorted[k]);
                    double r2 = 0.0;
                    for (std::size_t a = 0; a < D; ++a) r2 += d[a] * d[a];
                    if (r2 > cut2) continue;
                    const double G = kernel(r2, s.epsilon, D);
                    for (std::size_t a = 0; a < D; ++a) out[a] -= d[a] / (s.epsilon * s.epsilon) * G;
                }
            }
    return out;
}

std::size_t count_steps(double duration, double dt) {
    if (!(dt > 0.0)) throw Error("pinball: dt_fast must be positive");
    if (duration < 0.0) throw Error("pinball: duration must be non-negative");
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
}

double speed(const Point& v, std::size_t D) {
    double s = 0.0;
    for (std::size_t a = 0; a < D; ++a) s += v[a] * v[a];
    return std::sqrt(s);
}

EnsembleState resample(const EnsembleState& e, const std::vector<std::size_t>& pick) {
    EnsembleState out;
    out.dims = e.dims;
    out.t = e.t;
    out.seed = e.seed;
    for (std::size_t i : pick) {
        out.r.push_back(e.r[i]);
        out.v.push_back(e.v[i]);
        out.alive.push_back(e.alive[i]);
    }
    return out;
}

double weighted_mean(const ScalarField& f, const ScalarField& w) {
    const ScalarField q = quadrature_weights(f.grid());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        num += q[i] * w[i] * f[i];
        den += q[i] * w[i];
    }
    return den > 0.0 ? num / den : 0.0;
}

double dot(const ScalarField& a, const ScalarField& b) {
    const ScalarField q = quadrature_weights(a.grid());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += q[i] * a[i] * b[i];
    return s;
}

// The terms of both moment equations at one interior sample.
struct MomentTerms {
    ScalarField dt_rho, div_flux;
    std::vector<ScalarField> inertia, convect, potential, pressure_grad;  // per axis; pressure_grad = grad rho
};

MomentTerms terms_at(const EnsembleMoments& prev, const EnsembleMoments& mid, const EnsembleMoments& next,
                     double dt, const ScalarField& U, const PhysicalConstants& c) {
    const Grid& g = mid.rho.grid();
    const std::size_t D = g.dims();
    MomentTerms t;
    t.dt_rho = (next.rho - prev.rho) * (0.5 / dt);
    t.div_flux = divergence(mid.flux);
    const double thresh = 1e-8 * max_abs(mid.rho);
    for (std::size_t i = 0; i < D; ++i) {
        const double m = c.mass(i);
        t.inertia.push_back((next.flux.components[i] - prev.flux.components[i]) * (0.5 * m / dt));
        ScalarField conv(g, 0.0);
        for (std::size_t j = 0; j < D; ++j) {
            ScalarField fij(g, 0.0);
            for (std::size_t k = 0; k < g.size(); ++k)
                if (mid.rho[k] >= thresh) fij[k] = mid.flux.components[i][k] * mid.flux.components[j][k] / mid.rho[k];
            conv += derivative(fij, j);
        }
        t.convect.push_back(conv * m);
        t.potential.push_back(mid.rho * derivative(U, i));
        t.pressure_grad.push_back(derivative(mid.rho, i));
    }
    return t;
}

double sq_diff(const ScalarField& a, const ScalarField& b) {
    const double n = l2_norm(a - b);
    return n * n;
}

}  // namespace

void DeltaSourceField::build_index() {
    auto idx = std::make_shared<SourceIndex>();
    const std::size_t D = domain.dims();
    for (std::size_t a = 0; a < D; ++a) {
        const double L = domain.axis(a).length;
        idx->cells[a] = epsilon > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(L / cutoff()))) : 1;
        idx->width[a] = L / static_cast<double>(idx->cells[a]);
    }
    const std::size_t total = idx->cells[0] * idx->cells[1] * idx->cells[2];
    std::vector<std::size_t> flat(positions.size());
    std::vector<std::size_t> count(total + 1, 0);
    for (std::size_t k = 0; k < positions.size(); ++k) {
        std::array<std::size_t, 3> c{0, 0, 0};
        for (std::size_t a = 0; a < D; ++a) c[a] = cell_of(*idx, domain, a, positions[k][a]);
        flat[k] = (c[0] * idx->cells[1] + c[1]) * idx->cells[2] + c[2];
        ++count[flat[k] + 1];
    }
    idx->start.assign(total + 1, 0);
    for (std::size_t i = 0; i < total; ++i) idx->start[i + 1] = idx->start[i] + count[i + 1];
    idx->sorted.resize(positions.size());
    std::vector<std::size_t> fill(idx->start.begin(), idx->start.end() - 1);
    for (std::size_t k = 0; k < positions.size(); ++k) idx->sorted[fill[flat[k]]++] = positions[k];
    index = std::move(idx);
}

double DeltaSourceField::amplitude(double t) const {
    if (n <= 0.0) return 0.0;
    return (-(hbar * omega / sqrt2) * std::cos(omega * t) - tau) / n;
}

double DeltaSourceField::pressure_coefficient(double t) const {
    return (n > 0.0 ? amplitude(t) * n : 0.0) + tau;
}

void DeltaSourceField::validate() const {
    if (n < 0.0) throw Error("source density must be non-negative");
    if (tau < 0.0) throw Error("tau must be non-negative");
    if (!(omega > 0.0)) throw Error("source omega must be positive");
    if (n > 0.0) {
        if (!(epsilon > 0.0)) throw Error("kernel width epsilon must be positive");
        const double spacing = std::pow(n, -1.0 / static_cast<double>(domain.dims()));
        if (epsilon > spacing / 3.0)
            throw Error("kernel width epsilon = " + std::to_string(epsilon) + " exceeds a third of the mean source spacing " +
                        std::to_string(spacing));
    }
}

DeltaSourceField sample_sources(const Grid& domain, double n, double epsilon, std::uint64_t seed, double tau,
                                double hbar, double omega) {
    DeltaSourceField s;
    s.domain = domain;
    s.n = n;
    s.epsilon = epsilon;
    s.tau = tau;
    s.hbar = hbar;
    s.omega = omega;
    s.seed = seed;
    s.validate();
    const double expected = n * volume(domain);
    s.statistically_dense = expected >= 1e3;
    if (expected > 0.0) {
        std::mt19937_64 rng(seed);
        std::poisson_distribution<std::size_t> count(expected);
        const std::size_t N = count(rng);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        s.positions.resize(N);
        for (auto& p : s.positions)
            for (std::size_t a = 0; a < domain.dims(); ++a) p[a] = domain.axis(a).origin + domain.axis(a).length * u(rng);
    }
    s.build_index();
    return s;
}

Point pinball_force(const Point& r, double t, const DeltaSourceField& sources, const VectorField& grad_U) {
    const std::size_t D = sources.domain.dims();
    Point f{};
    for (std::size_t a = 0; a < D; ++a) f[a] = -interpolate(grad_U.components[a], r);
    const double amp = sources.amplitude(t);
    if (amp == 0.0 || sources.positions.empty()) return f;
    if (!sources.index) throw Error("pinball_force: source index not built");
    const Point k = kernel_gradient_sum(sources, r);
    for (std::size_t a = 0; a < D; ++a) f[a] += amp * k[a];
    return f;
}

std::size_t EnsembleState::alive_count() const {
    return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
}

EnsembleState sample_ensemble(const GaussianEnsembleSpec& spec, double t0) {
    if (spec.count == 0) throw Error("ensemble needs at least one particle");
    const std::size_t D = spec.center.size();
    if (D == 0 || D > 3 || spec.position_std.size() != D || spec.velocity_mean.size() != D || spec.velocity_std.size() != D)
        throw Error("ensemble spec: per-axis vectors must share one length of 1 to 3");
    EnsembleState e;
    e.dims = D;
    e.t = t0;
    e.seed = spec.seed;
    e.r.resize(spec.count);
    e.v.resize(spec.count);
    e.alive.assign(spec.count, 1);
    for (std::size_t i = 0; i < spec.count; ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> z(0.0, 1.0);
        for (std::size_t a = 0; a < D; ++a) {
            e.r[i][a] = spec.center[a] + spec.position_std[a] * z(rng);
            e.v[i][a] = spec.velocity_mean[a] + spec.velocity_std[a] * z(rng);
        }
    }
    return e;
}

std::vector<EnsembleState> evolve_ensemble(const EnsembleState& initial, const DeltaSourceField& sources,
                                           const ScalarField& U, const PinballStepping& st,
                                           const PhysicalConstants& c) {
    sources.validate();
    require_same_grid(U.grid(), sources.domain, "evolve_ensemble");
    if (initial.dims != sources.domain.dims()) throw Error("ensemble and source domain dimensions differ");
    if (st.record_every == 0) throw Error("record_every must be positive");
    const double period = 2.0 * std::numbers::pi / sources.omega;
    if (!sources.positions.empty() && st.dt_fast > period / 16.0 * (1.0 + 1e-12))
        throw Error("pinball: dt_fast under-resolves omega (need at least 16 steps per period)");
    const std::size_t steps = count_steps(st.duration, st.dt_fast);
    const std::size_t records = steps / st.record_every + 1;
    const std::size_t D = initial.dims;
    const Grid& g = sources.domain;
    const VectorField grad_U = gradient(U);
    const bool check_kernel = !sources.positions.empty();
    const double vmax = check_kernel ? sources.epsilon / (4.0 * st.dt_fast) : 0.0;

    std::vector<EnsembleState> out(records);
    for (std::size_t k = 0; k < records; ++k) {
        out[k] = initial;
        out[k].t = initial.t + static_cast<double>(k * st.record_every) * st.dt_fast;
    }
    parallel_for(initial.size(), st.workers, [&](std::size_t i) {
        if (!initial.alive[i]) return;
        Point r = initial.r[i], v = initial.v[i];
        if (!inside(g, r)) {
            for (auto& s : out) s.alive[i] = 0;
            return;
        }
        r = wrap(g, r);
        auto accel = [&](const Point& p, double t) {
            Point f = pinball_force(p, t, sources, grad_U);
            for (std::size_t a = 0; a < D; ++a) f[a] /= c.mass(a);
            return f;
        };
        Point acc = accel(r, initial.t);
        for (std::size_t n = 0; n < steps; ++n) {
            if (check_kernel && speed(v, D) > vmax)
                throw CflViolation("pinball: dt_fast * |V| exceeds epsilon/4 for particle " + std::to_string(i) +
                                   " at t = " + std::to_string(initial.t + static_cast<double>(n) * st.dt_fast));
            const double t1 = initial.t + static_cast<double>(n + 1) * st.dt_fast;
            Point vh = v;
            for (std::size_t a = 0; a < D; ++a) vh[a] += 0.5 * st.dt_fast * acc[a];
            Point rn = r;
            for (std::size_t a = 0; a < D; ++a) rn[a] += st.dt_fast * vh[a];
            if (!inside(g, rn)) {
                for (std::size_t k = (n + 1 + st.record_every - 1) / st.record_every; k < records; ++k) {
                    out[k].r[i] = r;
                    out[k].v[i] = v;
                    out[k].alive[i] = 0;
                }
                return;
            }
            r = wrap(g, rn);
            acc = accel(r, t1);
            for (std::size_t a = 0; a < D; ++a) v[a] = vh[a] + 0.5 * st.dt_fast * acc[a];
            if ((n + 1) % st.record_every == 0) {
                const std::size_t k = (n + 1) / st.record_every;
                out[k].r[i] = r;
                out[k].v[i] = v;
            }
        }
    });
    return out;
}

EnsembleMoments ensemble_density(const EnsembleState& e, const Grid& grid, double h) {
    if (!(h > 0.0)) throw Error("bandwidth must be positive");
    if (e.dims != grid.dims()) throw Error("ensemble and grid dimensions differ");
    const std::size_t D = grid.dims();
    EnsembleMoments m;
    m.rho = ScalarField(grid, 0.0);
    m.flux = VectorField(grid);
    for (auto& f : m.flux.components) f = ScalarField(grid, 0.0);
    m.Pi.assign(D * D, ScalarField(grid, 0.0));
    const double norm = 1.0 / (static_cast<double>(e.size()) * std::pow(2.0 * std::numbers::pi * h * h, 0.5 * D));
    const double reach = 5.0 * h;

    for (std::size_t p = 0; p < e.size(); ++p) {
        if (!e.alive[p]) continue;
        // Node ranges (possibly wrapping) within the kernel reach on each axis.
        std::array<std::vector<std::pair<std::size_t, double>>, 3> nodes;
        for (std::size_t a = 0; a < 3; ++a) {
            if (a >= D) {
                nodes[a] = {{0, 0.0}};
                continue;
            }
            const Axis& ax = grid.axis(a);
            const double dx = ax.spacing();
            const auto lo = static_cast<long long>(std::ceil((e.r[p][a] - reach - ax.origin) / dx));
            const auto hi = static_cast<long long>(std::floor((e.r[p][a] + reach - ax.origin) / dx));
            const auto n = static_cast<long long>(ax.points);
            for (long long k = lo; k <= hi; ++k) {
                long long kk = k;
                if (ax.boundary == Boundary::Periodic) kk = ((k % n) + n) % n;
                else if (k < 0 || k >= n) continue;
                const double d = ax.origin + static_cast<double>(k) * dx - e.r[p][a];
                nodes[a].push_back({static_cast<std::size_t>(kk), d * d});
            }
        }
        for (const auto& [i0, d0] : nodes[0])
            for (const auto& [i1, d1] : nodes[1])
                for (const auto& [i2, d2] : nodes[2]) {
                    std::size_t flat = i0 * grid.stride(0);
                    if (D > 1) flat += i1 * grid.stride(1);
                    if (D > 2) flat += i2 * grid.stride(2);
                    const double w = norm * std::exp(-0.5 * (d0 + d1 + d2) / (h * h));
                    m.rho[flat] += w;
                    for (std::size_t a = 0; a < D; ++a) {
                        m.flux.components[a][flat] += w * e.v[p][a];
                        for (std::size_t b = 0; b < D; ++b) m.Pi[a * D + b][flat] += w * e.v[p][a] * e.v[p][b];
                    }
                }
    }

    const double thresh = 1e-8 * max_abs(m.rho);
    m.v = VectorField(grid);
    for (std::size_t a = 0; a < D; ++a) {
        m.v.components[a] = ScalarField(grid, 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (m.rho[k] >= thresh && m.rho[k] > 0.0) m.v.components[a][k] = m.flux.components[a][k] / m.rho[k];
    }
    m.wcov.assign(D * D, ScalarField(grid, 0.0));
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b)
            for (std::size_t k = 0; k < grid.size(); ++k)
                if (m.rho[k] >= thresh && m.rho[k] > 0.0)
                    m.wcov[a * D + b][k] = m.Pi[a * D + b][k] / m.rho[k] - m.v.components[a][k] * m.v.components[b][k];

    double tau = 0.0;
    std::vector<double> diag(D);
    for (std::size_t a = 0; a < D; ++a) {
        diag[a] = weighted_mean(m.wcov[a * D + a], m.rho);
        tau += diag[a] / static_cast<double>(D);
    }
    m.tau_mean = tau;
    double off = 0.0;
    std::size_t n_off = 0;
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b)
            if (a != b) {
                off += weighted_mean(m.wcov[a * D + b].map([](double x) { return std::abs(x); }), m.rho);
                ++n_off;
            }
    const double scale = std::abs(tau) > 0.0 ? std::abs(tau) : 1.0;
    m.offdiag_ratio = n_off ? off / static_cast<double>(n_off) / scale : 0.0;
    for (std::size_t a = 0; a < D; ++a) m.diag_spread = std::max(m.diag_spread, std::abs(diag[a] - tau) / scale);
    return m;
}

MomentReport moment_check(const std::vector<EnsembleState>& series, const ScalarField& U,
                          const DeltaSourceField& sources, const Grid& grid, double bandwidth,
                          const PhysicalConstants& c, std::size_t bootstrap, std::uint64_t seed) {
    if (series.size() < 3) throw InsufficientSamples("moment_check: need at least 3 time samples");
    require_same_grid(U.grid(), grid, "moment_check");
    const double dt = series[1].t - series[0].t;
    for (std::size_t j = 1; j < series.size(); ++j)
        if (std::abs(series[j].t - series[j - 1].t - dt) > 1e-9 * std::abs(dt))
            throw Error("moment_check: samples must be equally spaced in time");
    const std::size_t D = grid.dims();
    const std::size_t M = series.front().size();

    auto moments_of = [&](const std::vector<std::size_t>* pick) {
        std::vector<EnsembleMoments> out;
        for (const auto& s : series) out.push_back(ensemble_density(pick ? resample(s, *pick) : s, grid, bandwidth));
        return out;
    };
    const std::vector<EnsembleMoments> base = moments_of(nullptr);
    std::vector<std::vector<EnsembleMoments>> boot;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_one(0, M - 1);
    for (std::size_t b = 0; b < bootstrap; ++b) {
        std::vector<std::size_t> pick(M);
        for (auto& i : pick) i = pick_one(rng);
        boot.push_back(moments_of(&pick));
    }

    MomentReport rep;
    rep.continuity_pass = true;
    rep.momentum_pass = true;
    double mis2 = 0.0, conf2 = 0.0;
    for (std::size_t j = 1; j + 1 < series.size(); ++j) {
        const double t = series[j].t;
        const double cp = sources.pressure_coefficient(t);
        const MomentTerms T = terms_at(base[j - 1], base[j], base[j + 1], dt, U, c);

        const double cont = l2_norm(T.dt_rho + T.div_flux);
        double mom2 = 0.0, num = 0.0, den = 0.0;
        for (std::size_t a = 0; a < D; ++a) {
            const ScalarField lhs = T.inertia[a] + T.convect[a] + T.potential[a];
            const double n = l2_norm(lhs + T.pressure_grad[a] * cp);
            mom2 += n * n;
            num += dot(lhs, T.pressure_grad[a]);
            den += dot(T.pressure_grad[a], T.pressure_grad[a]);
        }
        double cn2 = 0.0, mn2 = 0.0;
        for (std::size_t b = 0; b < bootstrap; ++b) {
            const MomentTerms B = terms_at(boot[b][j - 1], boot[b][j], boot[b][j + 1], dt, U, c);
            cn2 += sq_diff(B.dt_rho, T.dt_rho) + sq_diff(B.div_flux, T.div_flux);
            for (std::size_t a = 0; a < D; ++a)
                mn2 += sq_diff(B.inertia[a], T.inertia[a]) + sq_diff(B.convect[a], T.convect[a]) +
                       sq_diff(B.potential[a], T.potential[a]) + sq_diff(B.pressure_grad[a] * cp, T.pressure_grad[a] * cp);
        }
        const double bn = bootstrap ? static_cast<double>(bootstrap) : 1.0;
        rep.t.push_back(t);
        rep.continuity_norm.push_back(cont);
        rep.continuity_noise.push_back(std::sqrt(cn2 / bn));
        rep.momentum_norm.push_back(std::sqrt(mom2));
        rep.momentum_noise.push_back(std::sqrt(mn2 / bn));
        rep.continuity_pass = rep.continuity_pass && cont <= 3.0 * rep.continuity_noise.back();
        rep.momentum_pass = rep.momentum_pass && rep.momentum_norm.back() <= 3.0 * rep.momentum_noise.back();
        const double fit = den > 0.0 ? -num / den : 0.0;
        rep.fitted_pressure.push_back(fit);
        rep.configured_pressure.push_back(cp);
        mis2 += (fit - cp) * (fit - cp);
        conf2 += cp * cp;
    }
    rep.pressure_mismatch = conf2 > 0.0 ? std::sqrt(mis2 / conf2) : std::sqrt(mis2);
    return rep;
}

Point kernel_gradient_integral(const ScalarField& P, const Point& r_k, double epsilon) {
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
    const Grid& g = P.grid();
    const std::size_t D = g.dims();
    const ScalarField q = quadrature_weights(g);
    Point out{};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point d = displacement(g, g.point(i), r_k);
        double r2 = 0.0;
        for (std::size_t a = 0; a < D; ++a) r2 += d[a] * d[a];
        const double G = kernel(r2, epsilon, D);
        for (std::size_t a = 0; a < D; ++a) out[a] -= q[i] * P[i] * d[a] / (epsilon * epsilon) * G;
    }
    return out;
}

void write_ensemble_csv(std::ostream& out, const EnsembleState& e) {
    for (std::size_t a = 0; a < e.dims; ++a) out << (a ? "," : "") << "x" << a;
    for (std::size_t a = 0; a < e.dims; ++a) out << ",v" << a;
    out << ",alive\n";
    out.precision(17);
    for (std::size_t i = 0; i < e.size(); ++i) {
        for (std::size_t a = 0; a < e.dims; ++a) out << (a ? "," : "") << e.r[i][a];
        for (std::size_t a = 0; a < e.dims; ++a) out << ',' << e.v[i][a];
        out << ',' << static_cast<int>(e.alive[i]) << '\n';
    }
}

}  // namespace qh
