#include "qh/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "qh/ops.hpp"

namespace qh {

namespace {

constexpr double sqrt2 = std::numbers::sqrt2;

struct TimeWeight {
    std::size_t j = 0;
    double w = 0.0;  // weight of sample j + 1
};

TimeWeight locate(const std::vector<double>& t, double time) {
    if (t.size() == 1) return {};
    const double tol = 1e-9 * std::max(1.0, std::abs(t.back() - t.front()));
    if (time < t.front() - tol || time > t.back() + tol)
        throw Error("time " + std::to_string(time) + " outside the field series");
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const auto j = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(it - t.begin() - 1, 0, static_cast<std::ptrdiff_t>(t.size()) - 2));
    const double w = std::clamp((time - t[j]) / (t[j + 1] - t[j]), 0.0, 1.0);
    return {j, w};
}

double at(const std::vector<ScalarField>& f, const TimeWeight& tw, const Point& p) {
    const double a = interpolate(f[tw.j], p);
    if (tw.w == 0.0) return a;
    return (1.0 - tw.w) * a + tw.w * interpolate(f[tw.j + 1], p);
}

Point vector_at(const VelocitySeries& s, double time, const Point& p) {
    const TimeWeight tw = locate(s.t, time);
    Point out{};
    const std::size_t D = s.v.front().dims();
    for (std::size_t a = 0; a < D; ++a) {
        const double lo = interpolate(s.v[tw.j].components[a], p);
        out[a] = tw.w == 0.0 ? lo : (1.0 - tw.w) * lo + tw.w * interpolate(s.v[tw.j + 1].components[a], p);
    }
    return out;
}

Point axpy(const Point& x, double a, const Point& y, std::size_t D) {
    Point out = x;
    for (std::size_t k = 0; k < D; ++k) out[k] += a * y[k];
    return out;
}

std::size_t step_count(double duration, double dt) {
    if (!(dt > 0.0)) throw Error("time step must be positive");
    if (duration < 0.0) throw Error("duration must be non-negative");
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
}

void check_span(const std::vector<double>& t, double duration) {
    if (t.empty()) throw InsufficientSamples("empty field series");
    if (t.size() > 1 && t.back() - t.front() < duration * (1.0 - 1e-12))
        throw Error("field series does not span the requested window");
}

void record(TrajectorySample& s, double t, const Point& r, const Point& v) {
    s.times.push_back(t);
    s.positions.push_back(r);
    s.velocities.push_back(v);
}

// Velocity Verlet with a time-dependent acceleration a(r, t).
template <typename Accel>
TrajectorySample verlet(TrajectoryKind kind, const Grid& g, const Point& r0, const Point& v0, double t0, double dt,
                        std::size_t steps, Accel accel) {
    TrajectorySample s;
    s.kind = kind;
    s.dims = g.dims();
    if (!inside(g, r0)) throw EscapeError("initial position outside the grid");
    const std::size_t D = g.dims();
    Point r = wrap(g, r0), v = v0;
    Point acc = accel(r, t0);
    record(s, t0, r, v);
    for (std::size_t n = 0; n < steps; ++n) {
        const double t1 = t0 + static_cast<double>(n + 1) * dt;
        const Point vh = axpy(v, 0.5 * dt, acc, D);
        const Point rn = axpy(r, dt, vh, D);
        if (!inside(g, rn)) {
            s.escaped = true;
            break;
        }
        r = wrap(g, rn);
        acc = accel(r, t1);
        v = axpy(vh, 0.5 * dt, acc, D);
        record(s, t1, r, v);
    }
    return s;
}

VelocitySeries gradient_series(const FieldSeries& f, const PhysicalConstants& c, double scale) {
    VelocitySeries out;
    for (std::size_t j = 0; j < f.size(); ++j) {
        VectorField g = gradient(f.f[j]);
        for (std::size_t a = 0; a < g.dims(); ++a) g.components[a] *= scale / c.mass(a);
        out.t.push_back(f.t[j]);
        out.v.push_back(std::move(g));
    }
    return out;
}

}  // namespace

const char* to_string(TrajectoryKind k) {
    switch (k) {
        case TrajectoryKind::Kinematic: return "kinematic";
        case TrajectoryKind::NewtonEffective: return "newton_effective";
        case TrajectoryKind::NewtonTrue: return "newton_true";
    }
    return "?";
}

bool inside(const Grid& g, const Point& p) {
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const Axis& ax = g.axis(a);
        if (!std::isfinite(p[a])) return false;
        if (ax.boundary == Boundary::Dirichlet && (p[a] < ax.origin || p[a] > ax.origin + ax.length)) return false;
    }
    return true;
}

Point wrap(const Grid& g, Point p) {
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const Axis& ax = g.axis(a);
        if (ax.boundary != Boundary::Periodic) continue;
        double u = std::fmod(p[a] - ax.origin, ax.length);
        if (u < 0.0) u += ax.length;
        if (u >= ax.length) u = 0.0;
        p[a] = ax.origin + u;
    }
    return p;
}

double interpolate(const ScalarField& f, const Point& p) {
    const Grid& g = f.grid();
    const std::size_t D = g.dims();
    std::array<std::size_t, 3> lo{}, hi{};
    std::array<double, 3> frac{};
    for (std::size_t a = 0; a < D; ++a) {
        const Axis& ax = g.axis(a);
        const double h = ax.spacing();
        double u = (p[a] - ax.origin) / h;
        if (ax.boundary == Boundary::Periodic) {
            u = std::fmod(u, static_cast<double>(ax.points));
            if (u < 0.0) u += static_cast<double>(ax.points);
            const auto i = std::min(static_cast<std::size_t>(u), ax.points - 1);
            lo[a] = i;
            hi[a] = (i + 1) % ax.points;
            frac[a] = u - static_cast<double>(i);
        } else {
            if (u < -1e-9 || u > static_cast<double>(ax.points - 1) + 1e-9)
                throw EscapeError("interpolation point outside the grid");
            const auto i = std::min(static_cast<std::size_t>(std::max(u, 0.0)), ax.points - 2);
            lo[a] = i;
            hi[a] = i + 1;
            frac[a] = std::clamp(u - static_cast<double>(i), 0.0, 1.0);
        }
    }
    double sum = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << D); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < D; ++a) {
            const bool up = (corner >> a) & 1U;
            w *= up ? frac[a] : 1.0 - frac[a];
            flat += (up ? hi[a] : lo[a]) * g.stride(a);
        }
        if (w != 0.0) sum += w * f[flat];
    }
    return sum;
}

VelocitySeries velocity_from_action(const FieldSeries& S, const PhysicalConstants& c) {
    return gradient_series(S, c, 1.0);
}

VelocitySeries velocity_from_wavefunctions(const std::vector<double>& t, const std::vector<Wavefunction>& psi,
                                           const PhysicalConstants& c, double rho_floor) {
    if (t.size() != psi.size() || t.empty()) throw InsufficientSamples("velocity_from_wavefunctions: sample count");
    VelocitySeries out;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const Grid& g = psi[j].grid();
        ScalarField re(g), im(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            re[i] = psi[j][i].real();
            im[i] = psi[j][i].imag();
        }
        VectorField v(g);
        for (std::size_t a = 0; a < g.dims(); ++a) {
            const ScalarField dre = derivative(re, a), dim = derivative(im, a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double rho = re[i] * re[i] + im[i] * im[i];
                v.components[a][i] =
                    rho < rho_floor ? 0.0 : c.hbar * (re[i] * dim[i] - im[i] * dre[i]) / (c.mass(a) * rho);
            }
        }
        out.t.push_back(t[j]);
        out.v.push_back(std::move(v));
    }
    return out;
}

TrajectorySample kinematic_trajectory(const VelocitySeries& vs, const Point& r0, double dt, double duration,
                                      NodeGuard guard) {
    check_span(vs.t, duration);
    const std::size_t steps = step_count(duration, dt);
    const Grid& g = vs.v.front().grid;
    const std::size_t D = g.dims();
    TrajectorySample s;
    s.kind = TrajectoryKind::Kinematic;
    s.dims = D;
    if (!inside(g, r0)) throw EscapeError("initial position outside the grid");

    const double t0 = vs.t.front();
    auto check_node = [&](const Point& r, double t, std::size_t step) {
        if (!guard.rho) return;
        const TimeWeight tw = locate(guard.rho->t, t);
        const double rho = at(guard.rho->f, tw, r);
        if (rho < guard.floor)
            throw NodeError("kinematic trajectory reached density " + std::to_string(rho) + " below the floor at t = " +
                                std::to_string(t),
                            step);
    };
    Point r = wrap(g, r0);
    check_node(r, t0, 0);
    record(s, t0, r, vector_at(vs, t0, r));
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = t0 + static_cast<double>(n) * dt;
        bool out = false;
        auto vel = [&](const Point& p, double time) -> Point {
            if (out || !inside(g, p)) {
                out = true;
                return Point{};
            }
            return vector_at(vs, time, wrap(g, p));
        };
        const Point k1 = vel(r, t);
        const Point k2 = vel(axpy(r, 0.5 * dt, k1, D), t + 0.5 * dt);
        const Point k3 = vel(axpy(r, 0.5 * dt, k2, D), t + 0.5 * dt);
        const Point k4 = vel(axpy(r, dt, k3, D), t + dt);
        Point rn = r;
        for (std::size_t a = 0; a < D; ++a) rn[a] += dt / 6.0 * (k1[a] + 2 * k2[a] + 2 * k3[a] + k4[a]);
        if (out || !inside(g, rn)) {
            s.escaped = true;
            break;
        }
        r = wrap(g, rn);
        const double t1 = t0 + static_cast<double>(n + 1) * dt;
        check_node(r, t1, n + 1);
        record(s, t1, r, vector_at(vs, t1, r));
    }
    return s;
}

TrajectorySample kinematic_trajectory(const FieldSeries& S, const Point& r0, double dt, double duration,
                                      const PhysicalConstants& c, NodeGuard guard) {
    check_span(S.t, duration);
    return kinematic_trajectory(velocity_from_action(S, c), r0, dt, duration, guard);
}

TrajectorySample newton_effective(const FieldSeries& U_ef, const Point& r0, const Point& v0, double dt,
                                  double duration, const PhysicalConstants& c) {
    check_span(U_ef.t, duration);
    const std::size_t steps = step_count(duration, dt);
    const VelocitySeries acc = gradient_series(U_ef, c, -1.0);
    return verlet(TrajectoryKind::NewtonEffective, U_ef.grid(), r0, v0, U_ef.t.front(), dt, steps,
                  [&](const Point& r, double t) { return vector_at(acc, t, r); });
}

TrajectorySample newton_true(const TruePotential& U_ref, const Point& r0, const Point& v0, double dt_fast,
                             double duration, const PhysicalConstants& c) {
    if (!(U_ref.omega > 0.0)) throw Error("newton_true: omega must be positive");
    const double period = 2.0 * std::numbers::pi / U_ref.omega;
    if (dt_fast > period / 16.0 * (1.0 + 1e-12))
        throw Error("newton_true: dt_fast under-resolves omega (need at least 16 steps per period)");
    check_span(U_ref.log_rho_r.t, duration);
    const std::size_t steps = step_count(duration, dt_fast);
    FieldSeries U_static;
    U_static.push(U_ref.log_rho_r.t.front(), U_ref.U);
    const VelocitySeries base = gradient_series(U_static, c, -1.0);
    const VelocitySeries osc = gradient_series(U_ref.log_rho_r, c, c.hbar * U_ref.omega / sqrt2);
    const std::size_t D = U_ref.U.grid().dims();
    return verlet(TrajectoryKind::NewtonTrue, U_ref.U.grid(), r0, v0, U_ref.log_rho_r.t.front(), dt_fast, steps,
                  [&](const Point& r, double t) {
                      const Point a0 = vector_at(base, t, r);
                      const Point a1 = vector_at(osc, t, r);
                      return axpy(a0, std::cos(U_ref.omega * t), a1, D);
                  });
}

TrajectorySample cycle_average_trajectory(const TrajectorySample& s, double omega) {
    if (s.size() < 2) throw InsufficientSamples("cycle_average_trajectory: need at least two samples");
    const double dt = s.times[1] - s.times[0];
    const double per = 2.0 * std::numbers::pi / omega / dt;
    const auto M = static_cast<std::size_t>(std::lround(per));
    if (M == 0 || std::abs(per - static_cast<double>(M)) > 1e-6 * per)
        throw Error("cycle_average_trajectory: steps per period must be a whole number");
    if (s.size() < M + 1) throw InsufficientSamples("cycle_average_trajectory: shorter than one period");
    TrajectorySample out;
    out.kind = s.kind;
    out.dims = s.dims;
    out.escaped = s.escaped;
    for (std::size_t j = 0; j + M < s.size(); ++j) {
        Point r{}, v{};
        for (std::size_t k = 0; k <= M; ++k) {
            const double w = (k == 0 || k == M) ? 0.5 : 1.0;
            for (std::size_t a = 0; a < s.dims; ++a) {
                r[a] += w * s.positions[j + k][a] / static_cast<double>(M);
                v[a] += w * s.velocities[j + k][a] / static_cast<double>(M);
            }
        }
        record(out, s.times[j] + 0.5 * static_cast<double>(M) * dt, r, v);
    }
    return out;
}

std::vector<double> trajectory_energy(const TrajectorySample& s, const ScalarField& U, const PhysicalConstants& c) {
    std::vector<double> e;
    e.reserve(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        double k = 0.0;
        for (std::size_t a = 0; a < s.dims; ++a) k += 0.5 * c.mass(a) * s.velocities[j][a] * s.velocities[j][a];
        e.push_back(k + interpolate(U, s.positions[j]));
    }
    return e;
}

void write_trajectory_csv(std::ostream& out, const TrajectorySample& s) {
    out << "t";
    for (std::size_t a = 0; a < s.dims; ++a) out << ",x" << a;
    for (std::size_t a = 0; a < s.dims; ++a) out << ",v" << a;
    out << ",kind\n";
    out.precision(17);
    for (std::size_t j = 0; j < s.size(); ++j) {
        out << s.times[j];
        for (std::size_t a = 0; a < s.dims; ++a) out << ',' << s.positions[j][a];
        for (std::size_t a = 0; a < s.dims; ++a) out << ',' << s.velocities[j][a];
        out << ',' << to_string(s.kind) << '\n';
    }
}

}  // namespace qh
