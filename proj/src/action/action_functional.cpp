#include "qh/action_functional.hpp"

#include <cmath>
#include <string>

#include "qh/errors.hpp"
#include "qh/ops.hpp"
#include "qh/quantum_potential.hpp"

namespace qh {

namespace {

double uniform_spacing(const FieldSeries& s, const char* op) {
    if (s.size() < 3) throw InsufficientSamples(std::string(op) + ": at least three samples are required");
    const double dt = s.t[1] - s.t[0];
    if (!(dt > 0.0)) throw Error(std::string(op) + ": series times must increase");
    for (std::size_t j = 2; j < s.size(); ++j)
        if (std::abs(s.t[j] - s.t[j - 1] - dt) > 1e-6 * dt)
            throw Error(std::string(op) + ": series times must be uniformly spaced");
    return dt;
}

void check_inputs(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U, const char* op) {
    if (rho.size() != S.size()) throw Error(std::string(op) + ": series lengths differ");
    for (std::size_t j = 0; j < rho.size(); ++j) {
        if (std::abs(rho.t[j] - S.t[j]) > 1e-9 * std::max(1.0, std::abs(rho.t[j])))
            throw Error(std::string(op) + ": series time bases differ");
        require_same_grid(rho.f[j].grid(), S.f[j].grid(), op);
        require_same_grid(rho.f[j].grid(), U.grid(), op);
    }
}

// hbar = 0 gives the classical operator.
ActionReport residuals(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U, const PhysicalConstants& c,
                       double hbar, double rho_floor, const char* op) {
    check_inputs(rho, S, U, op);
    const double dt = uniform_spacing(rho, op);
    const Grid& g = U.grid();
    const std::size_t D = g.dims();
    const bool quantum = hbar != 0.0;
    const ScalarField q = quadrature_weights(g);
    std::vector<double> face_weight(D);
    for (std::size_t a = 0; a < D; ++a) face_weight[a] = hbar * hbar / (4.0 * c.mass(a));

    ActionReport out;
    std::vector<double> lagrangian, flux;
    for (std::size_t j = 1; j + 1 < rho.size(); ++j) {
        const ScalarField& r = rho.f[j];
        ScalarField hj = (S.f[j + 1] - S.f[j - 1]) * (0.5 / dt) + U;
        ScalarField cont = (rho.f[j + 1] - rho.f[j - 1]) * (0.5 / dt);
        ScalarField density = hj;  // integrand of the action before the rho weight
        ScalarField l;
        if (quantum) {
            check_floor(r, rho_floor, op);
            l = r.map([](double v) { return std::log(v); });
        }
        for (std::size_t a = 0; a < D; ++a) {
            const double m = c.mass(a);
            const ScalarField P = derivative(S.f[j], a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                hj[i] += P[i] * P[i] / (2.0 * m);
                density[i] += P[i] * P[i] / (2.0 * m);
            }
            cont += derivative(r * P, a) * (1.0 / m);
            if (quantum) {
                // (hbar^2/8m) l'^2 - (hbar^2/4m)(l'' + l'^2) = -(hbar^2/8m) l'^2 - (hbar^2/4m) l''
                const ScalarField d1 = derivative(l, a), d2 = second_derivative(l, a);
                const double k = hbar * hbar / m;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    hj[i] -= k * (d1[i] * d1[i] / 8.0 + d2[i] / 4.0);
                    density[i] += k * d1[i] * d1[i] / 8.0;
                }
            }
        }
        double mass = 0.0, hj2 = 0.0, lag = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            mass += q[i] * r[i];
            hj2 += q[i] * r[i] * hj[i] * hj[i];
            lag += q[i] * r[i] * density[i];
        }
        if (!(mass > 0.0)) throw Error(std::string(op) + ": density has no mass");
        out.hj_residual_norm = std::max(out.hj_residual_norm, std::sqrt(hj2 / mass));
        out.continuity_residual_norm = std::max(out.continuity_residual_norm, l2_norm(cont));
        lagrangian.push_back(lag);
        flux.push_back(quantum ? surface_flux(r, face_weight) : 0.0);
        out.t.push_back(rho.t[j]);
        out.hj.push_back(std::move(hj));
        out.continuity.push_back(std::move(cont));
    }
    auto trapezoid = [dt](const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t j = 0; j + 1 < v.size(); ++j) s += 0.5 * dt * (v[j] + v[j + 1]);
        return s;
    };
    out.action_value = trapezoid(lagrangian);
    out.boundary_term = trapezoid(flux);
    return out;
}

}  // namespace

ActionReport classical_action_residual(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U,
                                       const PhysicalConstants& c) {
    return residuals(rho, S, U, c, 0.0, 0.0, "classical_action_residual");
}

ActionReport quantum_action_residual(const FieldSeries& rho, const FieldSeries& S, const ScalarField& U,
                                     const PhysicalConstants& c, double rho_floor) {
    return residuals(rho, S, U, c, c.hbar, rho_floor, "quantum_action_residual");
}

double surface_flux(const ScalarField& f, const std::vector<double>& w) {
    const Grid& g = f.grid();
    if (w.size() != g.dims()) throw Error("surface_flux: one weight per axis is required");
    const ScalarField q = quadrature_weights(g);
    double total = 0.0;
    for (std::size_t a = 0; a < g.dims(); ++a) {
        if (g.axis(a).boundary == Boundary::Periodic || w[a] == 0.0) continue;
        const ScalarField d = derivative(f, a);
        const std::size_t last = g.points(a) - 1;
        // End nodes carry trapezoid weight dx/2 on this axis; dividing it out leaves the face weight.
        const double to_face = 2.0 / g.dx(a);
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::size_t k = g.unravel(i)[a];
            if (k == last) s += q[i] * to_face * d[i];
            else if (k == 0) s -= q[i] * to_face * d[i];
        }
        total += w[a] * s;
    }
    return total;
}

}  // namespace qh
