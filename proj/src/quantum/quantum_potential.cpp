#include "qh/quantum_potential.hpp"

#include <cmath>
#include <string>

#include "qh/ops.hpp"

namespace qh {

void check_floor(const ScalarField& rho, double rho_floor, const char* op) {
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (!(rho[i] >= rho_floor))
            throw FloorViolation(std::string(op) + ": density " + std::to_string(rho[i]) + " below floor " +
                                     std::to_string(rho_floor) + " at node " + std::to_string(i),
                                 i);
}

namespace {

ScalarField log_density(const ScalarField& rho, double rho_floor) {
    return rho.map([&](double r) { return std::log(std::max(r, rho_floor)); });
}

}  // namespace

ScalarField quantum_potential(const ScalarField& rho, const PhysicalConstants& c, double rho_floor) {
    check_floor(rho, rho_floor, "quantum_potential");
    const ScalarField a = rho.map([](double r) { return std::sqrt(r); });
    ScalarField out(rho.grid(), 0.0);
    for (std::size_t ax = 0; ax < rho.grid().dims(); ++ax) {
        const ScalarField d2 = second_derivative(a, ax);
        const double k = -c.hbar * c.hbar / (2.0 * c.mass(ax));
        for (std::size_t i = 0; i < rho.size(); ++i) out[i] += k * d2[i] / a[i];
    }
    return out;
}

ScalarField quantum_potential_expanded(const ScalarField& rho, const PhysicalConstants& c, double rho_floor) {
    check_floor(rho, rho_floor, "quantum_potential_expanded");
    ScalarField out(rho.grid(), 0.0);
    for (std::size_t ax = 0; ax < rho.grid().dims(); ++ax) {
        const ScalarField d1 = derivative(rho, ax), d2 = second_derivative(rho, ax);
        const double k = c.hbar * c.hbar / (2.0 * c.mass(ax));
        for (std::size_t i = 0; i < rho.size(); ++i)
            out[i] += k * (d1[i] * d1[i] / (4.0 * rho[i] * rho[i]) - d2[i] / (2.0 * rho[i]));
    }
    return out;
}

QuantumPotentialParts quantum_potential_parts(const ScalarField& rho, const PhysicalConstants& c, double rho_floor) {
    check_floor(rho, rho_floor, "quantum_potential_parts");
    const ScalarField l = log_density(rho, rho_floor);
    QuantumPotentialParts p{ScalarField(rho.grid(), 0.0), ScalarField(rho.grid(), 0.0)};
    for (std::size_t ax = 0; ax < rho.grid().dims(); ++ax) {
        const ScalarField dl = derivative(l, ax), d2 = second_derivative(rho, ax);
        const double h2m = c.hbar * c.hbar / c.mass(ax);
        for (std::size_t i = 0; i < rho.size(); ++i) {
            p.prime[i] += h2m / 8.0 * dl[i] * dl[i];
            p.dprime[i] -= h2m / 4.0 * d2[i] / rho[i];
        }
    }
    return p;
}

ScalarField effective_potential(const ScalarField& U, const ScalarField& rho, EffectiveVariant variant,
                                const PhysicalConstants& c, double rho_floor, double t, double omega) {
    require_same_grid(U.grid(), rho.grid(), "effective_potential");
    switch (variant) {
        case EffectiveVariant::Schrodinger:
            return U + quantum_potential(rho, c, rho_floor);
        case EffectiveVariant::Variational:
            return U + quantum_potential_parts(rho, c, rho_floor).prime;
        case EffectiveVariant::TrueOscillating: {
            check_floor(rho, rho_floor, "effective_potential");
            const double k = -c.hbar * omega / std::sqrt(2.0) * std::cos(omega * t);
            ScalarField out = U;
            if (k != 0.0) out += log_density(rho, rho_floor) * k;
            return out;
        }
    }
    throw Error("unknown effective potential variant");
}

QuantumPotentialSet quantum_potential_set(const ScalarField& U, const ScalarField& rho, const PhysicalConstants& c,
                                          double rho_floor) {
    QuantumPotentialSet s;
    s.U_q = quantum_potential(rho, c, rho_floor);
    auto parts = quantum_potential_parts(rho, c, rho_floor);
    s.U_q_prime = std::move(parts.prime);
    s.U_q_dprime = std::move(parts.dprime);
    s.U_ef_schrodinger = U + s.U_q;
    s.U_ef_variational = U + s.U_q_prime;
    return s;
}

ScalarField ponderomotive_potential(const OscillatingForceSpec& force, const PhysicalConstants& c) {
    if (!(force.omega > 0.0)) throw Error("ponderomotive_potential: omega must be positive");
    const Grid& g = force.f_c.grid;
    require_same_grid(g, force.f_s.grid, "ponderomotive_potential");
    ScalarField out(g, 0.0);
    for (std::size_t ax = 0; ax < g.dims(); ++ax) {
        const double k = 1.0 / (4.0 * c.mass(ax) * force.omega * force.omega);
        const auto& fc = force.f_c.components[ax];
        const auto& fs = force.f_s.components[ax];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += k * (fc[i] * fc[i] + fs[i] * fs[i]);
    }
    return out;
}

OscillatingForceSpec density_oscillating_force(const ScalarField& rho, double omega, const PhysicalConstants& c,
                                               double rho_floor) {
    check_floor(rho, rho_floor, "density_oscillating_force");
    OscillatingForceSpec f{gradient(log_density(rho, rho_floor)), VectorField(rho.grid()), omega};
    const double k = c.hbar * omega / std::sqrt(2.0);
    for (auto& comp : f.f_c.components) comp *= k;
    return f;
}

OscillatingForceSpec uniform_wave_force(const Grid& g, const std::vector<double>& qE0, double omega) {
    if (qE0.size() != g.dims()) throw Error("uniform_wave_force: amplitude must have one entry per axis");
    OscillatingForceSpec f{VectorField(g), VectorField(g), omega};
    for (std::size_t a = 0; a < g.dims(); ++a) f.f_c.components[a] = ScalarField(g, qE0[a]);
    return f;
}

}  // namespace qh
