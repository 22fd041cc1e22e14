#include "qh/field.hpp"

#include <cmath>

namespace qh {

ScalarField VectorField::norm_squared() const {
    ScalarField out(grid, 0.0);
    for (const auto& c : components)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i] * c[i];
    return out;
}

void ensure_finite(const ScalarField& f, const std::string& what) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i])) throw NonFiniteError(what + ": non-finite value at node " + std::to_string(i));
}

void ensure_finite(const Wavefunction& f, const std::string& what) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i].real()) || !std::isfinite(f[i].imag()))
            throw NonFiniteError(what + ": non-finite value at node " + std::to_string(i));
}

double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.values()) m = std::max(m, std::abs(x));
    return m;
}

double max_abs(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid(), "max_abs");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

ScalarField density_of(const Wavefunction& psi) {
    ScalarField out(psi.grid());
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] = std::norm(psi[i]);
    return out;
}

}  // namespace qh
