#include "qh/ops.hpp"

#include <cmath>
#include <vector>

#include "qh/errors.hpp"
#include "qh/fft.hpp"

namespace qh {

namespace {

template <typename Fn>
void for_each_line(const Grid& g, std::size_t axis, Fn fn) {
    const std::size_t n = g.points(axis);
    const std::size_t s = g.stride(axis);
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        if ((flat / s) % n != 0) continue;
        fn(flat, s, n);
    }
}

void fd4_first(const double* f, double* d, std::size_t n, double h) {
    const double c = 1.0 / (12.0 * h);
    d[0] = c * (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]);
    d[1] = c * (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]);
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = c * (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]);
    const std::size_t m = n - 1;
    d[m] = -c * (-25 * f[m] + 48 * f[m - 1] - 36 * f[m - 2] + 16 * f[m - 3] - 3 * f[m - 4]);
    d[m - 1] = -c * (-3 * f[m] - 10 * f[m - 1] + 18 * f[m - 2] - 6 * f[m - 3] + f[m - 4]);
}

void fd4_second(const double* f, double* d, std::size_t n, double h) {
    const double c = 1.0 / (12.0 * h * h);
    d[0] = c * (45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]);
    d[1] = c * (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]);
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = c * (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]);
    const std::size_t m = n - 1;
    d[m] = c * (45 * f[m] - 154 * f[m - 1] + 214 * f[m - 2] - 156 * f[m - 3] + 61 * f[m - 4] - 10 * f[m - 5]);
    d[m - 1] = c * (10 * f[m] - 15 * f[m - 1] - 4 * f[m - 2] + 14 * f[m - 3] - 6 * f[m - 4] + f[m - 5]);
}

ScalarField axis_derivative(const ScalarField& f, std::size_t axis, int order) {
    const Grid& g = f.grid();
    if (axis >= g.dims()) throw Error("derivative axis out of range");
    const Axis& ax = g.axis(axis);
    ScalarField out(g);
    std::vector<double> line(ax.points), dline(ax.points);
    for_each_line(g, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) line[i] = f[base + i * s];
        if (ax.boundary == Boundary::Periodic)
            spectral_derivative_line(line.data(), dline.data(), n, ax.length, order);
        else if (order == 1)
            fd4_first(line.data(), dline.data(), n, ax.spacing());
        else
            fd4_second(line.data(), dline.data(), n, ax.spacing());
        for (std::size_t i = 0; i < n; ++i) out[base + i * s] = dline[i];
    });
    return out;
}

}  // namespace

ScalarField derivative(const ScalarField& f, std::size_t axis) { return axis_derivative(f, axis, 1); }

ScalarField second_derivative(const ScalarField& f, std::size_t axis) { return axis_derivative(f, axis, 2); }

VectorField gradient(const ScalarField& f) {
    VectorField v(f.grid());
    for (std::size_t a = 0; a < f.grid().dims(); ++a) v.components[a] = derivative(f, a);
    return v;
}

ScalarField laplacian(const ScalarField& f) {
    ScalarField out = second_derivative(f, 0);
    for (std::size_t a = 1; a < f.grid().dims(); ++a) out += second_derivative(f, a);
    return out;
}

ScalarField divergence(const VectorField& v) {
    if (v.components.size() != v.grid.dims()) throw Error("vector field component count does not match grid");
    ScalarField out = derivative(v.components[0], 0);
    for (std::size_t a = 1; a < v.grid.dims(); ++a) out += derivative(v.components[a], a);
    return out;
}

ScalarField quadrature_weights(const Grid& g) {
    ScalarField w(g, g.cell_volume());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unravel(i);
        for (std::size_t a = 0; a < g.dims(); ++a) {
            const auto& ax = g.axis(a);
            if (ax.boundary == Boundary::Dirichlet && (idx[a] == 0 || idx[a] + 1 == ax.points)) w[i] *= 0.5;
        }
    }
    return w;
}

double integrate(const ScalarField& f) {
    const Grid& g = f.grid();
    if (g.all_periodic()) {
        double s = 0.0;
        for (double x : f.values()) s += x;
        return s * g.cell_volume();
    }
    const ScalarField w = quadrature_weights(g);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

cplx integrate(const Wavefunction& f) {
    const ScalarField w = quadrature_weights(f.grid());
    cplx s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

double l2_norm(const ScalarField& f) {
    return std::sqrt(integrate(f.map([](double x) { return x * x; })));
}

double relative_l2(const ScalarField& a, const ScalarField& reference) {
    return l2_norm(a - reference) / l2_norm(reference);
}

double relative_linf(const ScalarField& a, const ScalarField& reference) {
    return max_abs(a, reference) / max_abs(reference);
}

double l1_distance(const ScalarField& a, const ScalarField& b) {
    return integrate((a - b).map([](double x) { return std::abs(x); }));
}

Grid window(const Grid& g, const std::vector<std::size_t>& first, const std::vector<std::size_t>& count) {
    if (first.size() != g.dims() || count.size() != g.dims()) throw GridMismatch("window: one range per axis is required");
    std::vector<Axis> axes;
    for (std::size_t a = 0; a < g.dims(); ++a) {
        if (first[a] + count[a] > g.points(a)) throw GridMismatch("window: range exceeds axis " + std::to_string(a));
        const double dx = g.dx(a);
        axes.push_back(Axis{count[a], dx * static_cast<double>(count[a] - 1), g.axis(a).coord(first[a]),
                            Boundary::Dirichlet});
    }
    return Grid(std::move(axes));
}

ScalarField restrict_to(const ScalarField& f, const Grid& sub) {
    const Grid& g = f.grid();
    if (sub.dims() != g.dims()) throw GridMismatch("restrict_to: dimension mismatch");
    ScalarField out(sub);
    for (std::size_t i = 0; i < sub.size(); ++i) {
        const Point p = sub.point(i);
        std::size_t flat = 0;
        for (std::size_t a = 0; a < g.dims(); ++a) {
            const double u = (p[a] - g.axis(a).origin) / g.dx(a);
            const double k = std::round(u);
            if (std::abs(u - k) > 1e-6) throw GridMismatch("restrict_to: node off the parent grid on axis " + std::to_string(a));
            long idx = static_cast<long>(k);
            const long n = static_cast<long>(g.points(a));
            if (g.axis(a).boundary == Boundary::Periodic) idx = ((idx % n) + n) % n;
            else if (idx < 0 || idx >= n) throw GridMismatch("restrict_to: node outside the parent grid on axis " + std::to_string(a));
            flat += static_cast<std::size_t>(idx) * g.stride(a);
        }
        out[i] = f[flat];
    }
    return out;
}

}  // namespace qh
