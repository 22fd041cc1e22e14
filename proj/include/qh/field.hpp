#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qh/errors.hpp"
#include "qh/grid.hpp"

namespace qh {

using cplx = std::complex<double>;

// Values sampled on every node of a grid, row-major with the last axis fastest.
template <typename T>
class Lattice {
public:
    Lattice() = default;
    explicit Lattice(Grid g, T fill = T{}) : grid_(std::move(g)), v_(grid_.size(), fill) {}
    Lattice(Grid g, std::vector<T> values) : grid_(std::move(g)), v_(std::move(values)) {
        if (v_.size() != grid_.size()) throw Error("field value count does not match grid");
    }

    static Lattice sample(const Grid& g, const std::function<T(const Point&)>& f) {
        Lattice out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out.v_[i] = f(g.point(i));
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    T& operator[](std::size_t i) { return v_[i]; }
    const T& operator[](std::size_t i) const { return v_[i]; }
    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    std::vector<T>& values() { return v_; }
    const std::vector<T>& values() const { return v_; }

    template <typename F>
    Lattice map(F f) const {
        Lattice out(grid_);
        for (std::size_t i = 0; i < v_.size(); ++i) out.v_[i] = f(v_[i]);
        return out;
    }

    Lattice& operator+=(const Lattice& o) {
        require_same_grid(grid_, o.grid_, "+=");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    Lattice& operator-=(const Lattice& o) {
        require_same_grid(grid_, o.grid_, "-=");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    Lattice& operator*=(const Lattice& o) {
        require_same_grid(grid_, o.grid_, "*=");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] *= o.v_[i];
        return *this;
    }
    Lattice& operator*=(T s) {
        for (auto& x : v_) x *= s;
        return *this;
    }
    Lattice& operator+=(T s) {
        for (auto& x : v_) x += s;
        return *this;
    }

private:
    Grid grid_;
    std::vector<T> v_;
};

template <typename T>
Lattice<T> operator+(Lattice<T> a, const Lattice<T>& b) { return a += b; }
template <typename T>
Lattice<T> operator-(Lattice<T> a, const Lattice<T>& b) { return a -= b; }
template <typename T>
Lattice<T> operator*(Lattice<T> a, const Lattice<T>& b) { return a *= b; }
template <typename T>
Lattice<T> operator*(Lattice<T> a, T s) { return a *= s; }
template <typename T>
Lattice<T> operator*(T s, Lattice<T> a) { return a *= s; }

using ScalarField = Lattice<double>;
using Wavefunction = Lattice<cplx>;

struct VectorField {
    Grid grid;
    std::vector<ScalarField> components;

    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g), components(g.dims(), ScalarField(g)) {}

    std::size_t dims() const { return components.size(); }
    ScalarField norm_squared() const;
};

// Throws NonFiniteError naming the first offending node.
void ensure_finite(const ScalarField& f, const std::string& what);
void ensure_finite(const Wavefunction& f, const std::string& what);

double max_abs(const ScalarField& f);
double max_abs(const ScalarField& a, const ScalarField& b);

ScalarField density_of(const Wavefunction& psi);

}  // namespace qh
