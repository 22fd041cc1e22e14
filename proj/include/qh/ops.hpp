#pragma once

#include "qh/field.hpp"

namespace qh {

// Spectral on periodic axes; 4th-order central differences with one-sided
// 4th-order closures at the two outermost nodes of dirichlet axes.
ScalarField derivative(const ScalarField& f, std::size_t axis);
ScalarField second_derivative(const ScalarField& f, std::size_t axis);

VectorField gradient(const ScalarField& f);
ScalarField laplacian(const ScalarField& f);
ScalarField divergence(const VectorField& v);

// Trapezoidal weights on dirichlet axes, rectangle rule on periodic axes.
double integrate(const ScalarField& f);
cplx integrate(const Wavefunction& f);
ScalarField quadrature_weights(const Grid& g);

// Discrete norms over all nodes using the quadrature weights.
double l2_norm(const ScalarField& f);
double relative_l2(const ScalarField& a, const ScalarField& reference);
double relative_linf(const ScalarField& a, const ScalarField& reference);
double l1_distance(const ScalarField& a, const ScalarField& b);

// Dirichlet grid over nodes [first_a, first_a + count_a) of g on every axis.
Grid window(const Grid& g, const std::vector<std::size_t>& first, const std::vector<std::size_t>& count);

// Values of f at the nodes of `sub`, each of which must coincide with a node of f's grid
// (periodic axes wrap). Throws GridMismatch otherwise.
ScalarField restrict_to(const ScalarField& f, const Grid& sub);

}  // namespace qh
