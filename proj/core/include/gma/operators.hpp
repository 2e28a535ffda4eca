#pragma once

// Ornstein-Uhlenbeck operator on potentials and the Gaussian integration by parts residual.

#include "gma/density.hpp"
#include "gma/gaussian.hpp"
#include "gma/linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gma {

/// A scalar field with optional derivative access. Missing derivatives are
/// replaced by finite differences of the next lower level.
struct ScalarField {
  int dim = 1;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<SymMatrix(const Vec&)> hess;
  std::string name;

  Vec gradient_at(const Vec& x, const FDStencil& fd = {}) const;
  SymMatrix hessian_at(const Vec& x, const FDStencil& fd = {}) const;
};

/// L phi(x) = Laplacian phi(x) - <x, grad phi(x)>.
double ou_operator(const ScalarField& phi, const Vec& x, const FDStencil& fd = {});
/// Same with the derivatives already at hand.
double ou_operator(const Vec& x, const Vec& grad, const SymMatrix& hess);

/// int xi_{x_i} f g dgamma - [ -int xi f_{x_i} g dgamma + int xi f (x_i - g_{x_i}/g) g dgamma ].
double ibp_residual(const ScalarField& f, int i, const Density& g, const ScalarField& xi,
                    const QuadratureRule& rule);

/// Polynomial test functions {1, x1, x1^2, x1 x2} (x1^3 replaces x1 x2 in 1D).
std::vector<ScalarField> polynomial_test_functions(int dim);

/// Polynomial test functions multiplied by a C^2 bump equal to 1 on |x| <= r0
/// and vanishing for |x| >= r1.
std::vector<ScalarField> bumped_test_functions(int dim, double r0 = 5.0, double r1 = 6.0);

ScalarField constant_field(int dim, double c);
ScalarField linear_field(const Vec& a);
/// 0.5 x^T A x.
ScalarField quadratic_field(const SymMatrix& a);

}  // namespace gma
