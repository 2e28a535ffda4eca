#include "gma/operators.hpp"

#include "gma/errors.hpp"

#include <cmath>

namespace gma {

Vec ScalarField::gradient_at(const Vec& x, const FDStencil& fd) const {
  if (grad) return grad(x);
  if (!value) throw EvaluationError("ScalarField " + name + ": no value or gradient");
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = fd.derivative(value, x, static_cast<int>(i));
  return g;
}

SymMatrix ScalarField::hessian_at(const Vec& x, const FDStencil& fd) const {
  if (hess) return hess(x);
  const auto n = x.size();
  Mat h(n, n);
  auto g = [&](const Vec& y) { return gradient_at(y, fd); };
  for (Eigen::Index i = 0; i < n; ++i) h.col(i) = fd.derivative_of(g, x, static_cast<int>(i));
  return SymMatrix(Mat(0.5 * (h + h.transpose())));
}

double ou_operator(const Vec& x, const Vec& grad, const SymMatrix& hess) {
  return hess.trace() - x.dot(grad);
}

double ou_operator(const ScalarField& phi, const Vec& x, const FDStencil& fd) {
  Vec g = phi.gradient_at(x, fd);
  SymMatrix h = phi.hessian_at(x, fd);
  double v = ou_operator(x, g, h);
  if (!std::isfinite(v)) throw EvaluationError("ou_operator: non-finite value for " + phi.name);
  return v;
}

double ibp_residual(const ScalarField& f, int i, const Density& g, const ScalarField& xi,
                    const QuadratureRule& rule) {
  if (i < 0 || i >= g.dim()) throw InvalidArgument("ibp_residual: coordinate index out of range");
  if (rule.dim() != g.dim()) throw InvalidArgument("ibp_residual: rule dimension mismatch");
  return expectation(
      [&](const Vec& x) {
        auto j = g.jet(x, 1);
        double gv = std::exp(j.log_value);
        double fv = f.value(x);
        double fi = f.gradient_at(x)[i];
        double xv = xi.value(x);
        double xii = xi.gradient_at(x)[i];
        double lhs = xii * fv * gv;
        double rhs = -xv * fi * gv + xv * fv * (x[i] - j.grad[i]) * gv;
        return lhs - rhs;
      },
      rule);
}

ScalarField constant_field(int dim, double c) {
  ScalarField f;
  f.dim = dim;
  f.name = "const";
  f.value = [c](const Vec&) { return c; };
  f.grad = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  f.hess = [dim](const Vec&) { return SymMatrix::zero(dim); };
  return f;
}

ScalarField linear_field(const Vec& a) {
  ScalarField f;
  f.dim = static_cast<int>(a.size());
  f.name = "linear";
  f.value = [a](const Vec& x) { return a.dot(x); };
  f.grad = [a](const Vec&) { return a; };
  f.hess = [n = f.dim](const Vec&) { return SymMatrix::zero(n); };
  return f;
}

ScalarField quadratic_field(const SymMatrix& a) {
  ScalarField f;
  f.dim = a.dim();
  f.name = "quadratic";
  f.value = [a](const Vec& x) { return 0.5 * x.dot(a.matrix() * x); };
  f.grad = [a](const Vec& x) { return Vec(a.matrix() * x); };
  f.hess = [a](const Vec&) { return a; };
  return f;
}

std::vector<ScalarField> polynomial_test_functions(int dim) {
  if (dim < 1) throw InvalidArgument("polynomial_test_functions: dimension must be positive");
  std::vector<ScalarField> out;
  out.push_back(constant_field(dim, 1.0));
  out.back().name = "1";

  ScalarField x1;
  x1.dim = dim;
  x1.name = "x1";
  x1.value = [](const Vec& x) { return x[0]; };
  x1.grad = [dim](const Vec&) {
    Vec g = Vec::Zero(dim);
    g[0] = 1.0;
    return g;
  };
  x1.hess = [dim](const Vec&) { return SymMatrix::zero(dim); };
  out.push_back(x1);

  ScalarField x1sq;
  x1sq.dim = dim;
  x1sq.name = "x1^2";
  x1sq.value = [](const Vec& x) { return x[0] * x[0]; };
  x1sq.grad = [dim](const Vec& x) {
    Vec g = Vec::Zero(dim);
    g[0] = 2.0 * x[0];
    return g;
  };
  x1sq.hess = [dim](const Vec&) {
    SymMatrix h(dim);
    h.set(0, 0, 2.0);
    return h;
  };
  out.push_back(x1sq);

  ScalarField last;
  last.dim = dim;
  if (dim >= 2) {
    last.name = "x1*x2";
    last.value = [](const Vec& x) { return x[0] * x[1]; };
    last.grad = [dim](const Vec& x) {
      Vec g = Vec::Zero(dim);
      g[0] = x[1];
      g[1] = x[0];
      return g;
    };
    last.hess = [dim](const Vec&) {
      SymMatrix h(dim);
      h.set(0, 1, 1.0);
      return h;
    };
  } else {
    last.name = "x1^3";
    last.value = [](const Vec& x) { return x[0] * x[0] * x[0]; };
    last.grad = [](const Vec& x) { return Vec(Vec::Constant(1, 3.0 * x[0] * x[0])); };
    last.hess = [](const Vec& x) {
      SymMatrix h(1);
      h.set(0, 0, 6.0 * x[0]);
      return h;
    };
  }
  out.push_back(last);
  return out;
}

std::vector<ScalarField> bumped_test_functions(int dim, double r0, double r1) {
  if (!(r1 > r0 && r0 >= 0.0)) throw InvalidArgument("bumped_test_functions: need 0 <= r0 < r1");
  // Quintic smoothstep: C^2 across both ends of the transition band.
  auto bump = [r0, r1](const Vec& x, Vec* grad) {
    double r = x.norm();
    if (grad) grad->setZero(x.size());
    if (r <= r0) return 1.0;
    if (r >= r1) return 0.0;
    double w = r1 - r0;
    double s = (r - r0) / w;
    if (grad) *grad = (-30.0 * s * s * (1 - s) * (1 - s) / w / r) * x;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  };
  std::vector<ScalarField> out;
  for (auto& p : polynomial_test_functions(dim)) {
    ScalarField f;
    f.dim = dim;
    f.name = p.name + "*bump";
    f.value = [p, bump](const Vec& x) { return p.value(x) * bump(x, nullptr); };
    f.grad = [p, bump](const Vec& x) {
      Vec db;
      double b = bump(x, &db);
      return Vec(p.grad(x) * b + p.value(x) * db);
    };
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace gma
