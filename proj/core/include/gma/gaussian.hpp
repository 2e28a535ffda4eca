#pragma once

// Gauss-Hermite quadrature against the standard Gaussian measure, finite
// difference stencils and the Ornstein-Uhlenbeck semigroup (Mehler form).

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gma {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Density;

/// Nodes and weights for expectations against the standard Gaussian on R^dim.
/// Nodes are stored row-major: node k occupies nodes[k*dim .. k*dim+dim).
class QuadratureRule {
 public:
  QuadratureRule(int dim, std::vector<double> nodes, std::vector<double> weights);

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  /// Per-axis order for tensor rules (size for 1D rules).
  int order() const { return order_; }

  std::span<const double> node(std::size_t k) const {
    return {nodes_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  Vec point(std::size_t k) const;
  double weight(std::size_t k) const { return weights_[k]; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  friend QuadratureRule tensor_rule(const QuadratureRule&, int);
  friend QuadratureRule adapted_rule(const Density&, int);
  int dim_;
  int order_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Probabilists' Gauss-Hermite rule (weight e^{-x^2/2}/sqrt(2 pi)), 1 <= order <= 512.
/// Nodes come from the Golub-Welsch eigenproblem; weights from the Christoffel
/// sum of orthonormal Hermite polynomials. Weights below the smallest normal
/// double (orders above ~370) are stored as 0.
QuadratureRule hermite_rule(int order);

/// Full tensor product of a 1D rule. Throws ResourceLimitError above 1e7 nodes.
QuadratureRule tensor_rule(const QuadratureRule& rule1d, int dim);

/// Default rule used throughout: order 64 in 1D, 32 per axis in 2D, smaller
/// per-axis orders above that so the node count stays below ~3e5.
QuadratureRule default_rule(int dim);

using ScalarFn = std::function<double(const Vec&)>;

/// Sum of w_k f(x_k) with a fixed pairwise (tree) reduction order.
/// Throws EvaluationError naming the node if f is non-finite there.
double expectation(const ScalarFn& f, const QuadratureRule& rule);

/// Pairwise summation of a sequence; the association order depends only on the length.
double pairwise_sum(std::span<const double> values);

/// T_t g(x) = int g(e^{-t} x + sqrt(1 - e^{-2t}) y) gamma(dy), tensor quadrature in y.
/// t = 0 returns g(x) without quadrature. Throws InvalidArgument for t < 0.
double ou_apply(const Density& g, double t, const Vec& x, const QuadratureRule& rule1d);

/// Mehler average of an arbitrary field.
double ou_apply(const ScalarFn& f, int dim, double t, const Vec& x, const QuadratureRule& rule1d);

enum class FDScheme { Central2, Central4 };

/// Central finite-difference stencil for first derivatives.
struct FDStencil {
  double step = 1e-3;
  FDScheme scheme = FDScheme::Central4;

  FDStencil() = default;
  FDStencil(double step, FDScheme scheme);

  /// d/dx_i f(x).
  double derivative(const ScalarFn& f, const Vec& x, int i) const;
  /// Generic directional derivative of a vector/matrix valued map.
  template <typename F>
  auto derivative_of(const F& f, const Vec& x, int i) const -> decltype(f(x));
};

template <typename F>
auto FDStencil::derivative_of(const F& f, const Vec& x, int i) const -> decltype(f(x)) {
  auto shifted = [&](double s) {
    Vec y = x;
    y[i] += s;
    return f(y);
  };
  using R = decltype(f(x));
  if (scheme == FDScheme::Central2) {
    return R((shifted(step) - shifted(-step)) * (1.0 / (2.0 * step)));
  }
  return R((shifted(-2 * step) - shifted(2 * step) + (shifted(step) - shifted(-step)) * 8.0) *
           (1.0 / (12.0 * step)));
}

}  // namespace gma
