#pragma once

// Optimal transport maps T = I + grad phi sending g.gamma to gamma.

#include "gma/density.hpp"
#include "gma/linalg.hpp"
#include "gma/operators.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gma {

enum class SolverTag { ClosedForm1D, Product, LinearGaussian, Entropic2D };
std::string to_string(SolverTag tag);

class TransportMap;

class TransportModel {
 public:
  virtual ~TransportModel() = default;
  virtual int dim() const = 0;
  virtual SolverTag tag() const = 0;
  /// phi normalized by phi(0) = 0.
  virtual double phi(const Vec& x) const = 0;
  virtual Vec grad_phi(const Vec& x) const = 0;
  virtual SymMatrix hess_phi(const Vec& x) const = 0;
  virtual bool has_third() const { return true; }
  /// d/dx_i of D^2 phi.
  virtual SymMatrix third(const Vec& x, int i) const = 0;
  virtual double accuracy_class() const = 0;
  /// Inverse map S with S o T = id, when available in closed form or by 1D root finding.
  virtual std::shared_ptr<const TransportModel> inverse() const { return nullptr; }
};

/// Value-type handle over a solved transport.
class TransportMap {
 public:
  explicit TransportMap(std::shared_ptr<const TransportModel> model);

  int dim() const { return model_->dim(); }
  SolverTag solver_tag() const { return model_->tag(); }
  double accuracy_class() const { return model_->accuracy_class(); }
  bool has_third() const { return model_->has_third(); }
  bool invertible() const { return model_->inverse() != nullptr; }

  double phi(const Vec& x) const { return model_->phi(x); }
  Vec grad_phi(const Vec& x) const { return model_->grad_phi(x); }
  SymMatrix hess_phi(const Vec& x) const { return model_->hess_phi(x); }
  /// Throws SolverError when the solver does not expose third derivatives.
  SymMatrix third(const Vec& x, int i) const;

  /// T(x) = x + grad phi(x).
  Vec apply(const Vec& x) const { return x + grad_phi(x); }
  /// D^2 Phi = I + D^2 phi.
  SymMatrix hess_Phi(const Vec& x) const;
  /// phi as a ScalarField with analytic gradient and Hessian.
  ScalarField potential() const;

  const TransportModel& model() const { return *model_; }
  std::shared_ptr<const TransportModel> shared_model() const { return model_; }

 private:
  std::shared_ptr<const TransportModel> model_;
};

TransportMap solve_1d(const Density& g);
TransportMap solve_product(const Density& g);
TransportMap solve_gaussian_linear(const SymMatrix& sigma);

struct GridSpec {
  /// Box half-width; <= 0 picks the smallest L >= 5 (step 0.5, at most 12)
  /// for which both marginals lose less than max_truncation_mass outside the box.
  double half_width = 0.0;
  int points = 128;
  double max_truncation_mass = 1e-6;
};

struct EntropicOptions {
  double eps = 0.01;
  GridSpec grid;
  double eps_start = 0.5;
  double tolerance = 1e-9;  // L1 marginal residual
  int max_iters = 20000;
  double accuracy_class = 5e-2;
};

struct SinkhornStats {
  int iterations = 0;
  double marginal_residual = 0.0;
  double half_width = 0.0;
  std::vector<double> eps_schedule;
};

/// Log-domain Sinkhorn with eps-scaling on a tensor grid; the map is the
/// entropic barycentric projection grad Phi(x) = E[y | x], D^2 Phi = Cov[y | x] / eps.
TransportMap solve_entropic_2d(const Density& g, const EntropicOptions& opt = {},
                               SinkhornStats* stats = nullptr);

/// S = T^{-1}; throws SolverError when T has no inverse.
TransportMap invert(const TransportMap& t);

/// 1D -> solve_1d, product -> solve_product, Gaussian covariance -> linear,
/// other 2D -> entropic. Throws InvalidArgument otherwise.
TransportMap solve_auto(const Density& g, const EntropicOptions& entropic = {});

/// Versioned CSV of x, grad phi, D^2 phi on a grid over [-half_width, half_width]^dim (dim <= 2).
std::string map_to_csv(const TransportMap& t, double half_width, int points);

}  // namespace gma
