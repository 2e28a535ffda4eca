#pragma once

// Probability densities g with respect to the standard Gaussian measure, with
// access to log g and its first two derivatives.

#include "gma/gaussian.hpp"
#include "gma/linalg.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gma {

/// log g and its gradient/Hessian at a point. Entries beyond the requested
/// order are left empty.
struct LogJet {
  double log_value = 0.0;
  Vec grad;  // grad log g
  Mat hess;  // D^2 log g
  bool floored = false;  // log taken of a value clamped at kDensityFloor
};

inline constexpr double kDensityFloor = 1e-300;

struct AnalyticFlags {
  bool grad = true;
  bool hess = true;
};

class Density;

/// One Gaussian piece N(mean, cov) of the measure g.gamma.
struct GaussianComponent {
  double weight = 1.0;
  Vec mean;
  SymMatrix cov;
};

class DensityModel {
 public:
  virtual ~DensityModel() = default;
  virtual int dim() const = 0;
  virtual std::string family() const = 0;
  virtual std::string describe() const { return family(); }
  /// order 0: value only, 1: + gradient, 2: + Hessian.
  virtual LogJet log_jet(const Vec& x, int order) const = 0;
  virtual AnalyticFlags flags() const { return {}; }
  /// One-dimensional factors when g(x) = prod_i g_i(x_i).
  virtual const std::vector<Density>* factors() const { return nullptr; }
  /// Covariance when g.gamma is a centered Gaussian N(0, Sigma).
  virtual std::optional<SymMatrix> gaussian_covariance() const { return std::nullopt; }
  /// True when the optimal map to gamma is affine (Gaussian families and their products).
  virtual bool affine_transport() const { return false; }
  /// g.gamma as a finite Gaussian mixture; empty when no such form is known.
  virtual std::vector<GaussianComponent> components() const {
    if (auto c = gaussian_covariance()) return {{1.0, Vec::Zero(dim()), *c}};
    return {};
  }
};

/// Immutable handle to a density model; cheap to copy, safe to share across threads.
class Density {
 public:
  explicit Density(std::shared_ptr<const DensityModel> model);

  int dim() const { return model_->dim(); }
  std::string family() const { return model_->family(); }
  std::string describe() const { return model_->describe(); }
  AnalyticFlags flags() const { return model_->flags(); }
  const DensityModel& model() const { return *model_; }

  LogJet jet(const Vec& x, int order = 2) const;
  double value(const Vec& x) const;
  double log_value(const Vec& x) const;
  Vec grad(const Vec& x) const;
  SymMatrix hess(const Vec& x) const;
  Vec grad_log(const Vec& x) const;
  SymMatrix hess_log(const Vec& x) const;

  bool has_product_structure() const { return model_->factors() != nullptr; }
  /// Throws InvalidArgument when there is no product structure.
  const std::vector<Density>& factors() const;
  std::optional<SymMatrix> gaussian_covariance() const { return model_->gaussian_covariance(); }
  bool affine_transport() const { return model_->affine_transport(); }
  std::vector<GaussianComponent> components() const { return model_->components(); }

  // Scalar convenience for one-dimensional densities.
  double value1(double x) const;
  LogJet jet1(double x, int order = 2) const;

 private:
  std::shared_ptr<const DensityModel> model_;
};

/// v = -log g with v_ij = -g_ij/g + g_i g_j / g^2.
class LogDensity {
 public:
  explicit LogDensity(Density g) : g_(std::move(g)) {}
  double v(const Vec& x) const { return -g_.log_value(x); }
  Vec grad_v(const Vec& x) const { return -g_.grad_log(x); }
  SymMatrix hess_v(const Vec& x) const { return g_.hess_log(x) * -1.0; }
  const Density& density() const { return g_; }

 private:
  Density g_;
};

Density make_constant(int dim);
/// g(x) = exp(<a,x> - |a|^2/2): gamma translated by a.
Density make_shift(const Vec& a);
/// Centered Gaussian with covariance diag(sigma_i^2); each sigma_i in [0.2, 5].
Density make_scaling(const Vec& sigmas);
/// N(0, Sigma) relative to gamma; eigenvalues of Sigma must lie in [0.04, 25].
Density make_gaussian_cov(const SymMatrix& sigma);
/// Gaussian mixture on R divided by the standard normal density.
/// weights sum to 1, means in [-3, 3], sds in [0.3, 3].
Density make_mixture_1d(const std::vector<double>& weights, const std::vector<double>& means,
                        const std::vector<double>& sds);
/// g(x) = prod_i factors[i](x_i); every factor must be one-dimensional.
Density make_product(std::vector<Density> factors);
/// Density from log g only; derivatives by finite differences (flags report it).
Density make_from_log(int dim, std::function<double(const Vec&)> log_g, std::string name,
                      FDStencil fd = {});

/// E^n g: integrates coordinates n+1..dim against their Gaussian factors.
/// Exact for product densities, quadrature (order 32 per integrated axis) otherwise.
Density conditional_expectation(const Density& g, int n);

/// g_t = T_t g via Mehler quadrature; derivatives through the semigroup
/// commutation grad T_t g = e^{-t} T_t grad g. Products are smoothed factorwise.
Density ou_smooth(const Density& g, double t);

/// int |grad g|^2 / g dgamma by quadrature. Throws EvaluationError if g <= 0 at a node.
/// Expectations against gamma placed where g.gamma lives: for each Gaussian
/// component N(m, C) the Hermite nodes x = m + C^{1/2} y with weights
/// w_c w(y) / g(x). Exact for g = 1 times polynomials when g.gamma is Gaussian;
/// the plain Hermite rule when g has no component form (or too many components).
/// order 0 uses default_rule's per-axis order.
QuadratureRule adapted_rule(const Density& g, int order = 0);

double fisher_info(const Density& g, const QuadratureRule& rule);
/// int g log g dgamma by quadrature (0 log 0 := 0).
double entropy(const Density& g, const QuadratureRule& rule);
/// Same functionals with the default rule; product densities are summed factorwise.
double fisher_info(const Density& g);
double entropy(const Density& g);
/// Number of nodes whose log value hit the density floor.
std::size_t floored_nodes(const Density& g, const QuadratureRule& rule);

}  // namespace gma
