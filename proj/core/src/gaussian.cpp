#include "gma/gaussian.hpp"

#include "gma/density.hpp"
#include "gma/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace gma {

QuadratureRule::QuadratureRule(int dim, std::vector<double> nodes, std::vector<double> weights)
    : dim_(dim), order_(static_cast<int>(weights.size())), nodes_(std::move(nodes)),
      weights_(std::move(weights)) {
  if (dim_ < 1) throw InvalidArgument("quadrature rule dimension must be positive");
  if (nodes_.size() != weights_.size() * static_cast<std::size_t>(dim_)) {
    throw InvalidArgument("quadrature rule: node/weight size mismatch");
  }
}

Vec QuadratureRule::point(std::size_t k) const {
  auto s = node(k);
  return Eigen::Map<const Vec>(s.data(), dim_);
}

namespace {

// Orthonormal Hermite recurrence p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1),
// evaluated with a running scale so that large |x| and high orders do not overflow.
struct HermiteEval {
  double pn = 0.0;     // p_n(x) * exp(-log_scale)
  double pnm1 = 0.0;   // p_{n-1}(x) * exp(-log_scale)
  double sum_sq = 0.0; // sum_{k<n} p_k^2 * exp(-2 log_scale)
  double log_scale = 0.0;
};

HermiteEval hermite_eval(int n, double x) {
  HermiteEval e;
  double prev = 0.0;
  double cur = 1.0;
  double sum = 0.0;
  double log_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    sum += cur * cur;
    double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(k + 1.0);
    prev = cur;
    cur = next;
    double mag = std::max(std::abs(cur), std::abs(prev));
    if (mag > 1e100) {
      prev *= 1e-100;
      cur *= 1e-100;
      sum *= 1e-200;
      log_scale += 100.0 * std::log(10.0);
    }
  }
  e.pn = cur;
  e.pnm1 = prev;
  e.sum_sq = sum;
  e.log_scale = log_scale;
  return e;
}

QuadratureRule build_hermite(int order) {
  const int n = order;
  std::vector<double> x(n, 0.0);
  if (n > 1) {
    Mat j = Mat::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      j(k, k - 1) = std::sqrt(static_cast<double>(k));
      j(k - 1, k) = j(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(j, Eigen::EigenvaluesOnly);
    Vec ev = es.eigenvalues();
    for (int k = 0; k < n; ++k) x[k] = ev[k];
    // Newton polish on p_n, using p_n' = sqrt(n) p_{n-1}.
    for (int k = 0; k < n; ++k) {
      for (int it = 0; it < 2; ++it) {
        auto e = hermite_eval(n, x[k]);
        if (e.pnm1 == 0.0) break;
        x[k] -= e.pn / (std::sqrt(static_cast<double>(n)) * e.pnm1);
      }
    }
    for (int k = 0; k < n / 2; ++k) {
      double m = 0.5 * (x[n - 1 - k] - x[k]);
      x[k] = -m;
      x[n - 1 - k] = m;
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
  }
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) {
    auto e = hermite_eval(n, x[k]);
    w[k] = std::exp(-std::log(e.sum_sq) - 2.0 * e.log_scale);
  }
  double total = pairwise_sum(w);
  for (auto& v : w) v /= total;
  for (int k = 0; k < n / 2; ++k) {
    double m = 0.5 * (w[k] + w[n - 1 - k]);
    w[k] = m;
    w[n - 1 - k] = m;
  }
  return QuadratureRule(1, std::move(x), std::move(w));
}

}  // namespace

QuadratureRule hermite_rule(int order) {
  if (order < 1 || order > 512) {
    throw InvalidArgument("hermite_rule: order must be in [1, 512], got " + std::to_string(order));
  }
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_hermite(order)).first;
  return it->second;
}

QuadratureRule tensor_rule(const QuadratureRule& rule1d, int dim) {
  if (rule1d.dim() != 1) throw InvalidArgument("tensor_rule: input rule must be one-dimensional");
  if (dim < 1) throw InvalidArgument("tensor_rule: dimension must be positive");
  if (dim == 1) return rule1d;
  const std::size_t m = rule1d.size();
  double count = std::pow(static_cast<double>(m), dim);
  if (count > 1e7) {
    throw ResourceLimitError("tensor_rule: " + std::to_string(m) + "^" + std::to_string(dim) +
                             " nodes exceeds the 1e7 cap");
  }
  const std::size_t total = static_cast<std::size_t>(count + 0.5);
  std::vector<double> nodes(total * dim);
  std::vector<double> weights(total);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t k = 0; k < total; ++k) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      nodes[k * dim + d] = rule1d.nodes()[idx[d]];
      w *= rule1d.weights()[idx[d]];
    }
    weights[k] = w;
    // last axis fastest
    for (int d = dim - 1; d >= 0; --d) {
      if (++idx[d] < m) break;
      idx[d] = 0;
    }
  }
  QuadratureRule r(dim, std::move(nodes), std::move(weights));
  r.order_ = rule1d.order();
  return r;
}

QuadratureRule default_rule(int dim) {
  static const int orders[] = {0, 64, 32, 16, 10, 8, 6};
  if (dim < 1) throw InvalidArgument("default_rule: dimension must be positive");
  int order = dim <= 6 ? orders[dim] : 3;
  return tensor_rule(hermite_rule(order), dim);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

double expectation(const ScalarFn& f, const QuadratureRule& rule) {
  std::vector<double> terms(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    if (rule.weight(k) == 0.0) continue;  // underflowed weight: the node carries no mass
    Vec x = rule.point(k);
    double fx = f(x);
    if (!std::isfinite(fx)) {
      std::ostringstream os;
      os << "expectation: non-finite integrand " << fx << " at node " << k << " = (";
      for (int d = 0; d < rule.dim(); ++d) os << (d ? ", " : "") << x[d];
      os << ")";
      throw EvaluationError(os.str());
    }
    terms[k] = rule.weight(k) * fx;
  }
  return pairwise_sum(terms);
}

double ou_apply(const ScalarFn& f, int dim, double t, const Vec& x, const QuadratureRule& rule1d) {
  if (!(t >= 0.0)) throw InvalidArgument("ou_apply: t must be nonnegative");
  if (t == 0.0) return f(x);
  const double a = std::exp(-t);
  const double s = std::sqrt(-std::expm1(-2.0 * t));
  auto rule = tensor_rule(rule1d, dim);
  return expectation([&](const Vec& y) { return f(a * x + s * y); }, rule);
}

double ou_apply(const Density& g, double t, const Vec& x, const QuadratureRule& rule1d) {
  return ou_apply([&](const Vec& z) { return g.value(z); }, g.dim(), t, x, rule1d);
}

FDStencil::FDStencil(double step_, FDScheme scheme_) : step(step_), scheme(scheme_) {
  if (!(step_ > 0.0)) throw InvalidArgument("FDStencil: step must be positive");
}

double FDStencil::derivative(const ScalarFn& f, const Vec& x, int i) const {
  return derivative_of(f, x, i);
}

}  // namespace gma
