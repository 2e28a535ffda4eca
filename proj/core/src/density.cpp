#include "gma/density.hpp"

#include "gma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gma {

Density::Density(std::shared_ptr<const DensityModel> model) : model_(std::move(model)) {
  if (!model_) throw InvalidArgument("Density: null model");
}

LogJet Density::jet(const Vec& x, int order) const {
  if (x.size() != dim()) {
    throw InvalidArgument("Density: point of dimension " + std::to_string(x.size()) +
                          " passed to a density on R^" + std::to_string(dim()));
  }
  return model_->log_jet(x, order);
}

double Density::log_value(const Vec& x) const { return jet(x, 0).log_value; }
double Density::value(const Vec& x) const { return std::exp(log_value(x)); }

Vec Density::grad_log(const Vec& x) const { return jet(x, 1).grad; }
SymMatrix Density::hess_log(const Vec& x) const { return SymMatrix(jet(x, 2).hess); }

Vec Density::grad(const Vec& x) const {
  auto j = jet(x, 1);
  return std::exp(j.log_value) * j.grad;
}

SymMatrix Density::hess(const Vec& x) const {
  auto j = jet(x, 2);
  return SymMatrix(Mat(std::exp(j.log_value) * (j.hess + j.grad * j.grad.transpose())));
}

const std::vector<Density>& Density::factors() const {
  auto f = model_->factors();
  if (!f) throw InvalidArgument("Density: " + describe() + " has no product structure");
  return *f;
}

double Density::value1(double x) const { return value(Vec::Constant(1, x)); }
LogJet Density::jet1(double x, int order) const { return jet(Vec::Constant(1, x), order); }

namespace {

LogJet zero_jet(int dim, int order) {
  LogJet j;
  if (order >= 1) j.grad = Vec::Zero(dim);
  if (order >= 2) j.hess = Mat::Zero(dim, dim);
  return j;
}

std::string fmt_vec(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ")";
  return os.str();
}

// Beyond this many Gaussian pieces adapted_rule falls back to the plain Hermite rule.
constexpr std::size_t kMaxComponents = 64;

class ConstantModel : public DensityModel {
 public:
  explicit ConstantModel(int dim) : dim_(dim) {
    if (dim_ >= 2) {
      for (int i = 0; i < dim_; ++i) factors_.emplace_back(std::make_shared<ConstantModel>(1));
    }
  }
  int dim() const override { return dim_; }
  std::string family() const override { return "constant"; }
  LogJet log_jet(const Vec&, int order) const override { return zero_jet(dim_, order); }
  const std::vector<Density>* factors() const override {
    return factors_.empty() ? nullptr : &factors_;
  }
  std::optional<SymMatrix> gaussian_covariance() const override {
    return SymMatrix::identity(dim_);
  }
  bool affine_transport() const override { return true; }

 private:
  int dim_;
  std::vector<Density> factors_;
};

class ShiftModel : public DensityModel {
 public:
  ShiftModel(Vec a, bool with_factors) : a_(std::move(a)) {
    if (with_factors && a_.size() >= 2) {
      for (Eigen::Index i = 0; i < a_.size(); ++i) {
        factors_.emplace_back(std::make_shared<ShiftModel>(Vec::Constant(1, a_[i]), false));
      }
    }
  }
  int dim() const override { return static_cast<int>(a_.size()); }
  std::string family() const override { return "shift"; }
  std::string describe() const override { return "shift" + fmt_vec(a_); }
  LogJet log_jet(const Vec& x, int order) const override {
    LogJet j = zero_jet(dim(), order);
    j.log_value = a_.dot(x) - 0.5 * a_.squaredNorm();
    if (order >= 1) j.grad = a_;
    return j;
  }
  const std::vector<Density>* factors() const override {
    return factors_.empty() ? nullptr : &factors_;
  }
  std::optional<SymMatrix> gaussian_covariance() const override {
    if (a_.isZero(0.0)) return SymMatrix::identity(dim());
    return std::nullopt;
  }
  bool affine_transport() const override { return true; }
  std::vector<GaussianComponent> components() const override {
    return {{1.0, a_, SymMatrix::identity(dim())}};
  }

 private:
  Vec a_;
  std::vector<Density> factors_;
};

class ScalingModel : public DensityModel {
 public:
  ScalingModel(Vec sigmas, bool with_factors) : s_(std::move(sigmas)) {
    c_ = s_.array().square().inverse().matrix();
    log_norm_ = -s_.array().log().sum();
    if (with_factors && s_.size() >= 2) {
      for (Eigen::Index i = 0; i < s_.size(); ++i) {
        factors_.emplace_back(std::make_shared<ScalingModel>(Vec::Constant(1, s_[i]), false));
      }
    }
  }
  int dim() const override { return static_cast<int>(s_.size()); }
  std::string family() const override { return "scaling"; }
  std::string describe() const override { return "scaling" + fmt_vec(s_); }
  LogJet log_jet(const Vec& x, int order) const override {
    LogJet j = zero_jet(dim(), order);
    // log g = sum_i -log s_i + (1 - 1/s_i^2) x_i^2 / 2
    Vec k = (1.0 - c_.array()).matrix();
    j.log_value = log_norm_ + 0.5 * (k.array() * x.array().square()).sum();
    if (order >= 1) j.grad = (k.array() * x.array()).matrix();
    if (order >= 2) j.hess = k.asDiagonal();
    return j;
  }
  const std::vector<Density>* factors() const override {
    return factors_.empty() ? nullptr : &factors_;
  }
  std::optional<SymMatrix> gaussian_covariance() const override {
    return SymMatrix::diagonal(s_.array().square().matrix());
  }
  bool affine_transport() const override { return true; }

 private:
  Vec s_;
  Vec c_;
  double log_norm_ = 0.0;
  std::vector<Density> factors_;
};

class GaussianCovModel : public DensityModel {
 public:
  explicit GaussianCovModel(const SymMatrix& sigma) : sigma_(sigma) {
    auto sd = sigma.eigen();
    double lo = sd.values[sd.values.size() - 1];
    double hi = sd.values[0];
    if (!(lo > 0.0)) throw InvalidArgument("make_gaussian_cov: Sigma is not positive definite");
    if (lo < 0.04 - 1e-12 || hi > 25.0 + 1e-12) {
      throw InvalidArgument("make_gaussian_cov: eigenvalues of Sigma must lie in [0.04, 25]");
    }
    inv_ = spd_inverse(sigma);
    log_norm_ = -0.5 * sd.values.array().log().sum();
    k_ = (Mat::Identity(dim(), dim()) - inv_.matrix());
    bool diag = true;
    for (int i = 0; i < dim(); ++i)
      for (int j = i + 1; j < dim(); ++j) diag = diag && sigma(i, j) == 0.0;
    if (diag && dim() >= 2) {
      for (int i = 0; i < dim(); ++i) {
        factors_.emplace_back(
            std::make_shared<ScalingModel>(Vec::Constant(1, std::sqrt(sigma(i, i))), false));
      }
    }
  }
  int dim() const override { return sigma_.dim(); }
  std::string family() const override { return "gaussian"; }
  LogJet log_jet(const Vec& x, int order) const override {
    LogJet j = zero_jet(dim(), order);
    Vec kx = k_ * x;
    j.log_value = log_norm_ + 0.5 * x.dot(kx);
    if (order >= 1) j.grad = kx;
    if (order >= 2) j.hess = k_;
    return j;
  }
  const std::vector<Density>* factors() const override {
    return factors_.empty() ? nullptr : &factors_;
  }
  std::optional<SymMatrix> gaussian_covariance() const override { return sigma_; }
  bool affine_transport() const override { return true; }

 private:
  SymMatrix sigma_;
  SymMatrix inv_;
  Mat k_;
  double log_norm_ = 0.0;
  std::vector<Density> factors_;
};

class MixtureModel : public DensityModel {
 public:
  MixtureModel(std::vector<double> w, std::vector<double> m, std::vector<double> s) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] == 0.0) continue;
      log_w_.push_back(std::log(w[k]));
      means_.push_back(m[k]);
      sds_.push_back(s[k]);
    }
    std::ostringstream os;
    os << "mixture(";
    for (std::size_t k = 0; k < w.size(); ++k) {
      os << (k ? ";" : "") << w[k] << "," << m[k] << "," << s[k];
    }
    os << ")";
    name_ = os.str();
  }
  int dim() const override { return 1; }
  std::string family() const override { return "mixture"; }
  std::string describe() const override { return name_; }
  LogJet log_jet(const Vec& xv, int order) const override {
    const double x = xv[0];
    const std::size_t n = log_w_.size();
    std::vector<double> l(n), d1(n), d2(n);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      double z = (x - means_[k]) / sds_[k];
      l[k] = log_w_[k] - std::log(sds_[k]) - 0.5 * z * z + 0.5 * x * x;
      d1[k] = -z / sds_[k] + x;
      d2[k] = 1.0 - 1.0 / (sds_[k] * sds_[k]);
      mx = std::max(mx, l[k]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += std::exp(l[k] - mx);
    LogJet j = zero_jet(1, order);
    j.log_value = mx + std::log(sum);
    if (order >= 1) {
      double g1 = 0.0, g2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        double r = std::exp(l[k] - mx) / sum;
        g1 += r * d1[k];
        g2 += r * (d2[k] + d1[k] * d1[k]);
      }
      j.grad[0] = g1;
      if (order >= 2) j.hess(0, 0) = g2 - g1 * g1;
    }
    return j;
  }
  std::vector<GaussianComponent> components() const override {
    std::vector<GaussianComponent> out;
    for (std::size_t k = 0; k < log_w_.size(); ++k) {
      out.push_back({std::exp(log_w_[k]), Vec::Constant(1, means_[k]),
                     SymMatrix::diagonal(Vec::Constant(1, sds_[k] * sds_[k]))});
    }
    return out;
  }

 private:
  std::vector<double> log_w_, means_, sds_;
  std::string name_;
};

class ProductModel : public DensityModel {
 public:
  explicit ProductModel(std::vector<Density> f) : f_(std::move(f)) {}
  int dim() const override { return static_cast<int>(f_.size()); }
  std::string family() const override { return "product"; }
  std::string describe() const override {
    std::string s = "product(";
    for (std::size_t i = 0; i < f_.size(); ++i) s += (i ? "," : "") + f_[i].describe();
    return s + ")";
  }
  LogJet log_jet(const Vec& x, int order) const override {
    LogJet j = zero_jet(dim(), order);
    for (int i = 0; i < dim(); ++i) {
      auto fj = f_[i].jet1(x[i], order);
      j.log_value += fj.log_value;
      j.floored = j.floored || fj.floored;
      if (order >= 1) j.grad[i] = fj.grad[0];
      if (order >= 2) j.hess(i, i) = fj.hess(0, 0);
    }
    return j;
  }
  AnalyticFlags flags() const override {
    AnalyticFlags fl;
    for (auto& f : f_) {
      fl.grad = fl.grad && f.flags().grad;
      fl.hess = fl.hess && f.flags().hess;
    }
    return fl;
  }
  const std::vector<Density>* factors() const override { return &f_; }
  std::optional<SymMatrix> gaussian_covariance() const override {
    Vec d(dim());
    for (int i = 0; i < dim(); ++i) {
      auto c = f_[i].gaussian_covariance();
      if (!c) return std::nullopt;
      d[i] = (*c)(0, 0);
    }
    return SymMatrix::diagonal(d);
  }
  std::vector<GaussianComponent> components() const override {
    std::vector<GaussianComponent> out = {{1.0, Vec(0), SymMatrix(0)}};
    for (const auto& f : f_) {
      auto fc = f.components();
      if (fc.empty() || out.size() * fc.size() > kMaxComponents) return {};
      std::vector<GaussianComponent> next;
      for (const auto& a : out) {
        for (const auto& b : fc) {
          const int n = a.mean.size();
          Vec m(n + 1);
          m << a.mean, b.mean;
          Mat c = Mat::Zero(n + 1, n + 1);
          if (n > 0) c.topLeftCorner(n, n) = a.cov.matrix();
          c(n, n) = b.cov(0, 0);
          next.push_back({a.weight * b.weight, m, SymMatrix(c)});
        }
      }
      out = std::move(next);
    }
    return out;
  }
  bool affine_transport() const override {
    return std::all_of(f_.begin(), f_.end(), [](const Density& f) { return f.affine_transport(); });
  }

 private:
  std::vector<Density> f_;
};

class LogFunctionModel : public DensityModel {
 public:
  LogFunctionModel(int dim, std::function<double(const Vec&)> f, std::string name, FDStencil fd)
      : dim_(dim), f_(std::move(f)), name_(std::move(name)), fd_(fd) {}
  int dim() const override { return dim_; }
  std::string family() const override { return "custom"; }
  std::string describe() const override { return name_; }
  LogJet log_jet(const Vec& x, int order) const override {
    LogJet j = zero_jet(dim_, order);
    j.log_value = f_(x);
    if (!std::isfinite(j.log_value) && j.log_value < 0) {
      j.log_value = std::log(kDensityFloor);
      j.floored = true;
    }
    auto grad = [&](const Vec& y) {
      Vec g(dim_);
      for (int i = 0; i < dim_; ++i) g[i] = fd_.derivative(f_, y, i);
      return g;
    };
    if (order >= 1) j.grad = grad(x);
    if (order >= 2) {
      Mat h(dim_, dim_);
      for (int i = 0; i < dim_; ++i) h.col(i) = fd_.derivative_of(grad, x, i);
      j.hess = 0.5 * (h + h.transpose());
    }
    return j;
  }
  AnalyticFlags flags() const override { return {false, false}; }

 private:
  int dim_;
  std::function<double(const Vec&)> f_;
  std::string name_;
  FDStencil fd_;
};

// Self-normalized moments of log-jets at quadrature nodes:
// log sum_k w_k exp(l_k), E[grad l], E[D^2 l + grad l grad l^T] - E[grad l] E[grad l]^T.
struct JetAccumulator {
  std::vector<double> logw;
  std::vector<LogJet> jets;

  LogJet combine(int dim, int order, double grad_scale) const {
    LogJet out = zero_jet(dim, order);
    double mx = -std::numeric_limits<double>::infinity();
    for (double l : logw) mx = std::max(mx, l);
    if (!std::isfinite(mx)) {
      out.log_value = std::log(kDensityFloor);
      out.floored = true;
      return out;
    }
    std::vector<double> r(logw.size());
    for (std::size_t k = 0; k < logw.size(); ++k) r[k] = std::exp(logw[k] - mx);
    double sum = pairwise_sum(r);
    out.log_value = mx + std::log(sum);
    if (order >= 1) {
      Vec m1 = Vec::Zero(dim);
      Mat m2 = Mat::Zero(dim, dim);
      for (std::size_t k = 0; k < r.size(); ++k) {
        double p = r[k] / sum;
        if (p == 0.0) continue;
        Vec gk = jets[k].grad.head(dim);
        m1 += p * gk;
        if (order >= 2) m2 += p * (jets[k].hess.topLeftCorner(dim, dim) + gk * gk.transpose());
      }
      out.grad = grad_scale * m1;
      if (order >= 2) out.hess = grad_scale * grad_scale * (m2 - m1 * m1.transpose());
    }
    return out;
  }
};

class ConditionalModel : public DensityModel {
 public:
  ConditionalModel(Density g, int n) : g_(std::move(g)), n_(n) {
    rule_ = tensor_rule(hermite_rule(32), g_.dim() - n_);
    if (auto c = g_.gaussian_covariance()) {
      cov_ = SymMatrix(Mat(c->matrix().topLeftCorner(n_, n_)));
    }
  }
  int dim() const override { return n_; }
  std::string family() const override { return "conditional"; }
  std::string describe() const override {
    return "E^" + std::to_string(n_) + "[" + g_.describe() + "]";
  }
  LogJet log_jet(const Vec& x, int order) const override {
    const int d = g_.dim();
    JetAccumulator acc;
    acc.logw.resize(rule_.size());
    acc.jets.resize(rule_.size());
    Vec z(d);
    z.head(n_) = x;
    for (std::size_t k = 0; k < rule_.size(); ++k) {
      auto y = rule_.node(k);
      for (int i = 0; i < d - n_; ++i) z[n_ + i] = y[i];
      acc.jets[k] = g_.jet(z, order);
      double w = rule_.weight(k);
      acc.logw[k] = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) +
                    acc.jets[k].log_value;
    }
    return acc.combine(n_, order, 1.0);
  }
  AnalyticFlags flags() const override { return g_.flags(); }
  std::optional<SymMatrix> gaussian_covariance() const override { return cov_; }
  bool affine_transport() const override { return g_.affine_transport(); }
  // marginals of the components on the first n coordinates
  std::vector<GaussianComponent> components() const override {
    auto out = g_.components();
    for (auto& c : out) {
      c.mean = Vec(c.mean.head(n_));
      c.cov = SymMatrix(Mat(c.cov.matrix().topLeftCorner(n_, n_)));
    }
    return out;
  }

 private:
  Density g_;
  int n_;
  QuadratureRule rule_ = hermite_rule(1);
  std::optional<SymMatrix> cov_;
};

class OUModel : public DensityModel {
 public:
  OUModel(Density g, double t) : g_(std::move(g)), t_(t) {
    rule_ = default_rule(g_.dim());
    a_ = std::exp(-t);
    s_ = std::sqrt(-std::expm1(-2.0 * t));
    if (auto c = g_.gaussian_covariance()) {
      cov_ = SymMatrix(Mat(a_ * a_ * c->matrix() +
                           (1.0 - a_ * a_) * Mat::Identity(g_.dim(), g_.dim())));
    }
  }
  int dim() const override { return g_.dim(); }
  std::string family() const override { return "ou"; }
  std::string describe() const override {
    std::ostringstream os;
    os << "T_" << t_ << "[" << g_.describe() << "]";
    return os.str();
  }
  LogJet log_jet(const Vec& x, int order) const override {
    JetAccumulator acc;
    acc.logw.resize(rule_.size());
    acc.jets.resize(rule_.size());
    for (std::size_t k = 0; k < rule_.size(); ++k) {
      Vec z = a_ * x + s_ * rule_.point(k);
      acc.jets[k] = g_.jet(z, order);
      double w = rule_.weight(k);
      acc.logw[k] = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) +
                    acc.jets[k].log_value;
    }
    return acc.combine(dim(), order, a_);
  }
  AnalyticFlags flags() const override { return g_.flags(); }
  std::optional<SymMatrix> gaussian_covariance() const override { return cov_; }
  bool affine_transport() const override { return g_.affine_transport(); }
  // law of e^{-t} X + sqrt(1 - e^{-2t}) Y for X ~ g.gamma
  std::vector<GaussianComponent> components() const override {
    auto out = g_.components();
    const Mat id = Mat::Identity(dim(), dim());
    for (auto& c : out) {
      c.mean = Vec(a_ * c.mean);
      c.cov = SymMatrix(Mat(a_ * a_ * c.cov.matrix() + (1.0 - a_ * a_) * id));
    }
    return out;
  }

 private:
  Density g_;
  double t_;
  double a_ = 1.0;
  double s_ = 0.0;
  QuadratureRule rule_ = hermite_rule(1);
  std::optional<SymMatrix> cov_;
};

}  // namespace

Density make_constant(int dim) {
  if (dim < 1) throw InvalidArgument("make_constant: dimension must be positive");
  return Density(std::make_shared<ConstantModel>(dim));
}

Density make_shift(const Vec& a) {
  if (a.size() < 1) throw InvalidArgument("make_shift: empty shift vector");
  if (!a.allFinite()) throw InvalidArgument("make_shift: shift must be finite");
  return Density(std::make_shared<ShiftModel>(a, true));
}

Density make_scaling(const Vec& sigmas) {
  if (sigmas.size() < 1) throw InvalidArgument("make_scaling: empty sigma vector");
  for (double s : sigmas) {
    if (!(s >= 0.2 && s <= 5.0)) {
      throw InvalidArgument("make_scaling: sigma " + std::to_string(s) + " outside [0.2, 5]");
    }
  }
  return Density(std::make_shared<ScalingModel>(sigmas, true));
}

Density make_gaussian_cov(const SymMatrix& sigma) {
  if (sigma.dim() < 1) throw InvalidArgument("make_gaussian_cov: empty covariance");
  if (!sigma.matrix().allFinite()) throw InvalidArgument("make_gaussian_cov: non-finite entries");
  return Density(std::make_shared<GaussianCovModel>(sigma));
}

Density make_mixture_1d(const std::vector<double>& weights, const std::vector<double>& means,
                        const std::vector<double>& sds) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size()) {
    throw InvalidArgument("make_mixture_1d: weights, means and sds must be non-empty and equal length");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("make_mixture_1d: weights must be nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("make_mixture_1d: weights must sum to 1");
  }
  for (double m : means) {
    if (!(m >= -3.0 && m <= 3.0)) throw InvalidArgument("make_mixture_1d: mean outside [-3, 3]");
  }
  for (double s : sds) {
    if (!(s >= 0.3 && s <= 3.0)) throw InvalidArgument("make_mixture_1d: sd outside [0.3, 3]");
  }
  return Density(std::make_shared<MixtureModel>(weights, means, sds));
}

Density make_product(std::vector<Density> factors) {
  if (factors.empty()) throw InvalidArgument("make_product: no factors");
  for (auto& f : factors) {
    if (f.dim() != 1) throw InvalidArgument("make_product: factors must be one-dimensional");
  }
  return Density(std::make_shared<ProductModel>(std::move(factors)));
}

Density make_from_log(int dim, std::function<double(const Vec&)> log_g, std::string name,
                      FDStencil fd) {
  if (dim < 1) throw InvalidArgument("make_from_log: dimension must be positive");
  return Density(std::make_shared<LogFunctionModel>(dim, std::move(log_g), std::move(name), fd));
}

Density conditional_expectation(const Density& g, int n) {
  if (n < 1 || n > g.dim()) {
    throw InvalidArgument("conditional_expectation: n = " + std::to_string(n) +
                          " outside [1, " + std::to_string(g.dim()) + "]");
  }
  if (n == g.dim()) return g;
  if (g.has_product_structure()) {
    const auto& f = g.factors();
    if (n == 1) return f[0];
    return make_product(std::vector<Density>(f.begin(), f.begin() + n));
  }
  return Density(std::make_shared<ConditionalModel>(g, n));
}

Density ou_smooth(const Density& g, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("ou_smooth: t must be nonnegative");
  if (t == 0.0) return g;
  if (g.has_product_structure()) {
    std::vector<Density> f;
    for (auto& fi : g.factors()) f.push_back(ou_smooth(fi, t));
    return make_product(std::move(f));
  }
  return Density(std::make_shared<OUModel>(g, t));
}

double fisher_info(const Density& g, const QuadratureRule& rule) {
  if (rule.dim() != g.dim()) throw InvalidArgument("fisher_info: rule dimension mismatch");
  return expectation(
      [&](const Vec& x) {
        auto j = g.jet(x, 1);
        if (j.floored || !std::isfinite(j.log_value)) {
          throw EvaluationError("fisher_info: density is not positive at a quadrature node");
        }
        return std::exp(j.log_value) * j.grad.squaredNorm();
      },
      rule);
}

double entropy(const Density& g, const QuadratureRule& rule) {
  if (rule.dim() != g.dim()) throw InvalidArgument("entropy: rule dimension mismatch");
  return expectation(
      [&](const Vec& x) {
        double l = g.log_value(x);
        if (l == -std::numeric_limits<double>::infinity()) return 0.0;
        return std::exp(l) * l;
      },
      rule);
}

QuadratureRule adapted_rule(const Density& g, int order) {
  const int d = g.dim();
  QuadratureRule base = order > 0 ? tensor_rule(hermite_rule(order), d) : default_rule(d);
  auto comps = g.components();
  if (comps.empty() || comps.size() > kMaxComponents) return base;
  if (comps.size() == 1 && comps[0].mean.isZero(0.0) && comps[0].cov.matrix().isIdentity(0.0)) return base;
  if (comps.size() * base.size() > 10'000'000) {
    throw ResourceLimitError("adapted_rule: " + std::to_string(comps.size() * base.size()) +
                             " nodes exceeds the 1e7 cap");
  }
  std::vector<double> nodes, weights;
  nodes.reserve(comps.size() * base.nodes().size());
  weights.reserve(comps.size() * base.size());
  for (const auto& c : comps) {
    Mat a = spd_sqrt(c.cov).matrix();
    for (std::size_t k = 0; k < base.size(); ++k) {
      Vec x = c.mean + a * base.point(k);
      nodes.insert(nodes.end(), x.data(), x.data() + d);
      double w = base.weight(k);
      weights.push_back(w > 0.0 && c.weight > 0.0
                            ? std::exp(std::log(c.weight) + std::log(w) - g.log_value(x))
                            : 0.0);
    }
  }
  QuadratureRule r(d, std::move(nodes), std::move(weights));
  r.order_ = base.order();
  return r;
}

double fisher_info(const Density& g) {
  if (g.has_product_structure()) {
    double s = 0.0;
    for (auto& f : g.factors()) s += fisher_info(f, adapted_rule(f));
    return s;
  }
  return fisher_info(g, adapted_rule(g));
}

double entropy(const Density& g) {
  if (g.has_product_structure()) {
    double s = 0.0;
    for (auto& f : g.factors()) s += entropy(f, adapted_rule(f));
    return s;
  }
  return entropy(g, adapted_rule(g));
}

std::size_t floored_nodes(const Density& g, const QuadratureRule& rule) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < rule.size(); ++k) count += g.jet(rule.point(k), 0).floored ? 1 : 0;
  return count;
}

}  // namespace gma
