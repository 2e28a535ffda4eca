#include "gma/transport.hpp"

#include "gma/errors.hpp"
#include "gma/rearrangement.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gma {

std::string to_string(SolverTag tag) {
  switch (tag) {
    case SolverTag::ClosedForm1D: return "closed-form-1d";
    case SolverTag::Product: return "product";
    case SolverTag::LinearGaussian: return "linear-gaussian";
    case SolverTag::Entropic2D: return "entropic-2d";
  }
  return "unknown";
}

TransportMap::TransportMap(std::shared_ptr<const TransportModel> model) : model_(std::move(model)) {
  if (!model_) throw InvalidArgument("TransportMap: null model");
}

SymMatrix TransportMap::third(const Vec& x, int i) const {
  if (!model_->has_third()) {
    throw SolverError("third derivatives are not exposed by the " + to_string(solver_tag()) +
                      " solver");
  }
  if (i < 0 || i >= dim()) throw InvalidArgument("TransportMap::third: index out of range");
  return model_->third(x, i);
}

SymMatrix TransportMap::hess_Phi(const Vec& x) const {
  return hess_phi(x) + SymMatrix::identity(dim());
}

ScalarField TransportMap::potential() const {
  ScalarField f;
  f.dim = dim();
  f.name = "phi[" + to_string(solver_tag()) + "]";
  auto m = model_;
  f.value = [m](const Vec& x) { return m->phi(x); };
  f.grad = [m](const Vec& x) { return m->grad_phi(x); };
  f.hess = [m](const Vec& x) { return m->hess_phi(x); };
  return f;
}

namespace {

constexpr double kAccuracy1D = 1e-9;
constexpr double kAccuracyLinear = 1e-10;

class Inverse1DModel;

class Map1DModel : public TransportModel {
 public:
  explicit Map1DModel(std::shared_ptr<const Rearrangement1D> r) : r_(std::move(r)) {}
  int dim() const override { return 1; }
  SolverTag tag() const override { return SolverTag::ClosedForm1D; }
  double phi(const Vec& x) const override { return r_->potential(x[0]); }
  Vec grad_phi(const Vec& x) const override { return Vec::Constant(1, r_->map(x[0]) - x[0]); }
  SymMatrix hess_phi(const Vec& x) const override {
    return SymMatrix::diagonal(Vec::Constant(1, r_->jet(x[0]).t1 - 1.0));
  }
  SymMatrix third(const Vec& x, int) const override {
    return SymMatrix::diagonal(Vec::Constant(1, r_->jet(x[0]).t2));
  }
  double accuracy_class() const override { return kAccuracy1D; }
  std::shared_ptr<const TransportModel> inverse() const override;

  const Rearrangement1D& rearrangement() const { return *r_; }

 private:
  std::shared_ptr<const Rearrangement1D> r_;
};

// S = T^{-1} with S' = 1/T'(S), S'' = -T''(S) S'^3, and psi from the Legendre transform:
// Psi(y) = y S(y) - Phi(S(y)).
class Inverse1DModel : public TransportModel {
 public:
  explicit Inverse1DModel(std::shared_ptr<const Rearrangement1D> r) : r_(std::move(r)) {
    double s0 = r_->inverse(0.0);
    c0_ = -r_->potential(s0) - 0.5 * s0 * s0;
  }
  int dim() const override { return 1; }
  SolverTag tag() const override { return SolverTag::ClosedForm1D; }
  double phi(const Vec& y) const override {
    double s = r_->inverse(y[0]);
    double big_psi = y[0] * s - r_->potential(s) - 0.5 * s * s;
    return big_psi - 0.5 * y[0] * y[0] - c0_;
  }
  Vec grad_phi(const Vec& y) const override { return Vec::Constant(1, r_->inverse(y[0]) - y[0]); }
  SymMatrix hess_phi(const Vec& y) const override {
    auto m = r_->jet(r_->inverse(y[0]));
    return SymMatrix::diagonal(Vec::Constant(1, 1.0 / m.t1 - 1.0));
  }
  SymMatrix third(const Vec& y, int) const override {
    auto m = r_->jet(r_->inverse(y[0]));
    double s1 = 1.0 / m.t1;
    return SymMatrix::diagonal(Vec::Constant(1, -m.t2 * s1 * s1 * s1));
  }
  double accuracy_class() const override { return kAccuracy1D; }
  std::shared_ptr<const TransportModel> inverse() const override {
    return std::make_shared<Map1DModel>(r_);
  }

 private:
  std::shared_ptr<const Rearrangement1D> r_;
  double c0_ = 0.0;
};

std::shared_ptr<const TransportModel> Map1DModel::inverse() const {
  return std::make_shared<Inverse1DModel>(r_);
}

class ProductMapModel : public TransportModel {
 public:
  explicit ProductMapModel(std::vector<std::shared_ptr<const TransportModel>> f)
      : f_(std::move(f)) {}
  int dim() const override { return static_cast<int>(f_.size()); }
  SolverTag tag() const override { return SolverTag::Product; }
  double phi(const Vec& x) const override {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += f_[i]->phi(Vec::Constant(1, x[i]));
    return s;
  }
  Vec grad_phi(const Vec& x) const override {
    Vec g(dim());
    for (int i = 0; i < dim(); ++i) g[i] = f_[i]->grad_phi(Vec::Constant(1, x[i]))[0];
    return g;
  }
  SymMatrix hess_phi(const Vec& x) const override {
    Vec d(dim());
    for (int i = 0; i < dim(); ++i) d[i] = f_[i]->hess_phi(Vec::Constant(1, x[i]))(0, 0);
    return SymMatrix::diagonal(d);
  }
  SymMatrix third(const Vec& x, int i) const override {
    SymMatrix m(dim());
    m.set(i, i, f_[i]->third(Vec::Constant(1, x[i]), 0)(0, 0));
    return m;
  }
  double accuracy_class() const override {
    double a = 0.0;
    for (auto& f : f_) a = std::max(a, f->accuracy_class());
    return a;
  }
  std::shared_ptr<const TransportModel> inverse() const override {
    std::vector<std::shared_ptr<const TransportModel>> inv;
    for (auto& f : f_) {
      auto s = f->inverse();
      if (!s) return nullptr;
      inv.push_back(std::move(s));
    }
    return std::make_shared<ProductMapModel>(std::move(inv));
  }

 private:
  std::vector<std::shared_ptr<const TransportModel>> f_;
};

// grad Phi(x) = A x with A symmetric positive definite.
class LinearMapModel : public TransportModel {
 public:
  explicit LinearMapModel(SymMatrix a) : a_(std::move(a)) {
    k_ = a_ - SymMatrix::identity(a_.dim());
  }
  int dim() const override { return a_.dim(); }
  SolverTag tag() const override { return SolverTag::LinearGaussian; }
  double phi(const Vec& x) const override { return 0.5 * x.dot(k_.matrix() * x); }
  Vec grad_phi(const Vec& x) const override { return k_.matrix() * x; }
  SymMatrix hess_phi(const Vec&) const override { return k_; }
  SymMatrix third(const Vec&, int) const override { return SymMatrix::zero(dim()); }
  double accuracy_class() const override { return kAccuracyLinear; }
  std::shared_ptr<const TransportModel> inverse() const override {
    return std::make_shared<LinearMapModel>(spd_inverse(a_));
  }

 private:
  SymMatrix a_;
  SymMatrix k_;
};

}  // namespace

TransportMap solve_1d(const Density& g) {
  if (g.dim() != 1) throw InvalidArgument("solve_1d: density must be one-dimensional");
  auto r = std::make_shared<const Rearrangement1D>(g);
  return TransportMap(std::make_shared<Map1DModel>(std::move(r)));
}

TransportMap solve_product(const Density& g) {
  if (!g.has_product_structure()) {
    throw InvalidArgument("solve_product: " + g.describe() + " has no product structure");
  }
  std::vector<std::shared_ptr<const TransportModel>> maps;
  for (const auto& f : g.factors()) maps.push_back(solve_1d(f).shared_model());
  return TransportMap(std::make_shared<ProductMapModel>(std::move(maps)));
}

TransportMap solve_gaussian_linear(const SymMatrix& sigma) {
  if (sigma.dim() < 1) throw InvalidArgument("solve_gaussian_linear: empty covariance");
  return TransportMap(std::make_shared<LinearMapModel>(spd_inv_sqrt(sigma)));
}

TransportMap invert(const TransportMap& t) {
  auto inv = t.model().inverse();
  if (!inv) {
    throw SolverError("invert: the " + to_string(t.solver_tag()) + " solver has no inverse map");
  }
  return TransportMap(std::move(inv));
}

TransportMap solve_auto(const Density& g, const EntropicOptions& entropic) {
  if (g.dim() == 1) return solve_1d(g);
  if (g.has_product_structure()) return solve_product(g);
  if (auto c = g.gaussian_covariance()) return solve_gaussian_linear(*c);
  if (g.dim() == 2) return solve_entropic_2d(g, entropic);
  throw InvalidArgument("solve_auto: no solver for coupled density " + g.describe() + " on R^" +
                        std::to_string(g.dim()));
}

std::string map_to_csv(const TransportMap& t, double half_width, int points) {
  const int d = t.dim();
  if (d > 2) throw InvalidArgument("map_to_csv: only dimensions 1 and 2 are supported");
  if (points < 2 || !(half_width > 0)) throw InvalidArgument("map_to_csv: bad grid");
  std::ostringstream os;
  os << "# gma-map v1 solver=" << to_string(t.solver_tag()) << "\n";
  if (d == 1) {
    os << "x1,grad1,h11\n";
  } else {
    os << "x1,x2,grad1,grad2,h11,h12,h22\n";
  }
  char buf[64];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf << (last ? "\n" : ",");
  };
  const double h = 2.0 * half_width / (points - 1);
  const int outer = d == 2 ? points : 1;
  for (int i = 0; i < outer; ++i) {
    for (int j = 0; j < points; ++j) {
      Vec x(d);
      if (d == 1) {
        x[0] = -half_width + j * h;
      } else {
        x[0] = -half_width + i * h;
        x[1] = -half_width + j * h;
      }
      Vec g = t.grad_phi(x);
      SymMatrix hm = t.hess_phi(x);
      for (int k = 0; k < d; ++k) put(x[k], false);
      for (int k = 0; k < d; ++k) put(g[k], false);
      if (d == 1) {
        put(hm(0, 0), true);
      } else {
        put(hm(0, 0), false);
        put(hm(0, 1), false);
        put(hm(1, 1), true);
      }
    }
  }
  return os.str();
}

}  // namespace gma
