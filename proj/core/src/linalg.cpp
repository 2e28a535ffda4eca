#include "gma/linalg.hpp"

#include "gma/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace gma {

SymMatrix::SymMatrix(int dim) : a_(Mat::Zero(dim, dim)) {
  if (dim < 0) throw InvalidArgument("SymMatrix: negative dimension");
}

SymMatrix::SymMatrix(const Mat& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("SymMatrix: matrix is not square");
  a_ = a.triangularView<Eigen::Upper>();
  a_.triangularView<Eigen::StrictlyLower>() = a_.transpose().triangularView<Eigen::StrictlyLower>();
}

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix m(dim);
  m.a_.setIdentity();
  return m;
}

SymMatrix SymMatrix::diagonal(const Vec& d) {
  SymMatrix m(static_cast<int>(d.size()));
  m.a_.diagonal() = d;
  return m;
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  SymMatrix r;
  r.a_ = a_ + o.a_;
  return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  SymMatrix r;
  r.a_ = a_ - o.a_;
  return r;
}

SymMatrix SymMatrix::operator*(double s) const {
  SymMatrix r;
  r.a_ = a_ * s;
  return r;
}

SpectralDecomposition SymMatrix::eigen() const {
  const int n = dim();
  SpectralDecomposition sd;
  if (n == 0) return sd;
  if (n == 1) {
    sd.values = Vec::Constant(1, a_(0, 0));
    sd.vectors = Mat::Identity(1, 1);
    return sd;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(a_);
  // Eigen returns ascending order; reverse for a deterministic descending layout.
  sd.values = es.eigenvalues().reverse();
  sd.vectors = es.eigenvectors().rowwise().reverse();
  return sd;
}

Vec SymMatrix::eigenvalues() const {
  const int n = dim();
  if (n == 1) return Vec::Constant(1, a_(0, 0));
  if (n == 0) return Vec();
  Eigen::SelfAdjointEigenSolver<Mat> es(a_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

double log_det2(const SymMatrix& k) {
  Vec ev = k.eigenvalues();
  double s = 0.0;
  for (double v : ev) {
    if (v <= -1.0) return -std::numeric_limits<double>::infinity();
    s += std::log1p(v) - v;
  }
  return s;
}

double det2(const SymMatrix& k) {
  double l = log_det2(k);
  return std::isinf(l) ? 0.0 : std::exp(l);
}

double hs_norm(const SymMatrix& a) { return a.matrix().norm(); }

double op_norm(const SymMatrix& a) {
  if (a.dim() == 0) return 0.0;
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

double m_functional(const SymMatrix& a) {
  if (a.dim() == 0) throw InvalidArgument("m_functional: empty matrix");
  return a.eigenvalues()[0];
}

SymMatrix nonneg_part(const SymMatrix& a) {
  return a.spectral_map([](double v) { return v > 0.0 ? v : 0.0; });
}

namespace {

void require_spd(const Vec& ev, double max_condition, const char* what) {
  double hi = ev[0];
  double lo = ev[ev.size() - 1];
  if (!(lo > 0.0)) throw InvalidArgument(std::string(what) + ": matrix is not positive definite");
  if (hi / lo > max_condition) {
    throw InvalidArgument(std::string(what) + ": condition number exceeds guard");
  }
}

}  // namespace

SymMatrix spd_inverse(const SymMatrix& a, double max_condition) {
  auto sd = a.eigen();
  require_spd(sd.values, max_condition, "spd_inverse");
  Vec inv = sd.values.cwiseInverse();
  return SymMatrix(Mat(sd.vectors * inv.asDiagonal() * sd.vectors.transpose()));
}

SymMatrix spd_sqrt(const SymMatrix& a) {
  auto sd = a.eigen();
  require_spd(sd.values, std::numeric_limits<double>::infinity(), "spd_sqrt");
  Vec r = sd.values.cwiseSqrt();
  return SymMatrix(Mat(sd.vectors * r.asDiagonal() * sd.vectors.transpose()));
}

SymMatrix spd_inv_sqrt(const SymMatrix& a) {
  auto sd = a.eigen();
  require_spd(sd.values, std::numeric_limits<double>::infinity(), "spd_inv_sqrt");
  Vec r = sd.values.cwiseSqrt().cwiseInverse();
  return SymMatrix(Mat(sd.vectors * r.asDiagonal() * sd.vectors.transpose()));
}

}  // namespace gma
