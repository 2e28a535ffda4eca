#pragma once

#include <Eigen/Core>

namespace gma {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct SpectralDecomposition {
  Vec values;   // descending
  Mat vectors;  // column k pairs with values[k]
};

/// Dense symmetric matrix. The lower triangle is always a copy of the upper
/// triangle, so A(i,j) == A(j,i) holds bitwise.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);
  /// Takes the upper triangle of `a`; throws InvalidArgument if not square.
  explicit SymMatrix(const Mat& a);

  static SymMatrix identity(int dim);
  static SymMatrix zero(int dim) { return SymMatrix(dim); }
  static SymMatrix diagonal(const Vec& d);

  int dim() const { return static_cast<int>(a_.rows()); }
  double operator()(int i, int j) const { return a_(i, j); }
  void set(int i, int j, double v) {
    a_(i, j) = v;
    a_(j, i) = v;
  }
  const Mat& matrix() const { return a_; }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;

  /// Eigenpairs sorted by descending eigenvalue.
  SpectralDecomposition eigen() const;
  Vec eigenvalues() const;

  /// f applied to the spectrum: V diag(f(lambda)) V^T.
  template <typename F>
  SymMatrix spectral_map(F&& f) const {
    auto sd = eigen();
    Vec fv = sd.values.unaryExpr(f);
    return SymMatrix(Mat(sd.vectors * fv.asDiagonal() * sd.vectors.transpose()));
  }

  double trace() const { return a_.trace(); }

 private:
  Mat a_;
};

// Regularized (Fredholm-Carleman) determinant of I + K: prod (1+k_i) e^{-k_i}.
// Returns 0 when any k_i <= -1.
double det2(const SymMatrix& k);
// Sum of log(1+k_i) - k_i; -infinity when any k_i <= -1.
double log_det2(const SymMatrix& k);

double hs_norm(const SymMatrix& a);
double op_norm(const SymMatrix& a);

// Largest signed eigenvalue: sup of (Ah,h) over the unit ball.
double m_functional(const SymMatrix& a);
// Spectral projection onto the nonnegative part of the spectrum.
SymMatrix nonneg_part(const SymMatrix& a);

/// Inverse of a positive definite matrix via its spectrum; throws
/// InvalidArgument when the condition number exceeds `max_condition`.
SymMatrix spd_inverse(const SymMatrix& a, double max_condition = 1e12);
SymMatrix spd_sqrt(const SymMatrix& a);
SymMatrix spd_inv_sqrt(const SymMatrix& a);

}  // namespace gma
