#pragma once

#include <Eigen/Dense>

namespace kband {

/// Spectral decomposition of a symmetric matrix with eigenvalues clamped to a
/// floor. This is the single numeric policy behind every principal square
/// root and every solve that must survive a rank-deficient Gramian.
struct ClampedEigen {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd raw;      // eigenvalues as computed
  Eigen::VectorXd clamped;  // max(raw, floor)
  double floor = 0.0;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  Eigen::MatrixXd inverse() const;
  Eigen::MatrixXd sqrt() const;
  Eigen::MatrixXd inverse_sqrt() const;
};

/// Default clamp floor: 1e-12 times the mean diagonal magnitude.
double default_spectral_floor(const Eigen::MatrixXd& m);

ClampedEigen clamped_eigen(const Eigen::MatrixXd& m, double floor);

/// Principal nonnegative square root via the clamped eigendecomposition.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m, double floor);

/// Symmetric positive-definite solver: Cholesky first, clamped
/// eigendecomposition when the factorization fails.
class SpdSolver {
 public:
  static SpdSolver factor(const Eigen::MatrixXd& m, double floor);

  const Eigen::MatrixXd& matrix() const { return mat_; }
  bool used_fallback() const { return fallback_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  /// y with ||y||^2 = x' M^{-1} x.
  Eigen::VectorXd whiten(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& x) const;

  double quad_inverse(const Eigen::VectorXd& x) const { return whiten(x).squaredNorm(); }

 private:
  Eigen::MatrixXd mat_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  ClampedEigen eig_;
  bool fallback_ = false;
};

}  // namespace kband
