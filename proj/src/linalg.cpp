#include "kband/linalg.hpp"

#include <cmath>

#include "kband/errors.hpp"

namespace kband {

namespace {

Eigen::MatrixXd apply_spectral(const ClampedEigen& e, const Eigen::VectorXd& f) {
  return e.vectors * f.asDiagonal() * e.vectors.transpose();
}

}  // namespace

Eigen::VectorXd ClampedEigen::solve(const Eigen::VectorXd& b) const {
  return vectors * (vectors.transpose() * b).cwiseQuotient(clamped);
}

Eigen::MatrixXd ClampedEigen::solve(const Eigen::MatrixXd& b) const {
  return vectors * clamped.cwiseInverse().asDiagonal() * (vectors.transpose() * b);
}

Eigen::MatrixXd ClampedEigen::inverse() const {
  return apply_spectral(*this, clamped.cwiseInverse());
}

Eigen::MatrixXd ClampedEigen::sqrt() const {
  return apply_spectral(*this, clamped.cwiseSqrt());
}

Eigen::MatrixXd ClampedEigen::inverse_sqrt() const {
  return apply_spectral(*this, clamped.cwiseSqrt().cwiseInverse());
}

double default_spectral_floor(const Eigen::MatrixXd& m) {
  const double scale = m.rows() > 0 ? m.diagonal().cwiseAbs().mean() : 1.0;
  return 1e-12 * std::max(scale, 1e-300);
}

ClampedEigen clamped_eigen(const Eigen::MatrixXd& m, double floor) {
  if (!m.allFinite()) throw SingularGram("matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw SingularGram("symmetric eigendecomposition failed");
  ClampedEigen out;
  out.vectors = es.eigenvectors();
  out.raw = es.eigenvalues();
  out.clamped = out.raw.cwiseMax(floor);
  out.floor = floor;
  return out;
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m, double floor) {
  return clamped_eigen(m, floor).sqrt();
}

SpdSolver SpdSolver::factor(const Eigen::MatrixXd& m, double floor) {
  if (!m.allFinite()) throw SingularGram("matrix has non-finite entries");
  SpdSolver s;
  s.mat_ = m;
  s.llt_.compute(m);
  if (s.llt_.info() != Eigen::Success) {
    s.fallback_ = true;
    s.eig_ = clamped_eigen(m, floor);
  }
  return s;
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const {
  return fallback_ ? eig_.solve(b) : Eigen::VectorXd(llt_.solve(b));
}

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& b) const {
  return fallback_ ? eig_.solve(b) : Eigen::MatrixXd(llt_.solve(b));
}

Eigen::VectorXd SpdSolver::whiten(const Eigen::VectorXd& x) const {
  if (fallback_) {
    return (eig_.vectors.transpose() * x).cwiseQuotient(eig_.clamped.cwiseSqrt());
  }
  return llt_.matrixL().solve(x);
}

Eigen::MatrixXd SpdSolver::whiten(const Eigen::MatrixXd& x) const {
  if (fallback_) {
    Eigen::MatrixXd y = eig_.vectors.transpose() * x;
    y.array().colwise() /= eig_.clamped.cwiseSqrt().array();
    return y;
  }
  return llt_.matrixL().solve(x);
}

}  // namespace kband
