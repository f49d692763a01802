#include "kband/normbound.hpp"

#include <cmath>
#include <stdexcept>

#include "kband/errors.hpp"

namespace kband {

void RiskBudget::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("RiskBudget: alpha in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("RiskBudget: beta in (0,1)");
  if (!(alpha + beta < 1.0)) throw std::invalid_argument("RiskBudget: alpha + beta < 1 required");
  if (!(delta0 >= 0.0)) throw std::invalid_argument("RiskBudget: delta0 must be nonnegative");
}

double hoeffding_term(double alpha, Eigen::Index d) {
  return std::sqrt(std::log(alpha) / (-2.0 * static_cast<double>(d)));
}

std::vector<std::pair<double, double>> pointwise_intervals(const Ellipsoid& ve) {
  const Eigen::Index d = ve.dim();
  if (d < 1) throw std::invalid_argument("pointwise_intervals: empty ellipsoid");
  std::vector<std::pair<double, double>> intervals;
  intervals.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(d);
    unit[k] = 1.0;
    intervals.push_back(linear_minmax_over_ellipsoid(unit, ve));
  }
  return intervals;
}

NormBound tau_original(const std::vector<std::pair<double, double>>& intervals,
                       const RiskBudget& budget, Eigen::Index d) {
  budget.validate();
  if (static_cast<Eigen::Index>(intervals.size()) != d) {
    throw std::invalid_argument("tau_original: interval count must equal d");
  }
  double mean = 0.0;
  for (const auto& [nu, mu] : intervals) mean += std::max(nu * nu, mu * mu);
  mean /= static_cast<double>(d);

  NormBound b;
  b.method = BoundMethod::Original;
  b.xi_or_mean = mean;
  b.hoeffding_term = hoeffding_term(budget.alpha, d);
  b.delta0 = budget.delta0;
  b.tau = mean + b.hoeffding_term + b.delta0;
  return b;
}

double xi_star(const Ellipsoid& ve, Eigen::Index d) {
  if (ve.space != EllipsoidSpace::FunctionValueSpace) {
    throw std::invalid_argument("xi_star: expected a function-value ellipsoid");
  }
  const Eigen::MatrixXd& a1 = ve.shape;
  const Eigen::VectorXd b1 = -(a1 * ve.center);
  const double c1 = ve.center.dot(a1 * ve.center) - 1.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a1);
  if (es.info() != Eigen::Success) throw SolverDiverged("xi_star: eigendecomposition failed");
  const Eigen::VectorXd beta = es.eigenvectors().transpose() * b1;

  // Dual of max (1/d)||z||^2 over the ellipsoid; the printed dual returns the
  // negated optimum, so the positive bound is the minimum of
  //   rho^2 b1'(A0 + rho A1)^+ b1 - rho c1  over feasible rho.
  const auto res =
      detail::minimize_spectral_sdp(es.eigenvalues(), beta, c1, 1.0 / static_cast<double>(d));
  if (!res.feasible) {
    throw InfeasibleDual("xi_star: no rho makes A0 + rho A1 positive semidefinite");
  }
  return std::max(0.0, res.value);
}

NormBound tau_refined(double xi, const RiskBudget& budget, Eigen::Index d) {
  budget.validate();
  if (xi < -1e-12) throw std::invalid_argument("tau_refined: xi must be nonnegative");
  NormBound b;
  b.method = BoundMethod::Refined;
  b.xi_or_mean = std::max(0.0, xi);
  b.hoeffding_term = hoeffding_term(budget.alpha, d);
  b.delta0 = budget.delta0;
  b.tau = b.xi_or_mean + b.hoeffding_term + b.delta0;
  return b;
}

}  // namespace kband
