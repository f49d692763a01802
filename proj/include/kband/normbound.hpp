#pragma once

#include <utility>
#include <vector>

#include "kband/ellipsoid.hpp"

namespace kband {

/// Risk split of the norm-bound guarantee P(||f||^2 <= tau) >= 1-alpha-beta.
struct RiskBudget {
  double alpha = 0.05;   // Hoeffding risk
  double beta = 0.05;    // ellipsoid risk, q/m
  double delta0 = 0.01;  // time-limiting leakage allowance

  void validate() const;
};

enum class BoundMethod { Original, Refined };

struct NormBound {
  double tau = 0.0;
  BoundMethod method = BoundMethod::Original;
  double xi_or_mean = 0.0;      // xi* or (1/d) sum max(nu^2, mu^2)
  double hoeffding_term = 0.0;  // sqrt(ln(alpha) / (-2d))
  double delta0 = 0.0;
};

double hoeffding_term(double alpha, Eigen::Index d);

/// Coordinate-wise extent [nu_k, mu_k] of the function-value ellipsoid.
std::vector<std::pair<double, double>> pointwise_intervals(const Ellipsoid& ve);

NormBound tau_original(const std::vector<std::pair<double, double>>& intervals,
                       const RiskBudget& budget, Eigen::Index d);

/// max { (1/d) ||z||^2 : z in the value ellipsoid }, computed through the
/// one-dimensional dual with A0 = -(1/d) I.
double xi_star(const Ellipsoid& ve, Eigen::Index d);

NormBound tau_refined(double xi, const RiskBudget& budget, Eigen::Index d);

}  // namespace kband
