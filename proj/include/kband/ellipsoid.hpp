#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "kband/linalg.hpp"
#include "kband/perturbation.hpp"

namespace kband {

enum class EllipsoidSpace { ParameterSpace, FunctionValueSpace };

/// { u : (u - center)' shape (u - center) <= 1 }
struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  EllipsoidSpace space = EllipsoidSpace::ParameterSpace;

  double quad(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd d = u - center;
    return d.dot(shape * d);
  }
  bool contains(const Eigen::VectorXd& u, double tol = 0.0) const { return quad(u) <= 1.0 + tol; }
  Eigen::Index dim() const { return center.size(); }
};

/// Per-index SDP values behind the outer-approximation radius.
struct SdpCertificate {
  Eigen::VectorXd gamma_values;  // gamma_i for i = 1..m-1 (+inf marks infeasible)
  double gamma_star = 0.0;       // q-th largest, infinities counted
  double solver_tolerance = 0.0;
  std::vector<bool> infeasible;
};

/// Optimal value of the two-variable SDP bounding Z_i over {Z_0 <= Z_i},
/// reduced to a one-dimensional convex search after one eigendecomposition.
/// Returns +inf when the SDP is infeasible. 1 <= i <= m-1.
double gamma_value(const EvaluationContext& ctx, int i);

/// Ellipsoidal outer approximation of the acceptance region:
/// center theta_hat, shape (1/(n' gamma*)) Phi'Phi.
std::pair<Ellipsoid, SdpCertificate> outer_ellipsoid(const EvaluationContext& ctx);

/// Push the parameter-space ellipsoid to function-value space:
/// center K2 theta_hat, shape K2^{-1} H K2^{-1} via two linear solves.
Ellipsoid to_value_ellipsoid(const Ellipsoid& e, const Eigen::MatrixXd& k2, double floor);

/// Same transport for pipeline ellipsoids with H = (Phi'Phi + ridge I)/(n' gamma*):
/// expands K2^{-1} H K2^{-1} into I + W'W + lambda K2^{-1} + ridge K2^{-2}
/// (all positive semidefinite by construction), which keeps the small
/// eigenvalues of the shape from being lost to cancellation.
Ellipsoid to_value_ellipsoid_structured(const Ellipsoid& e, const GramPack& gp, double lambda_reg,
                                        double ridge_abs, double gamma_star, double n_prime);

/// min/max of c'u over the ellipsoid: c'center -/+ sqrt(c' shape^{-1} c).
/// Throws UnboundedDirection when c has a null-space component.
std::pair<double, double> linear_minmax_over_ellipsoid(const Eigen::VectorXd& c,
                                                       const Ellipsoid& e);

/// Ellipsoid containing the intersection of `e` with the origin-centered ball
/// of squared radius `radius_sq`, via the convex blend
///   (1-mix) q_e(z) + mix ||z||^2/radius_sq <= 1.
/// Any point inside both sets stays inside the blend, so coverage carries
/// over; the result is bounded by radius_sq/mix even when `e` is not.
Ellipsoid blend_with_ball(const Ellipsoid& e, double radius_sq, double mix);

namespace detail {

/// Shared reduction used by the gamma and xi solvers: minimize
///   f(t) = t^2 sum_j beta_j^2 / (t e_j - s)  -  t c
/// over { t : t e_j - s >= 0 for all j }, with pseudo-inverse handling of
/// boundary terms (beta_j below 1e-8 ||beta|| counts as in range).
struct Spectral1dResult {
  double value = 0.0;
  double argmin = 0.0;
  bool feasible = false;
};

Spectral1dResult minimize_spectral_sdp(const Eigen::VectorXd& eigenvalues,
                                       const Eigen::VectorXd& beta, double c, double s);

}  // namespace detail

}  // namespace kband
