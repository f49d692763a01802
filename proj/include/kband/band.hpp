#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "kband/ellipsoid.hpp"
#include "kband/kernel.hpp"
#include "kband/normbound.hpp"

namespace kband {

enum class PointStatus { Feasible, Infeasible, Clipped };

/// Box constraint nu_k <= z_k <= mu_k from the original construction.
struct BoxConstraint {
  std::vector<std::pair<double, double>> intervals;
};

/// Ellipsoid constraint of the refined program, optionally intersected with
/// a box (empty clip = plain ellipsoid).
struct EllipsoidConstraint {
  Ellipsoid set;
  std::vector<std::pair<double, double>> clip;
};

/// Either the per-point boxes (original program) or the function-value
/// ellipsoid (refined program).
using BandConstraint = std::variant<BoxConstraint, EllipsoidConstraint>;

/// One confidence-interval problem at query input x0.
struct QueryProblem {
  double x0 = 0.0;
  Eigen::MatrixXd K0;  // (d+1) x (d+1) extended Gram, query row/column first
  NormBound tau;
  BandConstraint constraint;
};

struct PointInterval {
  double lo = 0.0;
  double hi = 0.0;
  PointStatus status = PointStatus::Infeasible;
};

/// Bordered Gram matrix over {x0, x_1, ..., x_d} with jitter on the diagonal.
/// Throws DuplicateInputs when x0 collides with a data input within 1e-12.
Eigen::MatrixXd extended_gram(const GramPack& gp, double x0, const KernelParams& params);

/// Eq.-style box program: min/max z0 subject to z'K0^{-1}z <= tau and the box
/// on z_1..z_d. Bisection on z0 with an inner projected-Newton box QP.
PointInterval interval_original(const QueryProblem& qp);

/// Refined program with the ellipsoid constraint on (z_1..z_d); the inner
/// feasibility test is a concave scalarization over t in [0,1].
PointInterval interval_refined(const QueryProblem& qp);

struct Band {
  Eigen::VectorXd grid;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<PointStatus> status;

  bool all_feasible() const;
  double mean_width() const;  // over feasible points
  double max_width() const;
};

/// Per-point intervals over a sorted query grid in [0,1]. Grid points that
/// collide with the first d data inputs are nudged by 1e-9.
Band build_band(const Eigen::VectorXd& grid, const GramPack& gp, const NormBound& tau,
                const BandConstraint& constraint, const KernelParams& params);

/// 512-point default grid, equispaced on [0,1].
Eigen::VectorXd default_grid(Eigen::Index size = 512);

}  // namespace kband
