#pragma once

#include <Eigen/Dense>
#include <numbers>

#include "kband/linalg.hpp"

namespace kband {

/// Paley-Wiener kernel hyperparameters.
///
/// `eta` is the angular band limit (radians per unit input). `jitter` is a
/// dimensionless multiple of the diagonal value eta/pi added to assembled
/// Gram diagonals so that downstream factorizations stay positive definite.
struct KernelParams {
  double eta = 30.0;
  double jitter = 1e-8;

  double diagonal() const { return eta / std::numbers::pi; }
  double jitter_abs() const { return jitter * diagonal(); }
  /// Eigenvalue clamp floor shared by every factorization in the pipeline.
  double spectral_floor() const { return 1e-12 * diagonal(); }
  void validate() const;
};

/// sin(eta (z - s)) / (pi (z - s)), with the eta/pi limit on the diagonal.
/// Evaluated through |z - s| so symmetry is exact in floating point.
double pw_kernel(double z, double s, const KernelParams& params) noexcept;

/// Gram matrix of the Paley-Wiener kernel at distinct inputs, plus the K1/K2
/// blocks used by the regression reformulation once `d` has been chosen.
struct GramPack {
  Eigen::MatrixXd K;       // n x n, jitter included on the diagonal
  Eigen::MatrixXd K1;      // n x d (first d columns of K); empty until with_d
  Eigen::MatrixXd K2;      // d x d leading principal block; empty until with_d
  Eigen::VectorXd inputs;  // length n
  Eigen::Index d = 0;
  KernelParams params;

  Eigen::Index n() const { return inputs.size(); }
  /// Copy of the pack with the K1/K2 blocks populated for a given d.
  GramPack with_d(Eigen::Index d) const;
};

/// Assemble the Gram matrix; throws DuplicateInputs if two inputs coincide
/// within 1e-12. The block split is deferred (call with_d).
GramPack gram(const Eigen::VectorXd& inputs, const KernelParams& params);

/// Minimum-norm interpolant: coefficients alpha solving K alpha = z.
struct Interpolant {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd centers;
  double eta = 0.0;
  double squared_norm = 0.0;  // alpha' K alpha
};

Interpolant min_norm_interpolant(const Eigen::VectorXd& inputs, const Eigen::VectorXd& values,
                                 const KernelParams& params);

double eval_interpolant(const Interpolant& f, double x);

}  // namespace kband
