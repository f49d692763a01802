#include "kband/kernel.hpp"

#include <cmath>
#include <stdexcept>

#include "kband/errors.hpp"

namespace kband {

namespace {

constexpr double kDuplicateTol = 1e-12;

}  // namespace

void KernelParams::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("KernelParams: eta must be positive");
  if (!(jitter >= 0.0)) throw std::invalid_argument("KernelParams: jitter must be nonnegative");
}

double pw_kernel(double z, double s, const KernelParams& params) noexcept {
  const double t = std::abs(z - s);
  const double u = params.eta * t;
  // Below the switch-over the Taylor error of sinc is under double precision.
  if (u < 1e-7) return params.eta / std::numbers::pi;
  return std::sin(u) / (std::numbers::pi * t);
}

GramPack gram(const Eigen::VectorXd& inputs, const KernelParams& params) {
  params.validate();
  const Eigen::Index n = inputs.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(inputs[i] - inputs[j]) < kDuplicateTol) {
        throw DuplicateInputs("inputs " + std::to_string(i) + " and " + std::to_string(j) +
                              " coincide within 1e-12");
      }
    }
  }
  GramPack gp;
  gp.inputs = inputs;
  gp.params = params;
  gp.K.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gp.K(i, i) = params.diagonal() + params.jitter_abs();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = pw_kernel(inputs[i], inputs[j], params);
      gp.K(i, j) = v;
      gp.K(j, i) = v;
    }
  }
  return gp;
}

GramPack GramPack::with_d(Eigen::Index d_new) const {
  if (d_new < 1 || d_new > n()) throw std::invalid_argument("GramPack: d must be in [1, n]");
  GramPack gp = *this;
  gp.d = d_new;
  gp.K1 = K.leftCols(d_new);
  gp.K2 = K.topLeftCorner(d_new, d_new);
  return gp;
}

Interpolant min_norm_interpolant(const Eigen::VectorXd& inputs, const Eigen::VectorXd& values,
                                 const KernelParams& params) {
  if (inputs.size() != values.size()) {
    throw std::invalid_argument("min_norm_interpolant: length mismatch");
  }
  const GramPack gp = gram(inputs, params);
  const SpdSolver solver = SpdSolver::factor(gp.K, params.spectral_floor());

  Eigen::VectorXd alpha = solver.solve(values);
  // A couple of refinement passes against the assembled Gram matrix tighten
  // the interpolation residual on ill-conditioned instances.
  double best = (values - gp.K * alpha).norm();
  for (int pass = 0; pass < 2 && best > 1e-15 * (1.0 + values.norm()); ++pass) {
    const Eigen::VectorXd residual = values - gp.K * alpha;
    const Eigen::VectorXd candidate = alpha + solver.solve(residual);
    const double cand_res = (values - gp.K * candidate).norm();
    if (cand_res >= best) break;
    alpha = candidate;
    best = cand_res;
  }

  Interpolant f;
  f.coefficients = alpha;
  f.centers = inputs;
  f.eta = params.eta;
  f.squared_norm = std::max(0.0, alpha.dot(gp.K * alpha));
  return f;
}

double eval_interpolant(const Interpolant& f, double x) {
  const KernelParams params{f.eta, 0.0};
  double acc = 0.0;
  for (Eigen::Index k = 0; k < f.centers.size(); ++k) {
    acc += f.coefficients[k] * pw_kernel(x, f.centers[k], params);
  }
  return acc;
}

}  // namespace kband
