#include "kband/ellipsoid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kband/errors.hpp"

namespace kband {

namespace detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGolden = 0.6180339887498949;  // 1/phi
constexpr double kFeasTol = 1e-12;
constexpr double kRangeRel = 1e-8;

struct Objective {
  const Eigen::VectorXd& e;
  Eigen::VectorXd beta2;
  double c;
  double s;
  double range2;  // (1e-8 ||beta||)^2

  // f(t) with range test on near-singular denominators.
  double operator()(double t) const {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < e.size(); ++j) {
      const double denom = t * e[j] - s;
      if (denom <= s * 1e-13) {
        if (beta2[j] > range2) return kInf;
        continue;
      }
      acc += beta2[j] / denom;
    }
    return t * t * acc - t * c;
  }
};

}  // namespace

Spectral1dResult minimize_spectral_sdp(const Eigen::VectorXd& eigenvalues,
                                       const Eigen::VectorXd& beta, double c, double s) {
  Spectral1dResult out;
  const double e_min = eigenvalues.minCoeff();
  const double e_max = eigenvalues.size() > 0 ? eigenvalues.maxCoeff() : 0.0;
  if (!(e_min > kFeasTol * std::max(1.0, e_max))) {
    out.value = kInf;
    out.feasible = false;
    return out;
  }

  Objective f{eigenvalues, beta.array().square(), c, s,
              std::pow(kRangeRel, 2) * beta.squaredNorm()};
  const double t_lo = s / e_min;

  double best_t = t_lo;
  double best_v = f(t_lo);

  // Bracket the minimum of the convex objective by geometric expansion.
  double a = t_lo;
  double b = t_lo * (1.0 + 1e-9);
  double fb = f(b);
  if (fb < best_v) {
    best_v = fb;
    best_t = b;
  }
  const double cap = std::max(1e12, t_lo * 1e9);
  double prev = a;
  bool bracketed = false;
  while (b < cap) {
    const double next = b * 2.0;
    const double fn = f(next);
    if (fn < best_v) {
      best_v = fn;
      best_t = next;
    }
    if (fn > fb) {
      a = prev;
      bracketed = true;
      b = next;
      break;
    }
    prev = b;
    b = next;
    fb = fn;
  }
  if (!bracketed) {
    // Still descending at the cap: the large-t asymptote
    // f(t) -> t (sum beta^2/e - c) + s sum beta^2/e^2 decides the infimum.
    double slope = -c;
    double limit = 0.0;
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
      slope += f.beta2[j] / eigenvalues[j];
      limit += s * f.beta2[j] / (eigenvalues[j] * eigenvalues[j]);
    }
    const double scale = std::abs(c) + beta.squaredNorm() / std::max(e_min, 1e-300) + 1.0;
    if (slope <= 1e-9 * scale) {
      out.value = std::min(best_v, limit);
      out.argmin = cap;
      out.feasible = true;
      return out;
    }
    a = prev;
    b = cap;
  }

  // Golden-section on [a, b]; the objective is convex there.
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int iter = 0; iter < 300 && (b - a) > 1e-13 * (std::abs(a) + std::abs(b)); ++iter) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
    const double fx = std::min(f1, f2);
    if (fx < best_v) {
      best_v = fx;
      best_t = f1 <= f2 ? x1 : x2;
    }
  }

  out.value = best_v;
  out.argmin = best_t;
  out.feasible = std::isfinite(best_v);
  return out;
}

}  // namespace detail

double gamma_value(const EvaluationContext& ctx, int i) {
  if (i < 1 || i >= ctx.m()) throw std::invalid_argument("gamma_value: index must be in [1, m-1]");
  const double np = static_cast<double>(ctx.n_prime());
  const GroupElement& g = ctx.element(i);

  const Eigen::MatrixXd g_phi = g.apply_rows(ctx.phi());
  const Eigen::MatrixXd qi = ctx.phi().transpose() * g_phi / np;
  const Eigen::VectorXd psi_i = ctx.phi().transpose() * g.apply(ctx.v()) / np;

  // R^{-1/2} = sqrt(n') (Phi'Phi)^{-1/2}; everything below is expressed in
  // the whitened coordinates x = R^{1/2}(theta - theta_hat).
  const Eigen::MatrixXd s_half = std::sqrt(np) * ctx.psi_sqrt();
  const Eigen::MatrixXd c_mat = s_half * qi * s_half;
  const Eigen::VectorXd u = psi_i - qi * ctx.theta_hat();
  const Eigen::VectorXd su = s_half * u;
  const Eigen::VectorXd b = c_mat.transpose() * su;
  const double c_const = -su.squaredNorm();

  Eigen::MatrixXd a_mat = Eigen::MatrixXd::Identity(ctx.dim(), ctx.dim()) -
                          c_mat.transpose() * c_mat;
  a_mat = 0.5 * (a_mat + a_mat.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_mat);
  if (es.info() != Eigen::Success) throw SolverDiverged("gamma_value: eigendecomposition failed");
  const Eigen::VectorXd beta = es.eigenvectors().transpose() * b;

  const auto res = detail::minimize_spectral_sdp(es.eigenvalues(), beta, c_const, 1.0);
  return res.feasible ? std::max(0.0, res.value) : std::numeric_limits<double>::infinity();
}

std::pair<Ellipsoid, SdpCertificate> outer_ellipsoid(const EvaluationContext& ctx) {
  const int m = ctx.m();
  SdpCertificate cert;
  cert.gamma_values.resize(m - 1);
  cert.infeasible.assign(static_cast<std::size_t>(m - 1), false);
  cert.solver_tolerance = 1e-10;

  for (int i = 1; i < m; ++i) {
    const double g = gamma_value(ctx, i);
    cert.gamma_values[i - 1] = g;
    cert.infeasible[static_cast<std::size_t>(i - 1)] = !std::isfinite(g);
  }

  // q-th largest with infinities counted; an infinite radius is surfaced
  // rather than silently shrunk, which would break the coverage guarantee.
  std::vector<double> sorted(cert.gamma_values.data(), cert.gamma_values.data() + (m - 1));
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  cert.gamma_star = sorted[static_cast<std::size_t>(ctx.q() - 1)];

  if (!std::isfinite(cert.gamma_star)) {
    throw DegenerateRadius("outer_ellipsoid: gamma* is infinite (vacuous region)");
  }
  if (!(cert.gamma_star > 0.0)) {
    throw DegenerateRadius("outer_ellipsoid: gamma* is not positive");
  }

  Ellipsoid e;
  e.center = ctx.theta_hat();
  e.shape = ctx.rn() / cert.gamma_star;
  e.space = EllipsoidSpace::ParameterSpace;
  return {std::move(e), std::move(cert)};
}

Ellipsoid to_value_ellipsoid(const Ellipsoid& e, const Eigen::MatrixXd& k2, double floor) {
  if (e.space != EllipsoidSpace::ParameterSpace) {
    throw std::invalid_argument("to_value_ellipsoid: expected a parameter-space ellipsoid");
  }
  const SpdSolver solver = SpdSolver::factor(k2, floor);
  const Eigen::MatrixXd half = solver.solve(e.shape);                      // K2^{-1} H
  Eigen::MatrixXd shape = solver.solve(Eigen::MatrixXd(half.transpose()));  // K2^{-1} H K2^{-1}
  shape = 0.5 * (shape + shape.transpose());

  Ellipsoid out;
  out.center = k2 * e.center;
  out.shape = std::move(shape);
  out.space = EllipsoidSpace::FunctionValueSpace;
  return out;
}

Ellipsoid to_value_ellipsoid_structured(const Ellipsoid& e, const GramPack& gp, double lambda_reg,
                                        double ridge_abs, double gamma_star, double n_prime) {
  if (e.space != EllipsoidSpace::ParameterSpace) {
    throw std::invalid_argument("to_value_ellipsoid_structured: parameter-space input expected");
  }
  if (gp.d < 1) throw std::invalid_argument("to_value_ellipsoid_structured: with_d not applied");
  const Eigen::Index d = gp.d;
  const Eigen::Index n = gp.n();
  const ClampedEigen k2_eig = clamped_eigen(gp.K2, gp.params.spectral_floor());
  const Eigen::MatrixXd k2_inv = k2_eig.inverse();

  Eigen::MatrixXd shape = Eigen::MatrixXd::Identity(d, d);
  if (n > d) {
    const Eigen::MatrixXd w = gp.K1.bottomRows(n - d) * k2_inv;  // B K2^{-1}
    shape.noalias() += w.transpose() * w;
  }
  if (lambda_reg > 0.0) shape.noalias() += lambda_reg * k2_inv;
  if (ridge_abs > 0.0) shape.noalias() += ridge_abs * k2_inv * k2_inv;
  shape *= 1.0 / (n_prime * gamma_star);
  shape = 0.5 * (shape + shape.transpose());

  Ellipsoid out;
  out.center = gp.K2 * e.center;
  out.shape = std::move(shape);
  out.space = EllipsoidSpace::FunctionValueSpace;
  return out;
}

Ellipsoid blend_with_ball(const Ellipsoid& e, double radius_sq, double mix) {
  if (!(radius_sq > 0.0)) throw std::invalid_argument("blend_with_ball: radius_sq must be positive");
  if (!(mix > 0.0 && mix < 1.0)) throw std::invalid_argument("blend_with_ball: mix in (0,1)");
  Eigen::MatrixXd a = (1.0 - mix) * e.shape;
  a.diagonal().array() += mix / radius_sq;

  // Complete the square of (1-mix) q_e(z) + mix ||z||^2/radius_sq <= 1.
  const Eigen::VectorXd g = (1.0 - mix) * (e.shape * e.center);
  const ClampedEigen eig = clamped_eigen(a, mix / radius_sq * 0.5);
  const Eigen::VectorXd center = eig.solve(g);
  const double rho = std::max(1.0 - (1.0 - mix) * e.center.dot(e.shape * e.center) + center.dot(g),
                              1e-12);

  // Shrinking an eigenvalue only enlarges the set, so capping the spectrum at
  // 1e10 times the ball floor keeps the shape factorizable without touching
  // the coverage direction.
  const double cap = 1e10 * mix / radius_sq;
  Eigen::VectorXd capped = eig.clamped.cwiseMin(cap) / rho;
  Ellipsoid out;
  out.center = center;
  out.shape = eig.vectors * capped.asDiagonal() * eig.vectors.transpose();
  out.shape = 0.5 * (out.shape + out.shape.transpose());
  out.space = e.space;
  return out;
}

std::pair<double, double> linear_minmax_over_ellipsoid(const Eigen::VectorXd& c,
                                                       const Ellipsoid& e) {
  const double mid = c.dot(e.center);
  if (c.norm() == 0.0) return {mid, mid};
  const SpdSolver solver = SpdSolver::factor(e.shape, default_spectral_floor(e.shape));
  Eigen::VectorXd w = solver.solve(c);
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd r = c - e.shape * w;
    if (r.norm() <= 1e-14 * c.norm()) break;
    const Eigen::VectorXd next = w + solver.solve(r);
    if ((c - e.shape * next).norm() >= r.norm()) break;
    w = next;
  }
  if (solver.used_fallback()) {
    // Clamped solve of a genuinely rank-deficient shape leaves a residual in
    // the null directions; a positive-definite factorization never does.
    const double residual = (e.shape * w - c).norm();
    if (residual > 1e-6 * c.norm()) {
      throw UnboundedDirection("linear_minmax_over_ellipsoid: direction in the null space");
    }
  }
  const double half = std::sqrt(std::max(0.0, c.dot(w)));
  return {mid - half, mid + half};
}

}  // namespace kband
