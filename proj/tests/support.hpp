#pragma once

// Test-only oracles, independent of the library's solver paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "kband/ellipsoid.hpp"
#include "kband/perturbation.hpp"
#include "kband/rng.hpp"

namespace testsupport {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Upper critical value of chi-square via Wilson-Hilferty; plenty accurate
/// for pass/fail at the 0.001 tail.
inline double chi_square_critical(int df, double significance = 0.001) {
  const double z = significance == 0.001 ? 3.090232306167813 : 2.3263478740408408;  // 0.01
  const double k = static_cast<double>(df);
  const double term = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * term * term * term;
}

inline double chi_square_stat(const std::vector<long>& counts, double expected) {
  double stat = 0.0;
  for (long c : counts) {
    const double diff = static_cast<double>(c) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

inline Eigen::MatrixXd random_spd(Eigen::Index d, kband::Rng& rng, double min_eig = 0.3,
                                  double max_eig = 3.0) {
  Eigen::MatrixXd raw(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) raw(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd eigs(d);
  for (Eigen::Index i = 0; i < d; ++i) eigs[i] = rng.uniform(min_eig, max_eig);
  return q * eigs.asDiagonal() * q.transpose();
}

inline Eigen::VectorXd random_vector(Eigen::Index d, kband::Rng& rng, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

/// Trust-region-style primal oracle: max ||z||^2 over
/// { (z-c)' A (z-c) <= 1 } by solving the secular equation in A's eigenbasis.
/// Independent of the library's 1-D dual route.
inline double max_norm_sq_over_ellipsoid(const Eigen::MatrixXd& a, const Eigen::VectorXd& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::VectorXd ct = es.eigenvectors().transpose() * c;
  const Eigen::Index d = lam.size();
  const double lam_min = lam.minCoeff();
  const bool is_min = true;
  (void)is_min;

  // In A's eigenbasis: maximize sum (y_j + ct_j)^2 over sum lam_j y_j^2 = 1.
  // KKT gives y_j = ct_j/(sigma lam_j - 1) on the non-minimal part; the
  // constraint residual g(sigma) decides between the regular root and the
  // hard case (leftover mass on the smallest eigenvalue).
  auto minimal = [&](Eigen::Index j) { return lam[j] < lam_min * (1.0 + 1e-10); };
  auto g_of = [&](double sigma) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double denom = sigma * lam[j] - 1.0;
      if (std::abs(denom) < 1e-300) return kInf;
      s += lam[j] * ct[j] * ct[j] / (denom * denom);
    }
    return s;
  };
  auto value_regular = [&](double sigma) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = sigma * lam[j] / (sigma * lam[j] - 1.0);
      v += ct[j] * ct[j] * t * t;
    }
    return v;
  };

  double mass_min = 0.0;
  for (Eigen::Index j = 0; j < d; ++j)
    if (minimal(j)) mass_min += ct[j] * ct[j];

  const double sigma_lo = (1.0 + 1e-12) / lam_min;
  if (mass_min < 1e-22 * std::max(1.0, ct.squaredNorm())) {
    // Mass off the smallest eigenvalue only; check for the hard case.
    double g_lo = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (minimal(j)) continue;
      const double denom = sigma_lo * lam[j] - 1.0;
      g_lo += lam[j] * ct[j] * ct[j] / (denom * denom);
    }
    if (g_lo <= 1.0) {
      double value = (1.0 - g_lo) / lam_min;  // leftover on the min direction
      for (Eigen::Index j = 0; j < d; ++j) {
        if (minimal(j)) continue;
        const double t = sigma_lo * lam[j] / (sigma_lo * lam[j] - 1.0);
        value += ct[j] * ct[j] * t * t;
      }
      return value;
    }
  }
  double hi = sigma_lo * 2.0;
  while (g_of(hi) > 1.0) hi *= 2.0;
  double a_ = sigma_lo, b_ = hi;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (a_ + b_);
    (g_of(mid) > 1.0 ? a_ : b_) = mid;
  }
  return value_regular(0.5 * (a_ + b_));
}

/// Support-function oracle by projected gradient ascent on the ellipsoid;
/// the projection solves its own 1-D multiplier problem by bisection.
inline double support_function_oracle(const Eigen::VectorXd& dir, const Eigen::MatrixXd& shape,
                                      const Eigen::VectorXd& center, int iters = 4000) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shape);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXd v = es.eigenvectors();

  auto project = [&](const Eigen::VectorXd& p) {
    // minimize ||u - p||^2 s.t. sum lam_j u_j^2 <= 1 in the eigenbasis
    Eigen::VectorXd pe = v.transpose() * (p - center);
    double q = 0.0;
    for (Eigen::Index j = 0; j < lam.size(); ++j) q += lam[j] * pe[j] * pe[j];
    if (q <= 1.0) return p;
    double lo = 0.0, hi = 1.0;
    auto quad = [&](double mu) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < lam.size(); ++j) {
        const double uj = pe[j] / (1.0 + mu * lam[j]);
        s += lam[j] * uj * uj;
      }
      return s;
    };
    while (quad(hi) > 1.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (quad(mid) > 1.0 ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    Eigen::VectorXd ue = pe;
    for (Eigen::Index j = 0; j < lam.size(); ++j) ue[j] = pe[j] / (1.0 + mu * lam[j]);
    return Eigen::VectorXd(center + v * ue);
  };

  Eigen::VectorXd u = center;
  const double step = 0.5 / std::max(1e-12, lam.minCoeff());
  double best = dir.dot(u);
  for (int it = 0; it < iters; ++it) {
    u = project(u + step * dir / std::max(1.0, static_cast<double>(it) / 64.0));
    best = std::max(best, dir.dot(u));
  }
  return best;
}

/// Dense 1-D grid oracle for the reduced SDP objective
/// f(t) = t^2 sum beta_j^2/(t e_j - s) - t c over the feasible t-interval.
inline double spectral_grid_oracle(const Eigen::VectorXd& e, const Eigen::VectorXd& beta,
                                   double c, double s, Eigen::Index points = 100000) {
  const double e_min = e.minCoeff();
  if (e_min <= 1e-12 * std::max(1.0, e.maxCoeff())) return kInf;
  const double range_tol2 = 1e-16 * beta.squaredNorm();
  auto value = [&](double t) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < e.size(); ++j) {
      const double denom = t * e[j] - s;
      if (denom <= s * 1e-13) {
        if (beta[j] * beta[j] > range_tol2) return kInf;
        continue;
      }
      acc += beta[j] * beta[j] / denom;
    }
    return t * t * acc - t * c;
  };
  const double t_lo = s / e_min;
  // geometric then linear refinement around the best grid point
  double best = value(t_lo);
  double best_t = t_lo;
  for (Eigen::Index k = 0; k < points; ++k) {
    const double t = t_lo * std::pow(1e9, static_cast<double>(k) / static_cast<double>(points - 1));
    const double f = value(t);
    if (f < best) {
      best = f;
      best_t = t;
    }
  }
  const double lo = best_t / 1.3, hi = best_t * 1.3;
  for (Eigen::Index k = 0; k < points; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    if (t <= t_lo) continue;
    best = std::min(best, value(t));
  }
  return best;
}

/// Assemble the SDP data of one perturbed comparison independently of the
/// library (transpose-corrected formulas, optional Gramian ridge).
struct SdpData {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double c = 0.0;
};

inline SdpData assemble_sdp_data(const kband::EvaluationContext& ctx, int i) {
  const double np = static_cast<double>(ctx.n_prime());
  const Eigen::MatrixXd g = ctx.element(i).dense();
  const Eigen::MatrixXd qi = ctx.phi().transpose() * g * ctx.phi() / np;
  const Eigen::VectorXd psii = ctx.phi().transpose() * g * ctx.v() / np;
  const Eigen::MatrixXd rn = ctx.rn();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rn);
  const Eigen::MatrixXd r_inv_sqrt = es.operatorInverseSqrt();
  const Eigen::MatrixXd r_inv = es.operatorInverseSqrt() * es.operatorInverseSqrt();
  const Eigen::VectorXd u = psii - qi * ctx.theta_hat();
  SdpData out;
  out.a = Eigen::MatrixXd::Identity(ctx.dim(), ctx.dim()) -
          r_inv_sqrt * qi.transpose() * r_inv * qi * r_inv_sqrt;
  out.a = 0.5 * (out.a + out.a.transpose());
  out.b = r_inv_sqrt * qi.transpose() * r_inv * u;
  out.c = -u.dot(r_inv * u);
  return out;
}

/// Minimal feasible gamma over a dense lambda grid with PSD feasibility
/// checked by eigenvalues of the full (d+1) block matrix. Slow but fully
/// independent of any Schur-complement shortcut.
inline double gamma_psd_grid_oracle(const SdpData& data, Eigen::Index lambda_points = 2000) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data.a);
  const double a_min = es.eigenvalues().minCoeff();
  if (a_min <= 1e-12) return kInf;
  const Eigen::Index d = data.a.rows();
  double best = kInf;
  const double lam_lo = 1.0 / a_min;
  for (Eigen::Index k = 0; k < lambda_points; ++k) {
    const double lam =
        lam_lo * std::pow(1e6, static_cast<double>(k) / static_cast<double>(lambda_points - 1));
    // bisection on gamma with a PSD eigen check
    auto feasible = [&](double gamma) {
      Eigen::MatrixXd m(d + 1, d + 1);
      m.topLeftCorner(d, d) = -Eigen::MatrixXd::Identity(d, d) + lam * data.a;
      m.topRightCorner(d, 1) = lam * data.b;
      m.bottomLeftCorner(1, d) = lam * data.b.transpose();
      m(d, d) = lam * data.c + gamma;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(m);
      return check.eigenvalues().minCoeff() >= -1e-11;
    };
    double hi = 1.0;
    while (!feasible(hi) && hi < 1e14) hi *= 4.0;
    if (hi >= 1e14) continue;
    double lo = 0.0;
    if (feasible(0.0)) {
      best = std::min(best, 0.0);
      continue;
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    best = std::min(best, hi);
  }
  return best;
}

inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) acc += f(a + h * i) * (i % 2 == 0 ? 2.0 : 4.0);
  return acc * h / 3.0;
}

/// Inputs with a minimum pairwise gap; keeps sinc Gram conditioning in the
/// range where 1e-8 interpolation accuracy is attainable in doubles.
inline Eigen::VectorXd separated_inputs(Eigen::Index n, kband::Rng& rng, double gap = 2e-3) {
  for (;;) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform01();
    bool ok = true;
    for (Eigen::Index i = 0; i < n && ok; ++i)
      for (Eigen::Index j = i + 1; j < n && ok; ++j)
        if (std::abs(x[i] - x[j]) < gap) ok = false;
    if (ok) return x;
  }
}

}  // namespace testsupport
