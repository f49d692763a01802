#include "kband/band.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kband/errors.hpp"

namespace kband {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr double kBisectTol = 1e-7;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// z' K0^{-1} z evaluated through the cached factor of K0:
/// q(z0, w) = || z0 a0 + F w ||^2 with a0 = L^{-1} e0, F = L^{-1} E.
struct QuadForm {
  SpdSolver factor;
  Eigen::VectorXd a0;
  Eigen::MatrixXd f;
  Eigen::MatrixXd h0;    // F'F
  Eigen::VectorXd fa0;   // F'a0
  double a00 = 0.0;      // ||a0||^2
  double k00 = 0.0;      // K0(0,0)
  Eigen::Index d = 0;
  Eigen::LLT<Eigen::MatrixXd> h0_llt;
  bool h0_ok = false;

  explicit QuadForm(const Eigen::MatrixXd& k0, double floor)
      : factor(SpdSolver::factor(k0, floor)) {
    const Eigen::Index n = k0.rows();
    d = n - 1;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd white = factor.whiten(basis);
    a0 = white.col(0);
    f = white.rightCols(d);
    h0 = f.transpose() * f;
    fa0 = f.transpose() * a0;
    a00 = a0.squaredNorm();
    k00 = k0(0, 0);
    if (d > 0) {
      h0_llt.compute(h0);
      h0_ok = h0_llt.info() == Eigen::Success;
    }
  }

  double value(double z0, const Eigen::VectorXd& w) const {
    return (z0 * a0 + f * w).squaredNorm();
  }
};

/// Box-constrained minimization of q(z0, .) by projected Newton with
/// active-set freeing and a cyclic coordinate-descent fallback.
class BoxQp {
 public:
  BoxQp(const QuadForm& qf, const BoxConstraint& box) : qf_(qf) {
    const Eigen::Index d = qf.d;
    lo_.resize(d);
    hi_.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      lo_[k] = box.intervals[static_cast<std::size_t>(k)].first;
      hi_[k] = box.intervals[static_cast<std::size_t>(k)].second;
    }
    warm_ = 0.5 * (lo_ + hi_);
  }

  double minimize(double z0) {
    const Eigen::Index d = qf_.d;
    if (d == 0) return z0 * z0 * qf_.a00;
    const Eigen::VectorXd lin = z0 * qf_.fa0;

    // Start from the better of the projected unconstrained minimizer and the
    // previous solution; the former keeps the value independent of query
    // history whenever no bound binds.
    Eigen::VectorXd w = clamp(warm_);
    double val = qf_.value(z0, w);
    if (qf_.h0_ok) {
      const Eigen::VectorXd unconstrained = clamp(-qf_.h0_llt.solve(lin));
      const double uv = qf_.value(z0, unconstrained);
      if (uv < val) {
        w = unconstrained;
        val = uv;
      }
    }
    const double gscale = 1.0 + lin.cwiseAbs().maxCoeff();

    for (int iter = 0; iter < 200; ++iter) {
      const Eigen::VectorXd grad = 2.0 * (qf_.h0 * w + lin);
      std::vector<Eigen::Index> free;
      free.reserve(static_cast<std::size_t>(d));
      double pg = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const bool at_lo = w[k] <= lo_[k] + 1e-14 && grad[k] > 0.0;
        const bool at_hi = w[k] >= hi_[k] - 1e-14 && grad[k] < 0.0;
        if (!at_lo && !at_hi) {
          pg = std::max(pg, std::abs(grad[k]));
          free.push_back(k);
        }
      }
      if (pg <= 1e-9 * gscale) break;

      bool progressed = false;
      if (!free.empty()) {
        const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd hff(nf, nf);
        Eigen::VectorXd gf(nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
          gf[a] = qf_.h0.row(free[static_cast<std::size_t>(a)]) * w +
                  lin[free[static_cast<std::size_t>(a)]];
          for (Eigen::Index b = 0; b < nf; ++b) {
            hff(a, b) = qf_.h0(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
          }
        }
        Eigen::VectorXd step = hff.ldlt().solve(-gf);
        if (!step.allFinite() || gf.dot(step) >= 0.0) step = -gf;  // descent guard

        // exact minimizer along the unclamped segment, then halving
        const double curv = step.dot(hff * step);
        double t0 = curv > 0.0 ? std::max(-gf.dot(step) / curv, 0.0) : 1.0;
        if (!(t0 > 0.0) || !std::isfinite(t0)) t0 = 1.0;
        for (double t = std::max(t0, 1.0); t > 1e-12 * t0; t *= 0.5) {
          Eigen::VectorXd cand = w;
          for (Eigen::Index a = 0; a < nf; ++a) {
            cand[free[static_cast<std::size_t>(a)]] += t * step[a];
          }
          cand = clamp(cand);
          const double cv = qf_.value(z0, cand);
          if (cv < val - 1e-16 * (1.0 + std::abs(val))) {
            w = cand;
            val = cv;
            progressed = true;
            break;
          }
        }
      }
      if (!progressed) {
        // a few exact coordinate sweeps before giving up
        bool improved = false;
        for (int sweep = 0; sweep < 8; ++sweep) {
          for (Eigen::Index k = 0; k < d; ++k) {
            const double hkk = qf_.h0(k, k);
            if (hkk <= 0.0) continue;
            const double gk = qf_.h0.row(k) * w + lin[k];
            w[k] = std::clamp(w[k] - gk / hkk, lo_[k], hi_[k]);
          }
          const double cv = qf_.value(z0, w);
          if (cv < val - 1e-16 * (1.0 + std::abs(val))) {
            val = cv;
            improved = true;
          }
        }
        if (!improved) break;
      }
    }
    warm_ = w;
    return val;
  }

 private:
  Eigen::VectorXd clamp(const Eigen::VectorXd& w) const {
    return w.cwiseMax(lo_).cwiseMin(hi_);
  }

  const QuadForm& qf_;
  Eigen::VectorXd lo_, hi_, warm_;
};

/// Inner feasibility of the refined program for fixed z0:
///   exists w with g1 = q(z0,w) - tau <= 0 and g2 = ellipsoid quad - 1 <= 0,
/// decided through max_{t in [0,1]} min_w [t g1 + (1-t) g2] <= 0. The pencil
/// (H0, A1) is diagonalized once, so each t evaluation costs O(d).
class EllipsoidFeasibility {
 public:
  EllipsoidFeasibility(const QuadForm& qf, const Ellipsoid& ze, double tau)
      : qf_(qf), tau_(tau) {
    const Eigen::Index d = qf.d;
    if (d == 0) {
      const_g2_ = -1.0;
      return;
    }
    Eigen::LLT<Eigen::MatrixXd> chol(qf.h0);
    Eigen::MatrixXd g;
    if (chol.info() == Eigen::Success) {
      const Eigen::MatrixXd m =
          chol.matrixL().solve(Eigen::MatrixXd(chol.matrixL().solve(ze.shape).transpose()));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
      g = chol.matrixU().solve(es.eigenvectors());
      dvals_ = es.eigenvalues().cwiseMax(0.0);
    } else {
      const ClampedEigen eh = clamped_eigen(qf.h0, default_spectral_floor(qf.h0));
      const Eigen::MatrixXd w = eh.vectors * eh.clamped.cwiseSqrt().cwiseInverse().asDiagonal();
      const Eigen::MatrixXd m = w.transpose() * ze.shape * w;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
      g = w * es.eigenvectors();
      dvals_ = es.eigenvalues().cwiseMax(0.0);
    }
    r1_unit_ = g.transpose() * qf.fa0;                 // scaled by z0 per query
    r2_ = -(g.transpose() * (ze.shape * ze.center));
    const_g2_ = ze.center.dot(ze.shape * ze.center) - 1.0;
    ginv_diag_sq_.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < dvals_.size(); ++j) {
        acc += g(k, j) * g(k, j) / std::max(dvals_[j], 1e-16);
      }
      ginv_diag_sq_[k] = acc;  // (A1^{-1})_kk, clamped
    }
    center_ = ze.center;
  }

  /// max_k coordinate magnitude of the constraint set (for the z0 bracket).
  double max_coordinate() const {
    if (qf_.d == 0) return 0.0;
    double m = 0.0;
    for (Eigen::Index k = 0; k < qf_.d; ++k) {
      m = std::max(m, std::abs(center_[k]) + std::sqrt(std::min(ginv_diag_sq_[k], 1e16)));
    }
    return m;
  }

  bool feasible(double z0) const { return scalarized_max(z0) <= 0.0; }

  double scalarized_max(double z0) const {
    const double c1 = z0 * z0 * qf_.a00 - tau_;
    if (qf_.d == 0) return std::max(c1, const_g2_);
    double best = std::max(h_of(0.0, z0, c1), h_of(1.0, z0, c1));
    double a = 0.0, b = 1.0;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = h_of(x1, z0, c1);
    double f2 = h_of(x2, z0, c1);
    for (int iter = 0; iter < 60 && (b - a) > 1e-8; ++iter) {
      if (f1 >= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kGolden * (b - a);
        f1 = h_of(x1, z0, c1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGolden * (b - a);
        f2 = h_of(x2, z0, c1);
      }
      best = std::max(best, std::max(f1, f2));
    }
    return best;
  }

 private:
  double h_of(double t, double z0, double c1_z0) const {
    double acc = t * c1_z0 + (1.0 - t) * const_g2_;
    for (Eigen::Index j = 0; j < dvals_.size(); ++j) {
      const double denom = t + (1.0 - t) * dvals_[j];
      const double num = t * z0 * r1_unit_[j] + (1.0 - t) * r2_[j];
      if (denom <= 1e-15) {
        if (num * num > 1e-24) return -kInf;
        continue;
      }
      acc -= num * num / denom;
    }
    return acc;
  }

  const QuadForm& qf_;
  double tau_;
  Eigen::VectorXd dvals_;
  Eigen::VectorXd r1_unit_;
  Eigen::VectorXd r2_;
  Eigen::VectorXd center_;
  Eigen::VectorXd ginv_diag_sq_;
  double const_g2_ = 0.0;
};

/// Golden-section minimizer of a convex function on [a, b] with early exit
/// once the value drops to `target` or below.
template <typename F>
std::pair<double, double> golden_min(F&& fn, double a, double b, double target, int iters) {
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = fn(x1);
  double f2 = fn(x2);
  double best_x = f1 <= f2 ? x1 : x2;
  double best_f = std::min(f1, f2);
  for (int i = 0; i < iters && (b - a) > 1e-9 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (best_f <= target) break;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = fn(x2);
    }
    if (std::min(f1, f2) < best_f) {
      best_f = std::min(f1, f2);
      best_x = f1 <= f2 ? x1 : x2;
    }
  }
  return {best_x, best_f};
}

/// Bisection from a feasible point toward an infeasible bracket end.
template <typename Feasible>
double bisect_endpoint(Feasible&& feasible, double z_feas, double z_infeas) {
  for (int i = 0; i < 200 && std::abs(z_infeas - z_feas) > kBisectTol; ++i) {
    const double mid = 0.5 * (z_feas + z_infeas);
    if (feasible(mid)) {
      z_feas = mid;
    } else {
      z_infeas = mid;
    }
  }
  return z_infeas;  // outer end: conservative for coverage
}

template <typename Feasible>
PointInterval solve_interval(Feasible&& feasible, auto&& objective, double bound,
                             double feasible_level) {
  PointInterval out;
  const auto [seed, seed_val] = golden_min(objective, -bound, bound, feasible_level, 200);
  if (!feasible(seed)) {
    out.status = PointStatus::Infeasible;
    out.lo = std::numeric_limits<double>::quiet_NaN();
    out.hi = out.lo;
    return out;
  }
  const bool hi_clip = feasible(bound);
  const bool lo_clip = feasible(-bound);
  out.hi = hi_clip ? bound : bisect_endpoint(feasible, seed, bound);
  out.lo = lo_clip ? -bound : bisect_endpoint(feasible, seed, -bound);
  out.status = (hi_clip || lo_clip) ? PointStatus::Clipped : PointStatus::Feasible;
  return out;
}

}  // namespace

Eigen::MatrixXd extended_gram(const GramPack& gp, double x0, const KernelParams& params) {
  params.validate();
  const Eigen::Index d = gp.d;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (std::abs(x0 - gp.inputs[k]) < 1e-12) {
      throw DuplicateInputs("extended_gram: query collides with data input " + std::to_string(k));
    }
  }
  Eigen::MatrixXd k0(d + 1, d + 1);
  k0(0, 0) = params.diagonal() + params.jitter_abs();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double v = pw_kernel(x0, gp.inputs[i], params);
    k0(0, i + 1) = v;
    k0(i + 1, 0) = v;
  }
  if (d > 0) k0.bottomRightCorner(d, d) = gp.K2;
  return k0;
}

PointInterval interval_original(const QueryProblem& qp) {
  const auto* box = std::get_if<BoxConstraint>(&qp.constraint);
  if (box == nullptr) throw std::invalid_argument("interval_original: box constraint required");
  const double tau = qp.tau.tau;
  const double floor = default_spectral_floor(qp.K0);
  QuadForm qf(qp.K0, floor);
  if (static_cast<Eigen::Index>(box->intervals.size()) != qf.d) {
    throw std::invalid_argument("interval_original: box size must equal d");
  }

  double box_mag = 0.0;
  for (const auto& [nu, mu] : box->intervals) {
    if (nu > mu) throw std::invalid_argument("interval_original: empty box interval");
    box_mag = std::max({box_mag, std::abs(nu), std::abs(mu)});
  }
  const double bound = std::sqrt(std::max(0.0, tau * qf.k00)) + box_mag + 1.0;

  BoxQp inner(qf, *box);
  auto objective = [&](double z0) { return inner.minimize(z0); };
  auto feasible = [&](double z0) { return inner.minimize(z0) <= tau; };
  return solve_interval(feasible, objective, bound, tau);
}

PointInterval interval_refined(const QueryProblem& qp) {
  const auto* ze = std::get_if<EllipsoidConstraint>(&qp.constraint);
  if (ze == nullptr) throw std::invalid_argument("interval_refined: ellipsoid constraint required");
  const double tau = qp.tau.tau;
  const double floor = default_spectral_floor(qp.K0);
  QuadForm qf(qp.K0, floor);
  if (ze->set.dim() != qf.d) {
    throw std::invalid_argument("interval_refined: ellipsoid dimension must equal d");
  }
  if (!ze->clip.empty() && static_cast<Eigen::Index>(ze->clip.size()) != qf.d) {
    throw std::invalid_argument("interval_refined: clip size must equal d");
  }

  EllipsoidFeasibility inner(qf, ze->set, tau);
  const double bound = std::sqrt(std::max(0.0, tau * qf.k00)) + inner.max_coordinate() + 1.0;
  auto objective = [&](double z0) { return inner.scalarized_max(z0); };
  auto feasible = [&](double z0) { return inner.feasible(z0); };
  PointInterval plain = solve_interval(feasible, objective, bound, 0.0);
  if (ze->clip.empty() || plain.status == PointStatus::Infeasible) return plain;

  // Clip present: intersect with the box program at the same norm level.
  // This outer-bounds the ellipsoid-and-box feasible set and keeps the
  // interval inside whatever the box program allows.
  QueryProblem boxed;
  boxed.x0 = qp.x0;
  boxed.K0 = qp.K0;
  boxed.tau = qp.tau;
  boxed.constraint = BoxConstraint{ze->clip};
  const PointInterval box_iv = interval_original(boxed);
  if (box_iv.status == PointStatus::Infeasible) return box_iv;

  PointInterval out;
  out.lo = std::max(plain.lo, box_iv.lo);
  out.hi = std::min(plain.hi, box_iv.hi);
  if (out.lo > out.hi) {
    out.status = PointStatus::Infeasible;
    out.lo = std::numeric_limits<double>::quiet_NaN();
    out.hi = out.lo;
    return out;
  }
  out.status = (plain.status == PointStatus::Clipped || box_iv.status == PointStatus::Clipped)
                   ? PointStatus::Clipped
                   : PointStatus::Feasible;
  return out;
}

bool Band::all_feasible() const {
  return std::all_of(status.begin(), status.end(),
                     [](PointStatus s) { return s == PointStatus::Feasible; });
}

double Band::mean_width() const {
  double acc = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    if (status[static_cast<std::size_t>(j)] != PointStatus::Infeasible) {
      acc += upper[j] - lower[j];
      ++count;
    }
  }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

double Band::max_width() const {
  double m = 0.0;
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    if (status[static_cast<std::size_t>(j)] != PointStatus::Infeasible) {
      m = std::max(m, upper[j] - lower[j]);
    }
  }
  return m;
}

Eigen::VectorXd default_grid(Eigen::Index size) {
  return Eigen::VectorXd::LinSpaced(size, 0.0, 1.0);
}

Band build_band(const Eigen::VectorXd& grid, const GramPack& gp, const NormBound& tau,
                const BandConstraint& constraint, const KernelParams& params) {
  if (gp.d < 1) throw std::invalid_argument("build_band: GramPack::with_d not applied");
  Eigen::VectorXd sorted = grid;
  std::sort(sorted.data(), sorted.data() + sorted.size());

  Band band;
  band.grid = sorted;
  band.lower.resize(sorted.size());
  band.upper.resize(sorted.size());
  band.status.resize(static_cast<std::size_t>(sorted.size()));

  for (Eigen::Index j = 0; j < sorted.size(); ++j) {
    double x0 = sorted[j];
    // Nudge off data-input collisions.
    for (int guard = 0; guard < 8; ++guard) {
      bool hit = false;
      for (Eigen::Index k = 0; k < gp.d; ++k) {
        if (std::abs(x0 - gp.inputs[k]) < 1e-9) {
          hit = true;
          break;
        }
      }
      if (!hit) break;
      x0 += 1e-9;
    }
    QueryProblem qp;
    qp.x0 = x0;
    qp.tau = tau;
    qp.constraint = constraint;
    PointInterval iv;
    try {
      qp.K0 = extended_gram(gp, x0, params);
      iv = std::holds_alternative<BoxConstraint>(qp.constraint) ? interval_original(qp)
                                                                : interval_refined(qp);
    } catch (const Error&) {
      iv.status = PointStatus::Infeasible;
      iv.lo = std::numeric_limits<double>::quiet_NaN();
      iv.hi = iv.lo;
    }
    band.lower[j] = iv.lo;
    band.upper[j] = iv.hi;
    band.status[static_cast<std::size_t>(j)] = iv.status;
  }
  return band;
}

}  // namespace kband
