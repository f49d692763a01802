#include "kband/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "kband/errors.hpp"

namespace kband {

namespace {

constexpr Eigen::Index kMixtureSize = 20;
constexpr Eigen::Index kSupGrid = 10000;

double simpson(const std::function<double(double)>& f, double a, double b, Eigen::Index intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = f(a) + f(b);
  for (Eigen::Index i = 1; i < intervals; ++i) {
    acc += f(a + h * static_cast<double>(i)) * (i % 2 == 0 ? 2.0 : 4.0);
  }
  return acc * h / 3.0;
}

}  // namespace

double TrueFunction::operator()(double x) const {
  const KernelParams p{eta, 0.0};
  double acc = 0.0;
  for (Eigen::Index k = 0; k < centers.size(); ++k) {
    acc += weights[k] * pw_kernel(x, centers[k], p);
  }
  return normalization * acc;
}

Eigen::VectorXd TrueFunction::eval(const Eigen::VectorXd& xs) const {
  Eigen::VectorXd out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = (*this)(xs[i]);
  return out;
}

double TrueFunction::squared_rkhs_norm() const {
  const KernelParams p{eta, 0.0};
  double acc = 0.0;
  for (Eigen::Index i = 0; i < centers.size(); ++i) {
    for (Eigen::Index j = 0; j < centers.size(); ++j) {
      acc += weights[i] * weights[j] * pw_kernel(centers[i], centers[j], p);
    }
  }
  return normalization * normalization * acc;
}

double TrueFunction::squared_l2_norm_01(Eigen::Index intervals) const {
  return simpson([this](double x) { const double v = (*this)(x); return v * v; }, 0.0, 1.0,
                 intervals);
}

TrueFunction synth_true_function(Rng& rng, double eta) {
  TrueFunction f;
  f.eta = eta;
  f.centers.resize(kMixtureSize);
  f.weights.resize(kMixtureSize);
  for (Eigen::Index k = 0; k < kMixtureSize; ++k) f.centers[k] = rng.uniform01();
  for (Eigen::Index k = 0; k < kMixtureSize; ++k) f.weights[k] = rng.uniform(-1.0, 1.0);
  f.normalization = 1.0;

  double sup = 0.0;
  for (Eigen::Index i = 0; i <= kSupGrid; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(kSupGrid);
    sup = std::max(sup, std::abs(f(x)));
  }
  if (sup > 1.0) f.normalization = 1.0 / sup;
  return f;
}

double NoiseModel::sample(Rng& rng) const {
  switch (kind) {
    case NoiseKind::Gaussian:
      return param * rng.normal();
    case NoiseKind::Laplace: {
      const double u = rng.open01() - 0.5;
      const double sgn = u < 0.0 ? -1.0 : 1.0;
      return -param * sgn * std::log(1.0 - 2.0 * std::abs(u));
    }
    case NoiseKind::CenteredExponential: {
      const double mean = rate_reading ? 1.0 / param : param;
      return -mean * std::log(rng.open01()) - mean;
    }
  }
  return 0.0;
}

double NoiseModel::stddev() const {
  switch (kind) {
    case NoiseKind::Gaussian:
      return param;
    case NoiseKind::Laplace:
      return param * std::numbers::sqrt2;
    case NoiseKind::CenteredExponential:
      return rate_reading ? 1.0 / param : param;
  }
  return 0.0;
}

Dataset sample_dataset(const TrueFunction& f, Eigen::Index n, const NoiseModel& noise, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be positive");
  Dataset ds;
  ds.x.resize(n);
  ds.y.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) ds.x[k] = rng.uniform01();
  for (Eigen::Index k = 0; k < n; ++k) ds.y[k] = f(ds.x[k]) + noise.sample(rng);
  return ds;
}

Eigen::Index ExperimentConfig::effective_d() const {
  if (d > 0) return d;
  return std::max<Eigen::Index>(1, std::min<Eigen::Index>(n / 5, 50));
}

void ExperimentConfig::validate() const {
  if (n < 1) throw std::invalid_argument("config: n must be positive");
  if (effective_d() > n) throw std::invalid_argument("config: d must not exceed n");
  if (m < 2 || q < 1 || q >= m) throw std::invalid_argument("config: need m >= 2 and 0 < q < m");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha in (0,1)");
  if (!(alpha + static_cast<double>(q) / m < 1.0)) {
    throw std::invalid_argument("config: alpha + q/m must stay below 1");
  }
  if (!(delta0 >= 0.0)) throw std::invalid_argument("config: delta0 must be nonnegative");
  if (!(eta > 0.0)) throw std::invalid_argument("config: eta must be positive");
  if (!(jitter >= 0.0)) throw std::invalid_argument("config: jitter must be nonnegative");
  if (!(ridge >= 0.0)) throw std::invalid_argument("config: ridge must be nonnegative");
  if (lambda_reg < 0.0) throw NegativeLambda("config: lambda must be nonnegative");
  if (grid_size < 2) throw std::invalid_argument("config: grid must be at least 2");
  if (trials < 1) throw std::invalid_argument("config: trials must be positive");
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, Rng& rng) {
  cfg.validate();
  Rng fn_rng = rng.derive(0xF1);
  Rng data_rng = rng.derive(0xDA);
  TrueFunction truth = synth_true_function(fn_rng, cfg.eta);
  Dataset data = sample_dataset(truth, cfg.n, cfg.noise, data_rng);
  return run_pipeline_with(cfg, std::move(data), &truth, rng);
}

PipelineResult run_pipeline_with(const ExperimentConfig& cfg, Dataset data,
                                 const TrueFunction* truth, Rng& rng) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  PipelineResult out;
  out.report.ok = false;
  if (truth != nullptr) out.truth = *truth;
  out.data = std::move(data);

  const std::uint64_t ctx_seed = rng.derive(0xC7).seed();
  const KernelParams params = cfg.kernel_params();
  const Eigen::Index d = std::min<Eigen::Index>(cfg.effective_d(), out.data.x.size());

  try {
    const GramPack gp = gram(out.data.x, params).with_d(d);
    const KgpProblem kgp = build_kgp_regression(gp, cfg.lambda_reg, out.data.y);
    const PerturbationGroup group{cfg.group, d};
    const EvaluationContext ctx =
        EvaluationContext::create(kgp.phi, kgp.v, group, cfg.m, cfg.q, ctx_seed, cfg.ridge);

    const auto [param_ellipsoid, cert] = outer_ellipsoid(ctx);
    // Fold in the boundedness prior sup|f*| <= 1: the true value vector obeys
    // ||z*||^2 <= d, so blending keeps the coverage event intact while the
    // group-invariant escape directions of the raw ellipsoid stay bounded.
    out.value_ellipsoid = blend_with_ball(
        to_value_ellipsoid_structured(param_ellipsoid, gp, cfg.lambda_reg, ctx.ridge_abs(),
                                      cert.gamma_star, static_cast<double>(ctx.n_prime())),
        static_cast<double>(d), 0.5);

    const RiskBudget budget = cfg.budget();
    // The range prior |f*| <= 1 bounds every true value, so the per-point
    // intervals can be clipped to [-1, 1] without touching the coverage
    // event; the refined program gets the same clip so its feasible set
    // stays inside the original one.
    auto intervals = pointwise_intervals(*out.value_ellipsoid);
    for (auto& [nu, mu] : intervals) {
      nu = std::clamp(nu, -1.0, 1.0);
      mu = std::clamp(mu, nu, 1.0);
    }
    const NormBound tau = tau_original(intervals, budget, d);
    const double xi = std::min(xi_star(*out.value_ellipsoid, d), tau.xi_or_mean);
    const NormBound tau0 = tau_refined(xi, budget, d);
    out.report.tau = tau.tau;
    out.report.tau0 = tau0.tau;

    const Eigen::VectorXd grid = default_grid(cfg.grid_size);
    Eigen::VectorXd truth_on_grid;
    if (truth != nullptr) {
      truth_on_grid = out.truth.eval(grid);
      const double norm01 = out.truth.squared_l2_norm_01();
      out.report.covered_norm_tau = norm01 <= tau.tau;
      out.report.covered_norm_tau0 = norm01 <= tau0.tau;
    }

    auto contains_graph = [&](const Band& band) {
      if (truth == nullptr) return false;
      for (Eigen::Index j = 0; j < band.grid.size(); ++j) {
        if (band.status[static_cast<std::size_t>(j)] == PointStatus::Infeasible) return false;
        if (truth_on_grid[j] < band.lower[j] || truth_on_grid[j] > band.upper[j]) return false;
      }
      return true;
    };

    if (cfg.method == BandMethod::Original || cfg.method == BandMethod::Both) {
      out.original = build_band(grid, gp, tau, BoxConstraint{intervals}, params);
      out.report.mean_width_orig = out.original->mean_width();
      out.report.max_width_orig = out.original->max_width();
      out.report.covered_band_orig = contains_graph(*out.original);
    }
    if (cfg.method == BandMethod::Refined || cfg.method == BandMethod::Both) {
      out.refined = build_band(grid, gp, tau0,
                               EllipsoidConstraint{*out.value_ellipsoid, intervals}, params);
      out.report.mean_width_ref = out.refined->mean_width();
      out.report.max_width_ref = out.refined->max_width();
      out.report.covered_band_ref = contains_graph(*out.refined);
    }
    out.report.ok = true;
  } catch (const Error& e) {
    out.report.error = e.what();
  }

  out.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

IdealVector ideal_vector(const GramPack& gp, const TrueFunction& f) {
  if (gp.d < 1) throw std::invalid_argument("ideal_vector: GramPack::with_d not applied");
  Eigen::VectorXd values(gp.d);
  for (Eigen::Index k = 0; k < gp.d; ++k) values[k] = f(gp.inputs[k]);
  const SpdSolver solver = SpdSolver::factor(gp.K2, gp.params.spectral_floor());
  return IdealVector{solver.solve(values)};
}

CampaignSummary run_reliability_campaign(const ExperimentConfig& cfg, Eigen::Index trials) {
  if (trials < 1) throw std::invalid_argument("run_reliability_campaign: trials must be positive");
  cfg.validate();
  CampaignSummary s;
  s.trials = trials;
  s.reports.resize(static_cast<std::size_t>(trials));

  // Trial t always consumes the stream derived from (seed, t) and writes into
  // slot t, so the campaign is reproducible for any worker count.
  const Rng master(cfg.seed);
  auto run_trial = [&](Eigen::Index t) {
    Rng trial_rng = master.derive(0x54520000ULL + static_cast<std::uint64_t>(t));
    try {
      s.reports[static_cast<std::size_t>(t)] = run_pipeline(cfg, trial_rng).report;
    } catch (const std::exception& e) {
      s.reports[static_cast<std::size_t>(t)].ok = false;
      s.reports[static_cast<std::size_t>(t)].error = e.what();
    }
  };

  const unsigned hw = std::thread::hardware_concurrency();
  const Eigen::Index workers =
      std::min<Eigen::Index>(trials, std::max<unsigned>(hw, 1));
  if (workers <= 1) {
    for (Eigen::Index t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Eigen::Index w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (Eigen::Index t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) {
          run_trial(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  Eigen::Index n_orig = 0, n_ref = 0;
  for (const TrialReport& r : s.reports) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    s.norm_coverage_tau += r.covered_norm_tau ? 1.0 : 0.0;
    s.norm_coverage_tau0 += r.covered_norm_tau0 ? 1.0 : 0.0;
    if (cfg.method != BandMethod::Refined) {
      s.band_coverage_orig += r.covered_band_orig ? 1.0 : 0.0;
      s.mean_width_orig += r.mean_width_orig;
      ++n_orig;
    }
    if (cfg.method != BandMethod::Original) {
      s.band_coverage_ref += r.covered_band_ref ? 1.0 : 0.0;
      s.mean_width_ref += r.mean_width_ref;
      ++n_ref;
    }
    s.total_seconds += r.seconds;
  }
  const double nt = static_cast<double>(trials);
  s.norm_coverage_tau /= nt;
  s.norm_coverage_tau0 /= nt;
  s.band_coverage_orig = n_orig > 0 ? s.band_coverage_orig / nt : 0.0;
  s.band_coverage_ref = n_ref > 0 ? s.band_coverage_ref / nt : 0.0;
  s.mean_width_orig = n_orig > 0 ? s.mean_width_orig / static_cast<double>(n_orig) : 0.0;
  s.mean_width_ref = n_ref > 0 ? s.mean_width_ref / static_cast<double>(n_ref) : 0.0;
  const double p = s.band_coverage_ref;
  s.band_coverage_ref_halfwidth = 3.0 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / nt);
  return s;
}

}  // namespace kband
