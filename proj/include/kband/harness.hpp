#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "kband/band.hpp"
#include "kband/ellipsoid.hpp"
#include "kband/kernel.hpp"
#include "kband/normbound.hpp"
#include "kband/perturbation.hpp"
#include "kband/rng.hpp"

namespace kband {

/// Mixture of 20 kernel sections, rescaled so sup |f| <= 1 on a dense grid.
struct TrueFunction {
  Eigen::VectorXd centers;  // 20 points in [0,1]
  Eigen::VectorXd weights;  // raw uniform [-1,1] weights
  double eta = 30.0;
  double normalization = 1.0;  // scale applied to the raw mixture

  double operator()(double x) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& xs) const;
  /// Full-line squared RKHS (= L2) norm, w' Kbar w over the centers.
  double squared_rkhs_norm() const;
  /// Composite-Simpson estimate of the squared L2 norm on [0, 1].
  double squared_l2_norm_01(Eigen::Index intervals = 10000) const;
};

TrueFunction synth_true_function(Rng& rng, double eta);

enum class NoiseKind { Gaussian, Laplace, CenteredExponential };

/// Mean-zero observation noise. For CenteredExponential the `param` is read
/// as the scale (mean) by default; the rate reading subtracts 1/param.
struct NoiseModel {
  NoiseKind kind = NoiseKind::CenteredExponential;
  double param = 0.25;
  bool rate_reading = false;

  double sample(Rng& rng) const;
  double stddev() const;
};

struct Dataset {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

Dataset sample_dataset(const TrueFunction& f, Eigen::Index n, const NoiseModel& noise, Rng& rng);

enum class BandMethod { Original, Refined, Both };

struct ExperimentConfig {
  Eigen::Index n = 300;
  Eigen::Index d = 0;  // 0 -> min(n/5, 50)
  int m = 40;
  int q = 2;
  double alpha = 0.05;
  double delta0 = 0.01;
  double eta = 30.0;
  double jitter = 1e-8;
  /// Relative ridge on Phi'Phi inside the evaluation-function weighting;
  /// keeps the outer-approximation programs bounded (see EvaluationContext).
  /// Larger values tighten the ellipsoid but erode its coverage, so the
  /// default stays at the magnitude of the kernel jitter.
  double ridge = 1e-8;
  double lambda_reg = 0.0;
  GroupKind group = GroupKind::Permutation;
  NoiseModel noise;
  Eigen::Index grid_size = 512;
  Eigen::Index trials = 100;
  std::uint64_t seed = 1;
  BandMethod method = BandMethod::Both;

  Eigen::Index effective_d() const;
  KernelParams kernel_params() const { return KernelParams{eta, jitter}; }
  RiskBudget budget() const { return RiskBudget{alpha, static_cast<double>(q) / m, delta0}; }
  void validate() const;
};

struct TrialReport {
  double tau = 0.0;
  double tau0 = 0.0;
  double mean_width_orig = 0.0;
  double max_width_orig = 0.0;
  double mean_width_ref = 0.0;
  double max_width_ref = 0.0;
  bool covered_band_orig = false;
  bool covered_band_ref = false;
  bool covered_norm_tau = false;
  bool covered_norm_tau0 = false;
  double seconds = 0.0;
  bool ok = false;
  std::string error;
};

struct PipelineResult {
  TrueFunction truth;
  Dataset data;
  std::optional<Band> original;
  std::optional<Band> refined;
  std::optional<Ellipsoid> value_ellipsoid;
  TrialReport report;
};

/// End-to-end run: data synthesis, confidence ellipsoid, norm bounds, bands.
PipelineResult run_pipeline(const ExperimentConfig& cfg, Rng& rng);

/// Same pipeline on a caller-provided dataset; coverage fields are filled
/// only when the true function is known.
PipelineResult run_pipeline_with(const ExperimentConfig& cfg, Dataset data,
                                 const TrueFunction* truth, Rng& rng);

/// Min-norm coefficients matching f at the first d inputs of the pack.
IdealVector ideal_vector(const GramPack& gp, const TrueFunction& f);

struct CampaignSummary {
  std::vector<TrialReport> reports;
  Eigen::Index trials = 0;
  Eigen::Index failures = 0;
  double band_coverage_orig = 0.0;
  double band_coverage_ref = 0.0;
  double norm_coverage_tau = 0.0;
  double norm_coverage_tau0 = 0.0;
  double mean_width_orig = 0.0;
  double mean_width_ref = 0.0;
  double band_coverage_ref_halfwidth = 0.0;  // 3-sigma binomial half width
  double total_seconds = 0.0;
};

/// Monte Carlo estimate of coverage and width statistics over seeded trials;
/// trial t uses the stream derived from (cfg.seed, t), so results do not
/// depend on scheduling.
CampaignSummary run_reliability_campaign(const ExperimentConfig& cfg, Eigen::Index trials);

}  // namespace kband
