#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "kband/band.hpp"
#include "kband/ellipsoid.hpp"
#include "kband/harness.hpp"
#include "kband/io.hpp"
#include "kband/kernel.hpp"
#include "kband/normbound.hpp"
#include "kband/perturbation.hpp"

namespace py = pybind11;
using namespace kband;

namespace {

KernelParams make_params(double eta, double jitter) { return KernelParams{eta, jitter}; }

ExperimentConfig config_from_kwargs(Eigen::Index n, Eigen::Index d, int m, int q, double alpha,
                                    double delta0, double eta, double jitter, double ridge,
                                    double lambda_reg, const std::string& group,
                                    const std::string& noise, double noise_param,
                                    const std::string& exponential_reading, Eigen::Index grid,
                                    Eigen::Index trials, std::uint64_t seed,
                                    const std::string& method) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.d = d;
  cfg.m = m;
  cfg.q = q;
  cfg.alpha = alpha;
  cfg.delta0 = delta0;
  cfg.eta = eta;
  cfg.jitter = jitter;
  cfg.ridge = ridge;
  cfg.lambda_reg = lambda_reg;
  if (group == "permutation") {
    cfg.group = GroupKind::Permutation;
  } else if (group == "signchange") {
    cfg.group = GroupKind::SignChange;
  } else {
    throw py::value_error("group must be 'permutation' or 'signchange'");
  }
  if (noise == "gaussian") {
    cfg.noise.kind = NoiseKind::Gaussian;
  } else if (noise == "laplace") {
    cfg.noise.kind = NoiseKind::Laplace;
  } else if (noise == "exponential") {
    cfg.noise.kind = NoiseKind::CenteredExponential;
  } else {
    throw py::value_error("noise must be gaussian, laplace or exponential");
  }
  cfg.noise.param = noise_param;
  cfg.noise.rate_reading = exponential_reading == "rate";
  cfg.grid_size = grid;
  cfg.trials = trials;
  cfg.seed = seed;
  if (method == "original") {
    cfg.method = BandMethod::Original;
  } else if (method == "refined") {
    cfg.method = BandMethod::Refined;
  } else if (method == "both") {
    cfg.method = BandMethod::Both;
  } else {
    throw py::value_error("method must be original, refined or both");
  }
  cfg.validate();
  return cfg;
}

py::dict band_to_dict(const Band& band) {
  py::dict out;
  out["x"] = band.grid;
  out["lower"] = band.lower;
  out["upper"] = band.upper;
  py::list status;
  for (const auto s : band.status) status.append(point_status_name(s));
  out["status"] = status;
  out["mean_width"] = band.mean_width();
  out["max_width"] = band.max_width();
  out["all_feasible"] = band.all_feasible();
  return out;
}

py::dict result_to_dict(const PipelineResult& res, bool with_truth) {
  py::dict out;
  out["ok"] = res.report.ok;
  out["error"] = res.report.error;
  out["tau"] = res.report.tau;
  out["tau0"] = res.report.tau0;
  out["x"] = res.data.x;
  out["y"] = res.data.y;
  if (res.original) out["original"] = band_to_dict(*res.original);
  if (res.refined) out["refined"] = band_to_dict(*res.refined);
  if (with_truth) {
    py::dict truth;
    truth["centers"] = res.truth.centers;
    truth["weights"] = res.truth.weights;
    truth["eta"] = res.truth.eta;
    truth["normalization"] = res.truth.normalization;
    out["true_function"] = truth;
    out["covered_band_refined"] = res.report.covered_band_ref;
    out["covered_band_original"] = res.report.covered_band_orig;
    out["covered_norm_tau"] = res.report.covered_norm_tau;
    out["covered_norm_tau0"] = res.report.covered_norm_tau0;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_kband, m) {
  m.doc() = "Nonasymptotic simultaneous confidence bands for band-limited regression";

  m.def(
      "pw_kernel",
      [](double z, double s, double eta) { return pw_kernel(z, s, make_params(eta, 0.0)); },
      py::arg("z"), py::arg("s"), py::arg("eta") = 30.0);

  m.def(
      "gram",
      [](const Eigen::VectorXd& inputs, double eta, double jitter) {
        return gram(inputs, make_params(eta, jitter)).K;
      },
      py::arg("inputs"), py::arg("eta") = 30.0, py::arg("jitter") = 1e-8);

  m.def(
      "min_norm_interpolant",
      [](const Eigen::VectorXd& inputs, const Eigen::VectorXd& values, double eta, double jitter) {
        const Interpolant f = min_norm_interpolant(inputs, values, make_params(eta, jitter));
        py::dict out;
        out["coefficients"] = f.coefficients;
        out["centers"] = f.centers;
        out["eta"] = f.eta;
        out["squared_norm"] = f.squared_norm;
        return out;
      },
      py::arg("inputs"), py::arg("values"), py::arg("eta") = 30.0, py::arg("jitter") = 0.0);

  m.def(
      "eval_interpolant",
      [](const Eigen::VectorXd& coefficients, const Eigen::VectorXd& centers, double eta,
         const Eigen::VectorXd& queries) {
        Interpolant f;
        f.coefficients = coefficients;
        f.centers = centers;
        f.eta = eta;
        Eigen::VectorXd out(queries.size());
        for (Eigen::Index i = 0; i < queries.size(); ++i) out[i] = eval_interpolant(f, queries[i]);
        return out;
      },
      py::arg("coefficients"), py::arg("centers"), py::arg("eta"), py::arg("queries"));

  m.def(
      "synth_experiment",
      [](std::uint64_t seed, Eigen::Index n, double eta, const std::string& noise,
         double noise_param) {
        Rng master(seed);
        Rng fn_rng = master.derive(0xF1);
        Rng data_rng = master.derive(0xDA);
        const TrueFunction truth = synth_true_function(fn_rng, eta);
        NoiseModel model;
        model.kind = noise == "gaussian"
                         ? NoiseKind::Gaussian
                         : (noise == "laplace" ? NoiseKind::Laplace
                                               : NoiseKind::CenteredExponential);
        model.param = noise_param;
        const Dataset data = sample_dataset(truth, n, model, data_rng);
        py::dict out;
        out["x"] = data.x;
        out["y"] = data.y;
        out["centers"] = truth.centers;
        out["weights"] = truth.weights;
        out["normalization"] = truth.normalization;
        return out;
      },
      py::arg("seed"), py::arg("n") = 300, py::arg("eta") = 30.0,
      py::arg("noise") = "exponential", py::arg("noise_param") = 0.25);

  m.def(
      "fit_band",
      [](const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::Index d, int m, int q,
         double alpha, double delta0, double eta, double jitter, double ridge, double lambda_reg,
         const std::string& group, Eigen::Index grid, std::uint64_t seed,
         const std::string& method) {
        ExperimentConfig cfg = config_from_kwargs(
            x.size(), d, m, q, alpha, delta0, eta, jitter, ridge, lambda_reg, group, "laplace",
            0.25, "scale", grid, 1, seed, method);
        Rng master(seed);
        Dataset data{x, y};
        const PipelineResult res = run_pipeline_with(cfg, std::move(data), nullptr, master);
        if (!res.report.ok) throw std::runtime_error("pipeline failed: " + res.report.error);
        return result_to_dict(res, false);
      },
      py::arg("x"), py::arg("y"), py::arg("d") = 0, py::arg("m") = 40, py::arg("q") = 2,
      py::arg("alpha") = 0.05, py::arg("delta0") = 0.01, py::arg("eta") = 30.0,
      py::arg("jitter") = 1e-8, py::arg("ridge") = 1e-8, py::arg("lambda_reg") = 0.0,
      py::arg("group") = "permutation", py::arg("grid") = 512, py::arg("seed") = 1,
      py::arg("method") = "refined");

  m.def(
      "run_experiment",
      [](std::uint64_t seed, Eigen::Index n, Eigen::Index d, int m, int q, double alpha,
         double delta0, double eta, const std::string& group, const std::string& noise,
         double noise_param, Eigen::Index grid, const std::string& method) {
        ExperimentConfig cfg = config_from_kwargs(n, d, m, q, alpha, delta0, eta, 1e-8, 1e-8, 0.0,
                                                  group, noise, noise_param, "scale", grid, 1,
                                                  seed, method);
        Rng master(seed);
        const PipelineResult res = run_pipeline(cfg, master);
        return result_to_dict(res, true);
      },
      py::arg("seed"), py::arg("n") = 300, py::arg("d") = 0, py::arg("m") = 40, py::arg("q") = 2,
      py::arg("alpha") = 0.05, py::arg("delta0") = 0.01, py::arg("eta") = 30.0,
      py::arg("group") = "permutation", py::arg("noise") = "exponential",
      py::arg("noise_param") = 0.25, py::arg("grid") = 512, py::arg("method") = "both");

  m.def(
      "montecarlo",
      [](std::uint64_t seed, Eigen::Index trials, Eigen::Index n, Eigen::Index d, int m, int q,
         double alpha, double delta0, double eta, const std::string& group,
         const std::string& noise, double noise_param, Eigen::Index grid) {
        ExperimentConfig cfg = config_from_kwargs(n, d, m, q, alpha, delta0, eta, 1e-8, 1e-8, 0.0,
                                                  group, noise, noise_param, "scale", grid, trials,
                                                  seed, "both");
        const CampaignSummary s = run_reliability_campaign(cfg, trials);
        py::dict out;
        out["trials"] = s.trials;
        out["failures"] = s.failures;
        out["band_coverage_refined"] = s.band_coverage_ref;
        out["band_coverage_original"] = s.band_coverage_orig;
        out["norm_coverage_tau"] = s.norm_coverage_tau;
        out["norm_coverage_tau0"] = s.norm_coverage_tau0;
        out["mean_width_original"] = s.mean_width_orig;
        out["mean_width_refined"] = s.mean_width_ref;
        return out;
      },
      py::arg("seed"), py::arg("trials") = 20, py::arg("n") = 100, py::arg("d") = 0,
      py::arg("m") = 40, py::arg("q") = 2, py::arg("alpha") = 0.05, py::arg("delta0") = 0.01,
      py::arg("eta") = 30.0, py::arg("group") = "permutation", py::arg("noise") = "exponential",
      py::arg("noise_param") = 0.25, py::arg("grid") = 129);

  m.attr("__version__") = "0.1.0";
}
