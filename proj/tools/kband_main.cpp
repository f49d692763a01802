#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "kband/errors.hpp"
#include "kband/harness.hpp"
#include "kband/io.hpp"

namespace {

using namespace kband;

constexpr const char* kUsage =
    "usage: kband <synth|band|montecarlo|compare> [options]\n"
    "\n"
    "options:\n"
    "  --config <path>  flat key=value experiment configuration ('#' comments)\n"
    "  --seed <u64>     seed override (falls back to config, then $KBAND_SEED, then 1)\n"
    "  --out <dir>      output directory (created if missing; default '.')\n"
    "  --grid <int>     query grid size override (>= 2)\n"
    "  --quiet          suppress progress output\n"
    "\n"
    "subcommands:\n"
    "  synth       write true_function.csv and dataset.csv for the configured seed\n"
    "  band        build a confidence band; writes band.csv and band.svg\n"
    "  montecarlo  coverage campaign; writes campaign.csv and summary.txt\n"
    "  compare     original vs refined band on one dataset; writes band_original.csv,\n"
    "              band_refined.csv, compare.svg and width_summary.txt\n";

enum class Subcommand { Synth, Band, MonteCarlo, Compare };

struct CliConfig {
  Subcommand subcommand = Subcommand::Band;
  std::optional<std::string> config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<Eigen::Index> grid;
  bool quiet = false;
};

CliConfig parse_args(int argc, char** argv) {
  if (argc < 2) throw UsageError("missing subcommand");
  CliConfig cli;
  const std::string sub = argv[1];
  if (sub == "synth") {
    cli.subcommand = Subcommand::Synth;
  } else if (sub == "band") {
    cli.subcommand = Subcommand::Band;
  } else if (sub == "montecarlo") {
    cli.subcommand = Subcommand::MonteCarlo;
  } else if (sub == "compare") {
    cli.subcommand = Subcommand::Compare;
  } else {
    throw UsageError("unknown subcommand '" + sub + "'");
  }

  for (int i = 2; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) throw UsageError("flag '" + arg + "' expects a value");
      return argv[++i];
    };
    if (arg == "--config") {
      cli.config_path = next();
    } else if (arg == "--seed") {
      const std::string v = next();
      try {
        cli.seed = std::stoull(v);
      } catch (const std::exception&) {
        throw UsageError("--seed expects an unsigned integer, got '" + v + "'");
      }
    } else if (arg == "--out") {
      cli.out_dir = next();
    } else if (arg == "--grid") {
      const std::string v = next();
      long long g = 0;
      try {
        g = std::stoll(v);
      } catch (const std::exception&) {
        throw UsageError("--grid expects an integer, got '" + v + "'");
      }
      if (g < 2) throw UsageError("--grid must be at least 2");
      cli.grid = static_cast<Eigen::Index>(g);
    } else if (arg == "--quiet") {
      cli.quiet = true;
    } else {
      throw UsageError("unknown option '" + arg + "'");
    }
  }
  return cli;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int run(const CliConfig& cli) {
  std::map<std::string, std::string> kv;
  if (cli.config_path) kv = parse_config_file(*cli.config_path);
  ExperimentConfig cfg = experiment_config_from(kv);

  if (cli.seed) {
    cfg.seed = *cli.seed;
  } else if (kv.count("seed") == 0) {
    if (const char* env = std::getenv("KBAND_SEED"); env != nullptr) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw UsageError("KBAND_SEED is not an unsigned integer");
      }
    }
  }
  if (cli.grid) cfg.grid_size = *cli.grid;
  cfg.validate();

  std::error_code ec;
  std::filesystem::create_directories(cli.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cli.out_dir + "'");

  Rng master(cfg.seed);

  switch (cli.subcommand) {
    case Subcommand::Synth: {
      Rng fn_rng = master.derive(0xF1);
      Rng data_rng = master.derive(0xDA);
      const TrueFunction truth = synth_true_function(fn_rng, cfg.eta);
      const Dataset data = sample_dataset(truth, cfg.n, cfg.noise, data_rng);
      write_true_function_csv(join(cli.out_dir, "true_function.csv"), truth);
      write_dataset_csv(join(cli.out_dir, "dataset.csv"), data);
      if (!cli.quiet) {
        std::cout << "synth: n=" << cfg.n << " seed=" << cfg.seed << " sup-normalization="
                  << format_double(truth.normalization) << "\n";
      }
      return 0;
    }
    case Subcommand::Band: {
      PipelineResult result;
      const bool external = kv.count("dataset") > 0;
      if (external) {
        Dataset data = read_dataset_csv(kv.at("dataset"));
        if (cfg.method == BandMethod::Both) cfg.method = BandMethod::Refined;
        result = run_pipeline_with(cfg, std::move(data), nullptr, master);
      } else {
        if (cfg.method == BandMethod::Both) cfg.method = BandMethod::Refined;
        result = run_pipeline(cfg, master);
      }
      if (!result.report.ok) {
        std::cerr << "kband band: solver failure: " << result.report.error << "\n";
        return 1;
      }
      const Band& band = cfg.method == BandMethod::Original ? *result.original : *result.refined;
      write_band_csv(join(cli.out_dir, "band.csv"), band);
      write_text_file(join(cli.out_dir, "band.svg"),
                      render_band_svg(band, external ? nullptr : &result.truth, &result.data));
      if (!cli.quiet) {
        std::cout << "band: tau=" << format_double(result.report.tau)
                  << " tau0=" << format_double(result.report.tau0)
                  << " mean-width=" << format_double(band.mean_width())
                  << (band.all_feasible() ? " feasible" : " has-infeasible-points") << "\n";
      }
      return 0;
    }
    case Subcommand::MonteCarlo: {
      const CampaignSummary summary = run_reliability_campaign(cfg, cfg.trials);
      write_campaign_csv(join(cli.out_dir, "campaign.csv"), summary);
      write_campaign_summary_text(join(cli.out_dir, "summary.txt"), cfg, summary);
      if (!cli.quiet) {
        std::cout << "montecarlo: trials=" << summary.trials
                  << " band-coverage=" << format_double(summary.band_coverage_ref)
                  << " norm-coverage(tau0)=" << format_double(summary.norm_coverage_tau0) << "\n";
      }
      return summary.failures == summary.trials ? 1 : 0;
    }
    case Subcommand::Compare: {
      cfg.method = BandMethod::Both;
      PipelineResult result = run_pipeline(cfg, master);
      if (!result.report.ok) {
        std::cerr << "kband compare: solver failure: " << result.report.error << "\n";
        return 1;
      }
      write_band_csv(join(cli.out_dir, "band_original.csv"), *result.original);
      write_band_csv(join(cli.out_dir, "band_refined.csv"), *result.refined);
      write_text_file(join(cli.out_dir, "compare.svg"),
                      render_compare_svg(*result.original, *result.refined, &result.truth,
                                         &result.data));
      std::ostringstream os;
      os << "width summary\n";
      os << "  tau               " << format_double(result.report.tau) << "\n";
      os << "  tau0              " << format_double(result.report.tau0) << "\n";
      os << "  mean_width_orig   " << format_double(result.report.mean_width_orig) << "\n";
      os << "  mean_width_ref    " << format_double(result.report.mean_width_ref) << "\n";
      os << "  max_width_orig    " << format_double(result.report.max_width_orig) << "\n";
      os << "  max_width_ref     " << format_double(result.report.max_width_ref) << "\n";
      write_text_file(join(cli.out_dir, "width_summary.txt"), os.str());
      if (!cli.quiet) {
        std::cout << "compare: mean-width original=" << format_double(result.report.mean_width_orig)
                  << " refined=" << format_double(result.report.mean_width_ref) << "\n";
      }
      return 0;
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(parse_args(argc, argv));
  } catch (const UsageError& e) {
    std::cerr << "kband: " << e.what() << "\n\n" << kUsage;
    return 2;
  } catch (const IoError& e) {
    std::cerr << "kband: i/o error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "kband: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "kband: " << e.what() << "\n";
    return 1;
  }
}
