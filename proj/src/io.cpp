#include "kband/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "kband/errors.hpp"

namespace kband {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw UsageError("config: key '" + key + "' has a non-numeric value '" + value + "'");
  }
  if (pos != value.size()) {
    throw UsageError("config: key '" + key + "' has trailing characters in '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) throw UsageError("config: key '" + key + "' must be an integer");
  return static_cast<long long>(v);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return is;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string point_status_name(PointStatus s) {
  switch (s) {
    case PointStatus::Feasible:
      return "Feasible";
    case PointStatus::Infeasible:
      return "Infeasible";
    case PointStatus::Clipped:
      return "Clipped";
  }
  return "Infeasible";
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config: line " + std::to_string(lineno) + " is not key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config: empty key on line " + std::to_string(lineno));
    kv[key] = value;
  }
  return kv;
}

ExperimentConfig experiment_config_from(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "n") {
      cfg.n = parse_int(key, value);
    } else if (key == "d") {
      cfg.d = parse_int(key, value);
    } else if (key == "m") {
      cfg.m = static_cast<int>(parse_int(key, value));
    } else if (key == "q") {
      cfg.q = static_cast<int>(parse_int(key, value));
    } else if (key == "alpha") {
      cfg.alpha = parse_double(key, value);
    } else if (key == "delta0") {
      cfg.delta0 = parse_double(key, value);
    } else if (key == "eta") {
      cfg.eta = parse_double(key, value);
    } else if (key == "jitter") {
      cfg.jitter = parse_double(key, value);
    } else if (key == "ridge") {
      cfg.ridge = parse_double(key, value);
    } else if (key == "lambda") {
      cfg.lambda_reg = parse_double(key, value);
    } else if (key == "group") {
      if (value == "permutation") {
        cfg.group = GroupKind::Permutation;
      } else if (value == "signchange") {
        cfg.group = GroupKind::SignChange;
      } else {
        throw UsageError("config: group must be 'permutation' or 'signchange'");
      }
    } else if (key == "noise") {
      if (value == "gaussian") {
        cfg.noise.kind = NoiseKind::Gaussian;
      } else if (value == "laplace") {
        cfg.noise.kind = NoiseKind::Laplace;
      } else if (value == "exponential") {
        cfg.noise.kind = NoiseKind::CenteredExponential;
      } else {
        throw UsageError("config: noise must be gaussian, laplace or exponential");
      }
    } else if (key == "noise_param") {
      cfg.noise.param = parse_double(key, value);
      if (!(cfg.noise.param > 0.0)) throw UsageError("config: noise_param must be positive");
    } else if (key == "exponential_reading") {
      if (value == "scale") {
        cfg.noise.rate_reading = false;
      } else if (value == "rate") {
        cfg.noise.rate_reading = true;
      } else {
        throw UsageError("config: exponential_reading must be 'scale' or 'rate'");
      }
    } else if (key == "grid") {
      cfg.grid_size = parse_int(key, value);
    } else if (key == "trials") {
      cfg.trials = parse_int(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "method") {
      if (value == "original") {
        cfg.method = BandMethod::Original;
      } else if (value == "refined") {
        cfg.method = BandMethod::Refined;
      } else if (value == "both") {
        cfg.method = BandMethod::Both;
      } else {
        throw UsageError("config: method must be original, refined or both");
      }
    } else if (key == "dataset") {
      // handled by the CLI; accepted here so one file drives a whole run
    } else {
      throw UsageError("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream os = open_out(path);
  os << "x,y\n";
  for (Eigen::Index i = 0; i < ds.x.size(); ++i) {
    os << format_double(ds.x[i]) << ',' << format_double(ds.y[i]) << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "x,y") {
    throw IoError("dataset csv '" + path + "': expected header 'x,y'");
  }
  std::vector<double> xs, ys;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) {
      throw IoError("dataset csv '" + path + "': bad row at line " + std::to_string(lineno));
    }
    xs.push_back(parse_double("x", trim(fields[0])));
    ys.push_back(parse_double("y", trim(fields[1])));
  }
  Dataset ds;
  ds.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  ds.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return ds;
}

void write_true_function_csv(const std::string& path, const TrueFunction& f) {
  std::ofstream os = open_out(path);
  os << "# band-limited mixture: f(x) = normalization * sum_k weight_k k(x, center_k)\n";
  os << "# eta=" << format_double(f.eta) << " normalization=" << format_double(f.normalization)
     << "\n";
  os << "center,weight\n";
  for (Eigen::Index k = 0; k < f.centers.size(); ++k) {
    os << format_double(f.centers[k]) << ',' << format_double(f.weights[k]) << '\n';
  }
}

void write_band_csv(const std::string& path, const Band& band) {
  std::ofstream os = open_out(path);
  os << "x,lower,upper,status\n";
  for (Eigen::Index j = 0; j < band.grid.size(); ++j) {
    os << format_double(band.grid[j]) << ',' << format_double(band.lower[j]) << ','
       << format_double(band.upper[j]) << ','
       << point_status_name(band.status[static_cast<std::size_t>(j)]) << '\n';
  }
}

Band read_band_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "x,lower,upper,status") {
    throw IoError("band csv '" + path + "': bad header");
  }
  std::vector<double> xs, lo, hi;
  std::vector<PointStatus> status;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) throw IoError("band csv '" + path + "': bad row");
    xs.push_back(std::strtod(fields[0].c_str(), nullptr));
    lo.push_back(std::strtod(fields[1].c_str(), nullptr));
    hi.push_back(std::strtod(fields[2].c_str(), nullptr));
    const std::string s = trim(fields[3]);
    status.push_back(s == "Feasible" ? PointStatus::Feasible
                                     : (s == "Clipped" ? PointStatus::Clipped
                                                       : PointStatus::Infeasible));
  }
  Band band;
  band.grid = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  band.lower = Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  band.upper = Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  band.status = std::move(status);
  return band;
}

void write_campaign_csv(const std::string& path, const CampaignSummary& summary) {
  std::ofstream os = open_out(path);
  os << "trial,tau,tau0,covered_band,covered_norm,mean_width_orig,mean_width_ref,seconds\n";
  for (std::size_t t = 0; t < summary.reports.size(); ++t) {
    const TrialReport& r = summary.reports[t];
    os << t << ',' << format_double(r.tau) << ',' << format_double(r.tau0) << ','
       << (r.covered_band_ref ? 1 : 0) << ',' << (r.covered_norm_tau0 ? 1 : 0) << ','
       << format_double(r.mean_width_orig) << ',' << format_double(r.mean_width_ref)
       << ",0.000\n";
  }
}

void write_campaign_summary_text(const std::string& path, const ExperimentConfig& cfg,
                                 const CampaignSummary& summary) {
  std::ostringstream os;
  os << "reliability campaign\n";
  os << "  trials            " << summary.trials << " (failures " << summary.failures << ")\n";
  os << "  n=" << cfg.n << " d=" << cfg.effective_d() << " m=" << cfg.m << " q=" << cfg.q
     << " alpha=" << cfg.alpha << " delta0=" << cfg.delta0 << " eta=" << cfg.eta << "\n";
  os << "  target coverage   " << format_double(1.0 - cfg.alpha - cfg.budget().beta) << "\n";
  os << "  band coverage     refined " << format_double(summary.band_coverage_ref);
  if (cfg.method != BandMethod::Refined) {
    os << "  original " << format_double(summary.band_coverage_orig);
  }
  os << "\n";
  os << "  norm coverage     tau " << format_double(summary.norm_coverage_tau) << "  tau0 "
     << format_double(summary.norm_coverage_tau0) << "\n";
  os << "  mean width        original " << format_double(summary.mean_width_orig) << "  refined "
     << format_double(summary.mean_width_ref) << "\n";
  os << "  3-sigma halfwidth " << format_double(summary.band_coverage_ref_halfwidth) << "\n";
  os << "  wall time         " << format_double(summary.total_seconds) << " s\n";
  write_text_file(path, os.str());
}

namespace {

struct SvgMapper {
  double x_min, x_max, y_min, y_max;
  double width = 860.0, height = 520.0, margin = 48.0;

  double px(double x) const {
    return margin + (x - x_min) / (x_max - x_min) * (width - 2.0 * margin);
  }
  double py(double y) const {
    return height - margin - (y - y_min) / (y_max - y_min) * (height - 2.0 * margin);
  }
};

std::string svg_poly(const std::vector<std::pair<double, double>>& pts, const SvgMapper& m,
                     const std::string& style, bool closed) {
  std::ostringstream os;
  os << (closed ? "<polygon" : "<polyline") << " points=\"";
  for (const auto& [x, y] : pts) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f,%.3f ", m.px(x), m.py(y));
    os << buf;
  }
  os << "\" " << style << "/>\n";
  return os.str();
}

std::string render_svg(const std::vector<const Band*>& bands,
                       const std::vector<std::string>& fills, const TrueFunction* truth,
                       const Dataset* data) {
  double y_min = -1.2, y_max = 1.2;
  for (const Band* band : bands) {
    for (Eigen::Index j = 0; j < band->grid.size(); ++j) {
      if (band->status[static_cast<std::size_t>(j)] == PointStatus::Infeasible) continue;
      y_min = std::min(y_min, band->lower[j]);
      y_max = std::max(y_max, band->upper[j]);
    }
  }
  if (data != nullptr) {
    for (Eigen::Index i = 0; i < data->y.size(); ++i) {
      y_min = std::min(y_min, data->y[i]);
      y_max = std::max(y_max, data->y[i]);
    }
  }
  const double pad = 0.05 * (y_max - y_min);
  SvgMapper m{0.0, 1.0, y_min - pad, y_max + pad};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << m.width << "\" height=\""
     << m.height << "\" viewBox=\"0 0 " << m.width << " " << m.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t b = 0; b < bands.size(); ++b) {
    const Band& band = *bands[b];
    std::vector<std::pair<double, double>> poly;
    for (Eigen::Index j = 0; j < band.grid.size(); ++j) {
      if (band.status[static_cast<std::size_t>(j)] == PointStatus::Infeasible) continue;
      poly.emplace_back(band.grid[j], band.upper[j]);
    }
    for (Eigen::Index j = band.grid.size() - 1; j >= 0; --j) {
      if (band.status[static_cast<std::size_t>(j)] == PointStatus::Infeasible) continue;
      poly.emplace_back(band.grid[j], band.lower[j]);
    }
    if (!poly.empty()) os << svg_poly(poly, m, fills[b], true);
  }

  if (data != nullptr) {
    for (Eigen::Index i = 0; i < data->x.size(); ++i) {
      char buf[128];
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"1.6\" fill=\"#555555\"/>\n",
                    m.px(data->x[i]), m.py(data->y[i]));
      os << buf;
    }
  }

  if (truth != nullptr) {
    std::vector<std::pair<double, double>> line;
    const Eigen::Index samples = 512;
    for (Eigen::Index j = 0; j < samples; ++j) {
      const double x = static_cast<double>(j) / static_cast<double>(samples - 1);
      line.emplace_back(x, (*truth)(x));
    }
    os << svg_poly(line, m, "fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.6\"", false);
  }

  os << "<line x1=\"" << m.px(0.0) << "\" y1=\"" << m.py(m.y_min + 1e-12) << "\" x2=\""
     << m.px(1.0) << "\" y2=\"" << m.py(m.y_min + 1e-12)
     << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string render_band_svg(const Band& band, const TrueFunction* truth, const Dataset* data) {
  return render_svg({&band}, {"fill=\"#7fb3d5\" fill-opacity=\"0.55\" stroke=\"#2471a3\""}, truth,
                    data);
}

std::string render_compare_svg(const Band& original, const Band& refined,
                               const TrueFunction* truth, const Dataset* data) {
  return render_svg({&original, &refined},
                    {"fill=\"#f5b041\" fill-opacity=\"0.45\" stroke=\"#b9770e\"",
                     "fill=\"#7fb3d5\" fill-opacity=\"0.55\" stroke=\"#2471a3\""},
                    truth, data);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os = open_out(path);
  os << content;
  if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace kband
