#pragma once

#include <map>
#include <string>

#include "kband/band.hpp"
#include "kband/harness.hpp"

namespace kband {

/// %.17g with C-locale decimal point; round-trips doubles exactly.
std::string format_double(double v);

std::string point_status_name(PointStatus s);

/// Flat key=value configuration file; '#' starts a comment. Unknown keys are
/// rejected.
std::map<std::string, std::string> parse_config_file(const std::string& path);
ExperimentConfig experiment_config_from(const std::map<std::string, std::string>& kv);

void write_dataset_csv(const std::string& path, const Dataset& ds);
Dataset read_dataset_csv(const std::string& path);

void write_true_function_csv(const std::string& path, const TrueFunction& f);

/// Header `x,lower,upper,status`.
void write_band_csv(const std::string& path, const Band& band);
Band read_band_csv(const std::string& path);

/// Header `trial,tau,tau0,covered_band,covered_norm,mean_width_orig,mean_width_ref,seconds`.
/// The seconds column is zeroed so outputs stay byte-reproducible; wall-clock
/// timing goes to the text summary instead.
void write_campaign_csv(const std::string& path, const CampaignSummary& summary);

void write_campaign_summary_text(const std::string& path, const ExperimentConfig& cfg,
                                 const CampaignSummary& summary);

/// Self-contained SVG: band polygon, optional true-function polyline,
/// optional sample scatter.
std::string render_band_svg(const Band& band, const TrueFunction* truth, const Dataset* data);
std::string render_compare_svg(const Band& original, const Band& refined,
                               const TrueFunction* truth, const Dataset* data);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace kband
