#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uqbench/calibration.hpp"
#include "uqbench/model.hpp"

namespace uqbench::report {

using ordered_json = nlohmann::ordered_json;

/// JSON number, or null when the value is not finite.
ordered_json number_or_null(double v);
double number_or_nan(const nlohmann::json& j);

ordered_json to_json(const CalibrationFit& fit);
CalibrationFit fit_from_json(const nlohmann::json& j);

ordered_json to_json(std::span<const CalibrationBin> bins);
std::vector<CalibrationBin> bins_from_json(const nlohmann::json& j);

ordered_json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

/// Everything `uqbench report` needs, parsed back from a report file.
struct ReportBundle {
  MetricsReport metrics;
  std::vector<CalibrationBin> bins;
  nlohmann::json metadata;
};

ReportBundle bundle_from_json(const nlohmann::json& j);

/// Self-contained SVG calibration plot: one circle per bin at (RMV, RMSE)
/// with a vertical bar spanning the RMSE interval, the parity line and, when
/// defined, the fitted line RMSE = slope * RMV + intercept.
std::string calibration_svg(std::span<const CalibrationBin> bins, double slope, double intercept);

/// Header rmv,rmse,ci_lo,ci_hi,count then one row per bin.
std::string bins_csv(std::span<const CalibrationBin> bins);

}  // namespace uqbench::report
