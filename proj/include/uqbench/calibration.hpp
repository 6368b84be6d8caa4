#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uqbench/bootstrap.hpp"
#include "uqbench/model.hpp"

namespace uqbench {

/// Sorts points by sigma (stable, so ties keep input order) and splits them
/// into n_bins contiguous bins of equal count; the first (n mod n_bins) bins
/// take one extra point. Per bin:
///   RMV  = sqrt(mean sigma^2)
///   RMSE = sqrt(mean error^2)
/// with a bootstrap interval on RMSE at boot.level. Bins of at least 10
/// points use BCa; smaller bins fall back to the percentile interval.
std::vector<CalibrationBin> bin_by_uncertainty(std::span<const double> errors,
                                               std::span<const double> sigmas,
                                               std::size_t n_bins, const BootstrapConfig& boot);

/// Unweighted least squares of RMSE on RMV across bins. parity_r2 uses the
/// same total sum of squares as fit_r2 with residuals taken against RMSE = RMV.
CalibrationFit fit_calibration(std::span<const CalibrationBin> bins);

inline constexpr double kSigmaFloor = 1e-6;

struct Recalibration {
  std::vector<UncertaintyEstimate> estimates;
  /// system_ids whose recalibrated sigma was <= 0 and got floored.
  std::vector<std::string> floored;
};

/// sigma' = slope * sigma + intercept, floored at kSigmaFloor. Inputs must be
/// uncalibrated; outputs are flagged calibrated.
Recalibration recalibrate(std::span<const UncertaintyEstimate> estimates,
                          const CalibrationFit& fit);

struct CurvePoint {
  double rmv = 0.0;
  double rmse = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

std::vector<CurvePoint> calibration_curve(std::span<const CalibrationBin> bins);

struct EvaluateOptions {
  std::size_t n_bins = 20;
  std::size_t miscal_grid = 100;
  bool allow_uncalibrated = false;
};

struct Evaluation {
  MetricsReport report;
  std::vector<CalibrationBin> bins;
};

/// Joins records and estimates on system_id and computes the full metric
/// suite. Undefined metrics (constant ranks, one AUROC class, degenerate
/// fit) are reported as NaN with a warning instead of aborting.
Evaluation evaluate(std::span<const EnergyRecord> records,
                    std::span<const UncertaintyEstimate> estimates, double auroc_threshold,
                    const BootstrapConfig& boot, const EvaluateOptions& options = {});

}  // namespace uqbench
