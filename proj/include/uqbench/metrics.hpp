#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uqbench/bootstrap.hpp"
#include "uqbench/model.hpp"

namespace uqbench {

/// z_i = error_i / sigma_i. Throws zero_sigma on any sigma <= 0.
std::vector<double> zscores(std::span<const double> errors, std::span<const double> sigmas);

/// Sample variance with mean subtraction and divisor n-1.
double var_z(std::span<const double> z);

struct VarZTest {
  IntervalCI interval;
  bool calibrated = false;
};

/// BCa interval of Var(Z); calibrated iff the interval contains 1.
VarZTest ci_var_z_test(std::span<const double> errors, std::span<const double> sigmas,
                       const BootstrapConfig& cfg);

/// Mean Gaussian negative log likelihood of the errors under N(0, sigma^2).
double nll(std::span<const double> errors, std::span<const double> sigmas);

/// 1-based ranks with ties sharing the average of the positions they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; NaN when either input has zero spread.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation (Pearson on average ranks). Returns NaN when
/// either input is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// Probability that a randomly chosen positive (|error| > threshold) has a
/// larger sigma than a randomly chosen negative, ties counted one half.
/// Evaluated in rank-sum form. Throws single_class if either class is empty.
double auroc(std::span<const double> abs_errors, std::span<const double> sigmas,
             double threshold);

/// Area between observed and expected coverage of central Gaussian intervals
/// |e| <= sigma * Phi^-1((1 + p) / 2), integrated by the trapezoid rule over
/// p = k / grid_n for k = 0..grid_n.
double miscalibration_area(std::span<const double> errors, std::span<const double> sigmas,
                           std::size_t grid_n = 100);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

struct ErrorDistributionSummary {
  double mean = 0.0;
  double stdev = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  Histogram histogram;
};

/// Moment-based shape summary (population skewness g1 and excess kurtosis
/// g2) plus a histogram on [-range, range]. range <= 0 selects max |error|.
ErrorDistributionSummary error_distribution_summary(std::span<const double> errors,
                                                    std::size_t n_bins = 100,
                                                    double range = 0.0);

}  // namespace uqbench
