#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "uqbench/model.hpp"

namespace uqbench {

struct BootstrapConfig {
  std::uint32_t n_resamples = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;

  /// Throws invalid_config unless n_resamples >= 100 and 0 < level < 1.
  void validate() const;
};

/// Power sums of a resample taken about a fixed centre c:
/// s1 = sum(x - c), s2 = sum((x - c)^2) over n values.
struct PowerSums {
  double n = 0.0;
  double center = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
};

/// A scalar statistic over a sample. `leave_one_out`, when set, returns the
/// n jackknife values directly; otherwise they are computed by re-evaluating
/// `compute` on every leave-one-out subsample (quadratic). `from_sums`, when
/// set, evaluates the statistic from the first two power sums, which lets
/// resampling skip materialising each resample.
struct Statistic {
  std::string name;
  std::function<double(std::span<const double>)> compute;
  std::function<std::vector<double>(std::span<const double>)> leave_one_out;
  std::function<double(const PowerSums&)> from_sums;
};

Statistic mean_statistic();
/// Sample variance, divisor n-1.
Statistic variance_statistic();
/// Root mean square, sqrt(mean x^2).
Statistic rms_statistic();

/// Jackknife values of `stat` on `samples`, using the closed form when the
/// statistic provides one.
std::vector<double> jackknife_values(std::span<const double> samples, const Statistic& stat);

/// Bootstrap replicates in resample order. Resample b draws its indices from
/// a SplitMix64 generator seeded with substream_seed(cfg.seed, b), two 32-bit
/// indices per 64-bit output, so the result does not depend on how resamples are
/// scheduled across threads.
std::vector<double> bootstrap_replicates(std::span<const double> samples, const Statistic& stat,
                                         const BootstrapConfig& cfg);

/// Bias-corrected and accelerated bootstrap interval.
///
/// z0 comes from the fraction of replicates strictly below the point
/// estimate (clamped to [1/(2B), 1 - 1/(2B)] so it stays finite), the
/// acceleration from the jackknife skewness
///   a = sum(m - t_i)^3 / (6 * (sum(m - t_i)^2)^1.5),
/// and the endpoints are the replicate percentiles at
///   Phi(z0 + (z0 + z_alpha) / (1 - a * (z0 + z_alpha)))
/// with linear interpolation between order statistics. A distribution with
/// a single distinct value yields a zero-width interval at the point
/// estimate with `degenerate` set. Requires at least 10 samples.
IntervalCI bca_ci(std::span<const double> samples, const Statistic& stat,
                  const BootstrapConfig& cfg);

/// Plain percentile bootstrap over the same replicates bca_ci would draw.
IntervalCI percentile_ci(std::span<const double> samples, const Statistic& stat,
                         const BootstrapConfig& cfg);

/// Linear-interpolated quantile of an ascending range, position q * (n - 1).
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace uqbench
