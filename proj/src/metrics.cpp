#include "uqbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "uqbench/errors.hpp"
#include "uqbench/normal.hpp"

namespace uqbench {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(Errc::length_mismatch,
                "inputs have lengths " + std::to_string(a) + " and " + std::to_string(b));
  }
}

void require_positive_sigmas(std::span<const double> sigmas) {
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i])) {
      throw Error(Errc::zero_sigma, "sigma at position " + std::to_string(i) +
                                        " is not a positive finite number");
    }
  }
}

}  // namespace

std::vector<double> zscores(std::span<const double> errors, std::span<const double> sigmas) {
  require_same_length(errors.size(), sigmas.size());
  require_positive_sigmas(sigmas);
  std::vector<double> z(errors.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = errors[i] / sigmas[i];
  return z;
}

double var_z(std::span<const double> z) {
  if (z.size() < 2) throw Error(Errc::too_few_samples, "Var(Z) needs at least 2 values");
  return variance_statistic().compute(z);
}

VarZTest ci_var_z_test(std::span<const double> errors, std::span<const double> sigmas,
                       const BootstrapConfig& cfg) {
  const auto z = zscores(errors, sigmas);
  VarZTest out;
  out.interval = bca_ci(z, variance_statistic(), cfg);
  out.calibrated = out.interval.contains(1.0);
  return out;
}

double nll(std::span<const double> errors, std::span<const double> sigmas) {
  require_same_length(errors.size(), sigmas.size());
  require_positive_sigmas(sigmas);
  if (errors.empty()) throw Error(Errc::too_few_samples, "NLL of an empty sample");
  const double two_pi = 2.0 * std::numbers::pi;
  double total = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double var = sigmas[i] * sigmas[i];
    total += 0.5 * std::log(two_pi * var) + errors[i] * errors[i] / (2.0 * var);
  }
  return total / static_cast<double>(errors.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean(i+1..j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  if (a.size() < 2) throw Error(Errc::too_few_samples, "correlation needs at least 2 pairs");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return kUndefined;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  if (a.size() < 2) throw Error(Errc::too_few_samples, "correlation needs at least 2 pairs");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

double auroc(std::span<const double> abs_errors, std::span<const double> sigmas,
             double threshold) {
  require_same_length(abs_errors.size(), sigmas.size());
  const auto ranks = average_ranks(sigmas);
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < abs_errors.size(); ++i) {
    if (std::fabs(abs_errors[i]) > threshold) {
      rank_sum += ranks[i];
      ++positives;
    }
  }
  const std::size_t negatives = abs_errors.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(Errc::single_class, "AUROC needs both |error| > " + std::to_string(threshold) +
                                        " and |error| <= threshold instances");
  }
  const double p = static_cast<double>(positives);
  const double concordant = rank_sum - p * (p + 1.0) / 2.0;
  return concordant / (p * static_cast<double>(negatives));
}

double miscalibration_area(std::span<const double> errors, std::span<const double> sigmas,
                           std::size_t grid_n) {
  require_same_length(errors.size(), sigmas.size());
  if (errors.size() < 2) throw Error(Errc::too_few_samples, "miscalibration area needs 2 points");
  if (grid_n < 1) throw Error(Errc::invalid_argument, "grid_n must be positive");
  require_positive_sigmas(sigmas);

  std::vector<double> ratio(errors.size());
  for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] = std::fabs(errors[i]) / sigmas[i];
  std::sort(ratio.begin(), ratio.end());

  const double n = static_cast<double>(ratio.size());
  std::vector<double> gap(grid_n + 1);
  for (std::size_t k = 0; k <= grid_n; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(grid_n);
    const double bound = normal_quantile((1.0 + p) / 2.0);
    const auto inside = std::upper_bound(ratio.begin(), ratio.end(), bound) - ratio.begin();
    gap[k] = std::fabs(static_cast<double>(inside) / n - p);
  }
  double area = 0.0;
  for (std::size_t k = 0; k < grid_n; ++k) area += 0.5 * (gap[k] + gap[k + 1]);
  return area / static_cast<double>(grid_n);
}

ErrorDistributionSummary error_distribution_summary(std::span<const double> errors,
                                                    std::size_t n_bins, double range) {
  if (errors.size() < 4) {
    throw Error(Errc::too_few_samples, "distribution summary needs at least 4 errors");
  }
  if (n_bins == 0) throw Error(Errc::invalid_argument, "histogram needs at least one bin");
  const double n = static_cast<double>(errors.size());
  const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  double max_abs = 0.0;
  for (double e : errors) {
    const double d = e - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    max_abs = std::max(max_abs, std::fabs(e));
  }
  if (m2 == 0.0) throw Error(Errc::constant_input, "all errors are equal");

  ErrorDistributionSummary out;
  out.mean = mean;
  out.stdev = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  out.skewness = m3 / std::pow(m2, 1.5);
  out.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  const double half = range > 0.0 ? range : max_abs;
  out.histogram.lo = -half;
  out.histogram.hi = half;
  out.histogram.counts.assign(n_bins, 0);
  const double width = 2.0 * half / static_cast<double>(n_bins);
  for (double e : errors) {
    if (e < -half || e > half) continue;
    auto bin = static_cast<std::size_t>((e + half) / width);
    out.histogram.counts[std::min(bin, n_bins - 1)] += 1;
  }
  return out;
}

}  // namespace uqbench
