#include "uqbench/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uqbench/errors.hpp"
#include "uqbench/metrics.hpp"
#include "uqbench/parallel.hpp"

namespace uqbench {

std::vector<CalibrationBin> bin_by_uncertainty(std::span<const double> errors,
                                               std::span<const double> sigmas,
                                               std::size_t n_bins, const BootstrapConfig& boot) {
  if (errors.size() != sigmas.size()) {
    throw Error(Errc::length_mismatch, "errors and sigmas differ in length");
  }
  if (n_bins == 0) throw Error(Errc::invalid_argument, "n_bins must be positive");
  if (errors.size() < 2 * n_bins) {
    throw Error(Errc::too_few_samples, std::to_string(errors.size()) + " points cannot fill " +
                                           std::to_string(n_bins) +
                                           " bins (need at least 2 per bin)");
  }
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] >= 0.0) || !std::isfinite(sigmas[i])) {
      throw Error(Errc::negative_sigma, "sigma at position " + std::to_string(i) +
                                            " is negative or not finite");
    }
  }
  boot.validate();

  std::vector<std::size_t> order(errors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigmas[a] < sigmas[b]; });

  const std::size_t base = errors.size() / n_bins;
  const std::size_t extra = errors.size() % n_bins;
  std::vector<CalibrationBin> bins;
  bins.reserve(n_bins);
  std::size_t start = 0;
  std::vector<double> bin_errors;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t count = base + (b < extra ? 1 : 0);
    bin_errors.clear();
    double sum_var = 0.0;
    for (std::size_t k = start; k < start + count; ++k) {
      bin_errors.push_back(errors[order[k]]);
      sum_var += sigmas[order[k]] * sigmas[order[k]];
    }
    start += count;

    CalibrationBin bin;
    bin.count = count;
    bin.rmv = std::sqrt(sum_var / static_cast<double>(count));
    const Statistic rms = rms_statistic();
    bin.rmse = rms.compute(bin_errors);

    BootstrapConfig bin_boot = boot;
    bin_boot.seed = substream_seed(boot.seed, b);
    const IntervalCI ci = count >= 10 ? bca_ci(bin_errors, rms, bin_boot)
                                      : percentile_ci(bin_errors, rms, bin_boot);
    bin.rmse_ci_lo = std::min(ci.lo, bin.rmse);
    bin.rmse_ci_hi = std::max(ci.hi, bin.rmse);
    bins.push_back(bin);
  }
  return bins;
}

CalibrationFit fit_calibration(std::span<const CalibrationBin> bins) {
  if (bins.size() < 3) {
    throw Error(Errc::too_few_samples, "calibration fit needs at least 3 bins");
  }
  const double n = static_cast<double>(bins.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& b : bins) {
    mx += b.rmv;
    my += b.rmse;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& b : bins) {
    const double dx = b.rmv - mx;
    const double dy = b.rmse - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error(Errc::degenerate_fit, "RMV is identical in every bin");

  CalibrationFit fit;
  fit.n_bins = bins.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_fit = 0.0;
  double ss_parity = 0.0;
  for (const auto& b : bins) {
    const double r_fit = b.rmse - (fit.slope * b.rmv + fit.intercept);
    const double r_parity = b.rmse - b.rmv;
    ss_fit += r_fit * r_fit;
    ss_parity += r_parity * r_parity;
  }
  if (syy > 0.0) {
    fit.fit_r2 = 1.0 - ss_fit / syy;
    fit.parity_r2 = 1.0 - ss_parity / syy;
  } else {
    fit.fit_r2 = kUndefined;
    fit.parity_r2 = kUndefined;
  }
  return fit;
}

Recalibration recalibrate(std::span<const UncertaintyEstimate> estimates,
                          const CalibrationFit& fit) {
  Recalibration out;
  out.estimates.reserve(estimates.size());
  for (const auto& e : estimates) {
    if (e.calibrated) {
      throw Error(Errc::invalid_argument,
                  "estimate for '" + e.system_id + "' is already calibrated");
    }
    UncertaintyEstimate r = e;
    r.sigma = fit.slope * e.sigma + fit.intercept;
    if (!(r.sigma > 0.0)) {
      r.sigma = kSigmaFloor;
      out.floored.push_back(e.system_id);
    }
    r.calibrated = true;
    out.estimates.push_back(std::move(r));
  }
  return out;
}

std::vector<CurvePoint> calibration_curve(std::span<const CalibrationBin> bins) {
  std::vector<CurvePoint> out;
  out.reserve(bins.size());
  for (const auto& b : bins) out.push_back({b.rmv, b.rmse, b.rmse_ci_lo, b.rmse_ci_hi});
  return out;
}

Evaluation evaluate(std::span<const EnergyRecord> records,
                    std::span<const UncertaintyEstimate> estimates, double auroc_threshold,
                    const BootstrapConfig& boot, const EvaluateOptions& options) {
  boot.validate();
  const JoinedSample joined = join(records, estimates);
  if (!options.allow_uncalibrated) {
    for (const auto* e : joined.estimates) {
      if (!e->calibrated) {
        throw Error(Errc::uncalibrated_input,
                    "estimate for '" + e->system_id +
                        "' is uncalibrated; recalibrate first or allow uncalibrated input");
      }
    }
  }
  const auto& err = joined.errors;
  const auto& sig = joined.sigmas;

  Evaluation out;
  MetricsReport& rep = out.report;
  rep.n = err.size();

  const auto z = zscores(err, sig);
  rep.var_z = var_z(z);

  BootstrapConfig varz_boot = boot;
  varz_boot.seed = substream_seed(boot.seed, 0);
  const VarZTest test = ci_var_z_test(err, sig, varz_boot);
  rep.ci_var_z = test.interval;
  rep.calibrated_flag = test.calibrated;
  if (test.interval.degenerate) rep.warnings.push_back("Var(Z) bootstrap distribution is degenerate");

  rep.nll = nll(err, sig);

  std::vector<double> abs_err(err.size());
  std::transform(err.begin(), err.end(), abs_err.begin(), [](double e) { return std::fabs(e); });
  rep.spearman_rho = spearman(abs_err, sig);
  if (std::isnan(rep.spearman_rho)) {
    rep.warnings.push_back("Spearman correlation undefined: constant |error| or sigma");
  }
  try {
    rep.auroc = auroc(abs_err, sig, auroc_threshold);
  } catch (const Error& e) {
    if (e.code() != Errc::single_class) throw;
    rep.warnings.push_back(std::string("AUROC undefined: ") + e.what());
  }
  rep.miscal_area = miscalibration_area(err, sig, options.miscal_grid);

  BootstrapConfig bin_boot = boot;
  bin_boot.seed = substream_seed(boot.seed, 1);
  out.bins = bin_by_uncertainty(err, sig, options.n_bins, bin_boot);
  try {
    const CalibrationFit fit = fit_calibration(out.bins);
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
    rep.fit_r2 = fit.fit_r2;
    rep.parity_r2 = fit.parity_r2;
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate_fit) throw;
    rep.warnings.push_back(std::string("calibration fit undefined: ") + e.what());
  }
  return out;
}

}  // namespace uqbench
