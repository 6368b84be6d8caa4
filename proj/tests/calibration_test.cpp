#include "uqbench/calibration.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "uqbench/errors.hpp"
#include "uqbench/metrics.hpp"
#include "uqbench/synth.hpp"

namespace uqbench {
namespace {

const BootstrapConfig kBoot{500, 0.95, 3};

std::vector<CalibrationBin> make_bins(std::vector<double> rmv, std::vector<double> rmse) {
  std::vector<CalibrationBin> bins;
  for (std::size_t i = 0; i < rmv.size(); ++i) bins.push_back({rmv[i], rmse[i], 10, rmse[i], rmse[i]});
  return bins;
}

TEST(BinByUncertainty, EqualSplit) {
  std::vector<double> err(40), sig(40);
  for (std::size_t i = 0; i < 40; ++i) {
    err[i] = std::sin(1.0 + i);
    sig[i] = 0.1 + 0.01 * ((i * 17) % 40);
  }
  const auto bins = bin_by_uncertainty(err, sig, 20, kBoot);
  ASSERT_EQ(bins.size(), 20u);
  for (const auto& b : bins) EXPECT_EQ(b.count, 2u);
  for (std::size_t i = 1; i < bins.size(); ++i) EXPECT_LE(bins[i - 1].rmv, bins[i].rmv);
}

TEST(BinByUncertainty, RmvAndRmseOfPair) {
  // the pair {sigma 3, 4} with errors {3, -4} sorts into a single bin
  std::vector<double> err{0.1, 0.2, 3.0, -4.0};
  std::vector<double> sig{0.5, 0.6, 3.0, 4.0};
  const auto bins = bin_by_uncertainty(err, sig, 2, kBoot);
  ASSERT_EQ(bins.size(), 2u);
  EXPECT_NEAR(bins[1].rmv, 3.5355339059327378, 1e-12);
  EXPECT_NEAR(bins[1].rmse, 3.5355339059327378, 1e-12);
  EXPECT_LE(bins[1].rmse_ci_lo, bins[1].rmse);
  EXPECT_GE(bins[1].rmse_ci_hi, bins[1].rmse);
}

TEST(BinByUncertainty, PropertyPartitionsEveryPoint) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t bins_n = std::uniform_int_distribution<std::size_t>(1, 12)(gen);
    const std::size_t n = 2 * bins_n + std::uniform_int_distribution<std::size_t>(0, 60)(gen);
    std::vector<double> err(n), sig(n);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::normal_distribution<double> n01;
    for (std::size_t i = 0; i < n; ++i) {
      sig[i] = u(gen);
      err[i] = sig[i] * n01(gen);
    }
    const auto bins = bin_by_uncertainty(err, sig, bins_n, {100, 0.95, 1});
    std::size_t total = 0;
    double sum_e2 = 0, sum_s2 = 0;
    for (const auto& b : bins) {
      total += b.count;
      EXPECT_LE(b.count - n / bins_n, 1u);
      sum_e2 += b.rmse * b.rmse * b.count;
      sum_s2 += b.rmv * b.rmv * b.count;
    }
    EXPECT_EQ(total, n);
    double e2 = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      e2 += err[i] * err[i];
      s2 += sig[i] * sig[i];
    }
    EXPECT_NEAR(sum_e2, e2, 1e-9 * (1 + e2));
    EXPECT_NEAR(sum_s2, s2, 1e-9 * (1 + s2));
  }
}

TEST(BinByUncertainty, Errors) {
  std::vector<double> err(39, 0.1), sig(39, 1.0);
  try {
    bin_by_uncertainty(err, sig, 20, kBoot);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_samples);
  }
  err.push_back(0.1);
  sig.push_back(-1.0);
  try {
    bin_by_uncertainty(err, sig, 20, kBoot);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::negative_sigma);
  }
}

TEST(FitCalibration, ExactParity) {
  const auto fit = fit_calibration(make_bins({1, 2, 3, 4}, {1, 2, 3, 4}));
  EXPECT_NEAR(fit.slope, 1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_NEAR(fit.fit_r2, 1.0, 1e-12);
  EXPECT_NEAR(fit.parity_r2, 1.0, 1e-12);
}

TEST(FitCalibration, DoubledRmse) {
  const auto fit = fit_calibration(make_bins({1, 2, 3}, {2, 4, 6}));
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_NEAR(fit.fit_r2, 1.0, 1e-12);
  EXPECT_NEAR(fit.parity_r2, -0.75, 1e-12);
  EXPECT_EQ(fit.n_bins, 3u);
}

TEST(FitCalibration, PropertyRecoversExactLine) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double slope = u(gen);
    const double intercept = u(gen);
    std::vector<double> rmv, rmse;
    for (int b = 0; b < 20; ++b) {
      rmv.push_back(0.05 + 0.1 * b);
      rmse.push_back(slope * rmv.back() + intercept);
    }
    const auto fit = fit_calibration(make_bins(rmv, rmse));
    EXPECT_NEAR(fit.slope, slope, 1e-12);
    EXPECT_NEAR(fit.intercept, intercept, 1e-12);
  }
}

TEST(FitCalibration, Errors) {
  try {
    fit_calibration(make_bins({1, 2}, {1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_samples);
  }
  try {
    fit_calibration(make_bins({1, 1, 1}, {1, 2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_fit);
  }
}

std::vector<UncertaintyEstimate> estimates_of(std::vector<double> sigmas) {
  std::vector<UncertaintyEstimate> out;
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    out.push_back({"s" + std::to_string(i), sigmas[i], UqMethod::distance, false});
  return out;
}

TEST(Recalibrate, Examples) {
  const auto ident = recalibrate(estimates_of({0.1, 1.0, 7.5}), CalibrationFit{1.0, 0.0});
  EXPECT_EQ(ident.estimates[0].sigma, 0.1);
  EXPECT_EQ(ident.estimates[2].sigma, 7.5);
  EXPECT_TRUE(ident.estimates[0].calibrated);
  EXPECT_TRUE(ident.floored.empty());

  const auto table = recalibrate(estimates_of({1.0}), CalibrationFit{1.022, 0.026});
  EXPECT_NEAR(table.estimates[0].sigma, 1.048, 1e-12);

  const auto floored = recalibrate(estimates_of({0.1}), CalibrationFit{1.0, -0.5});
  EXPECT_EQ(floored.estimates[0].sigma, kSigmaFloor);
  EXPECT_EQ(floored.floored, std::vector<std::string>{"s0"});
}

TEST(Recalibrate, RejectsAlreadyCalibrated) {
  auto est = estimates_of({1.0});
  est[0].calibrated = true;
  EXPECT_THROW(recalibrate(est, CalibrationFit{}), Error);
}

TEST(CalibrationCurve, Passthrough) {
  const std::vector<CalibrationBin> bins{{1.0, 1.0, 10, 0.9, 1.1}};
  const auto curve = calibration_curve(bins);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve[0].rmv, 1.0);
  EXPECT_EQ(curve[0].rmse, 1.0);
  EXPECT_EQ(curve[0].ci_lo, 0.9);
  EXPECT_EQ(curve[0].ci_hi, 1.1);
}

synth::SynthData synthetic(std::size_t n, std::uint64_t seed, double factor) {
  synth::SynthConfig cfg;
  cfg.n_systems = n;
  cfg.n_train_systems = 1;
  cfg.seed = seed;
  if (factor != 1.0) cfg.distortion = {synth::Distortion::Kind::scale, factor};
  return synth::generate(cfg);
}

TEST(CalibrationCurve, CalibratedBinsIntersectParity) {
  const auto data = synthetic(10000, 41, 1.0);
  const auto bins = bin_by_uncertainty(errors_of(data.records), data.true_sigmas, 20, {1000, 0.95, 2});
  int crossing = 0;
  for (const auto& p : calibration_curve(bins)) crossing += p.ci_lo <= p.rmv && p.rmv <= p.ci_hi;
  // 20 independent 95% intervals: expected 19, allow one more miss
  EXPECT_GE(crossing, 18);
}

TEST(CalibrationCurve, OverconfidentBinsSitAboveParity) {
  const auto data = synthetic(10000, 42, 0.5);
  std::vector<double> sig;
  for (const auto& e : data.reported) sig.push_back(e.sigma);
  const auto bins = bin_by_uncertainty(errors_of(data.records), sig, 20, {1000, 0.95, 2});
  int above = 0;
  for (const auto& p : calibration_curve(bins)) above += p.ci_lo > p.rmv;
  EXPECT_GE(above, 15);
}

std::vector<UncertaintyEstimate> with_sigmas(const synth::SynthData& data, double factor,
                                             bool calibrated) {
  std::vector<UncertaintyEstimate> out;
  for (std::size_t i = 0; i < data.records.size(); ++i)
    out.push_back({data.records[i].system_id, factor * data.true_sigmas[i], UqMethod::external,
                   calibrated});
  return out;
}

TEST(Evaluate, CalibratedSynthetic) {
  const auto data = synthetic(10000, 43, 1.0);
  const auto ev = evaluate(data.records, with_sigmas(data, 1.0, true), 0.1, {2000, 0.95, 5});
  EXPECT_GT(ev.report.parity_r2, 0.95);
  EXPECT_TRUE(ev.report.calibrated_flag);
  EXPECT_EQ(ev.report.n, 10000u);
  EXPECT_EQ(ev.bins.size(), 20u);
  EXPECT_LT(ev.report.miscal_area, 0.02);
}

TEST(Evaluate, UnderconfidentSynthetic) {
  const auto data = synthetic(10000, 44, 1.0);
  const auto ev = evaluate(data.records, with_sigmas(data, 3.0, true), 0.1, {2000, 0.95, 5});
  EXPECT_FALSE(ev.report.calibrated_flag);
  EXPECT_LT(ev.report.ci_var_z.hi, 0.5);
  EXPECT_NEAR(ev.report.var_z, 1.0 / 9.0, 0.01);
}

TEST(Evaluate, RefusesUncalibratedUnlessAllowed) {
  const auto data = synthetic(200, 45, 1.0);
  try {
    evaluate(data.records, with_sigmas(data, 1.0, false), 0.1, {200, 0.95, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::uncalibrated_input);
  }
  EvaluateOptions opts;
  opts.allow_uncalibrated = true;
  EXPECT_NO_THROW(evaluate(data.records, with_sigmas(data, 1.0, false), 0.1, {200, 0.95, 5}, opts));
}

TEST(Evaluate, SingleClassAurocBecomesUndefined) {
  const auto data = synthetic(200, 46, 1.0);
  const auto ev = evaluate(data.records, with_sigmas(data, 1.0, true), 1e9, {200, 0.95, 5});
  EXPECT_TRUE(std::isnan(ev.report.auroc));
  EXPECT_FALSE(ev.report.warnings.empty());
}

TEST(Evaluate, Deterministic) {
  const auto data = synthetic(1000, 47, 1.0);
  const auto est = with_sigmas(data, 1.3, true);
  const auto a = evaluate(data.records, est, 0.1, {500, 0.95, 9});
  const auto b = evaluate(data.records, est, 0.1, {500, 0.95, 9});
  EXPECT_EQ(a.report.ci_var_z.lo, b.report.ci_var_z.lo);
  EXPECT_EQ(a.report.ci_var_z.hi, b.report.ci_var_z.hi);
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    EXPECT_EQ(a.bins[i].rmse_ci_lo, b.bins[i].rmse_ci_lo);
    EXPECT_EQ(a.bins[i].rmse_ci_hi, b.bins[i].rmse_ci_hi);
  }
}

}  // namespace
}  // namespace uqbench
