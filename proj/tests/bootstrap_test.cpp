#include "uqbench/bootstrap.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "uqbench/errors.hpp"
#include "uqbench/normal.hpp"

namespace uqbench {
namespace {

// Deterministic, mildly skewed sample shared with the scipy reference below.
std::vector<double> reference_sample() {
  std::vector<double> x;
  for (int i = 0; i < 60; ++i) {
    x.push_back(std::sin(i * 1.3) * (1 + 0.5 * std::cos(i * 0.7)) +
                0.3 * std::pow(std::sin(i * 0.37), 2));
  }
  return x;
}

std::vector<double> normal_sample(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  std::vector<double> x(n);
  for (double& v : x) v = n01(gen);
  return x;
}

TEST(Statistics, ClosedFormJackknifeMatchesBruteForce) {
  const auto x = reference_sample();
  for (const Statistic& stat : {mean_statistic(), variance_statistic(), rms_statistic()}) {
    Statistic plain{stat.name, stat.compute, nullptr};
    const auto fast = jackknife_values(x, stat);
    const auto slow = jackknife_values(x, plain);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) {
      EXPECT_NEAR(fast[i], slow[i], 1e-12) << stat.name << " i=" << i;
    }
  }
}

// Reference intervals: scipy.stats.bootstrap(method='BCa', n_resamples=20000)
// averaged over 10 seeds; Monte-Carlo spread of each endpoint is < 0.003.
TEST(BcaCi, AgreesWithScipyReference) {
  const auto x = reference_sample();
  BootstrapConfig cfg{20000, 0.95, 11};
  struct Case {
    Statistic stat;
    double lo;
    double hi;
  };
  const Case cases[] = {
      {variance_statistic(), 0.4363708763426909, 0.7635229084485256},
      {mean_statistic(), -0.018111396438721245, 0.36063271258478674},
      {rms_statistic(), 0.6666272145427398, 0.882334631263906},
  };
  for (const auto& c : cases) {
    const IntervalCI ci = bca_ci(x, c.stat, cfg);
    EXPECT_NEAR(ci.lo, c.lo, 0.012) << c.stat.name;
    EXPECT_NEAR(ci.hi, c.hi, 0.012) << c.stat.name;
    EXPECT_FALSE(ci.degenerate);
  }
}

TEST(BcaCi, ConstantSampleGivesZeroWidthFlaggedInterval) {
  std::vector<double> x(25, 3.0);
  const IntervalCI ci = bca_ci(x, mean_statistic(), {2000, 0.95, 1});
  EXPECT_EQ(ci.lo, 3.0);
  EXPECT_EQ(ci.hi, 3.0);
  EXPECT_TRUE(ci.degenerate);
}

// Symmetric data: z0 and the acceleration are near zero, so BCa and the
// percentile interval over the same replicates nearly coincide.
TEST(BcaCi, MatchesPercentileOnSymmetricSampleForMean) {
  auto x = normal_sample(5, 200);
  const std::size_t half = x.size() / 2;
  for (std::size_t i = 0; i < half; ++i) x[half + i] = -x[i];
  const BootstrapConfig cfg{4000, 0.95, 3};
  const IntervalCI bca = bca_ci(x, mean_statistic(), cfg);
  const IntervalCI pct = percentile_ci(x, mean_statistic(), cfg);
  const double width = pct.hi - pct.lo;
  EXPECT_LE(std::fabs(bca.lo - pct.lo), 0.05 * width);
  EXPECT_LE(std::fabs(bca.hi - pct.hi), 0.05 * width);
}

// Independent recomputation of the BCa endpoints from the replicate set.
TEST(BcaCi, EndpointsFollowFromReplicatesAndJackknife) {
  const auto x = normal_sample(17, 80);
  const BootstrapConfig cfg{1000, 0.9, 99};
  const Statistic var = variance_statistic();
  auto reps = bootstrap_replicates(x, var, cfg);
  std::sort(reps.begin(), reps.end());
  const double theta = var.compute(x);
  double below = 0;
  for (double r : reps) below += r < theta ? 1 : 0;
  const double z0 = normal_quantile(below / reps.size());

  std::vector<double> jack;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> rest;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k != i) rest.push_back(x[k]);
    }
    jack.push_back(var.compute(rest));
  }
  double m = 0;
  for (double v : jack) m += v;
  m /= jack.size();
  double num = 0;
  double den = 0;
  for (double v : jack) {
    num += std::pow(m - v, 3);
    den += std::pow(m - v, 2);
  }
  const double a = num / (6 * std::pow(den, 1.5));
  auto endpoint = [&](double tail) {
    const double z = z0 + normal_quantile(tail);
    const double q = normal_cdf(z0 + z / (1 - a * z));
    const double pos = q * (reps.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    return reps[lo] + (pos - lo) * (reps[lo + 1] - reps[lo]);
  };
  const IntervalCI ci = bca_ci(x, var, cfg);
  EXPECT_NEAR(ci.lo, endpoint(0.05), 1e-12);
  EXPECT_NEAR(ci.hi, endpoint(0.95), 1e-12);
}

TEST(BcaCi, DeterministicAcrossThreadCounts) {
  const auto x = normal_sample(23, 300);
  const BootstrapConfig cfg{1500, 0.95, 2024};
  setenv("UQBENCH_THREADS", "1", 1);
  const auto one = bootstrap_replicates(x, variance_statistic(), cfg);
  const IntervalCI ci_one = bca_ci(x, variance_statistic(), cfg);
  setenv("UQBENCH_THREADS", "4", 1);
  const auto four = bootstrap_replicates(x, variance_statistic(), cfg);
  const IntervalCI ci_four = bca_ci(x, variance_statistic(), cfg);
  unsetenv("UQBENCH_THREADS");
  EXPECT_EQ(one, four);
  EXPECT_EQ(ci_one.lo, ci_four.lo);
  EXPECT_EQ(ci_one.hi, ci_four.hi);
}

TEST(BcaCi, RejectsSmallSamplesAndBadConfig) {
  std::vector<double> x(9, 1.0);
  try {
    bca_ci(x, mean_statistic(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_samples);
  }
  std::vector<double> y(20, 1.0);
  EXPECT_THROW(bca_ci(y, mean_statistic(), {99, 0.95, 0}), Error);
  EXPECT_THROW(bca_ci(y, mean_statistic(), {2000, 1.0, 0}), Error);
}

TEST(BootstrapReplicates, PowerSumPathMatchesMaterialisedResamples) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> value(3.0, 2.0);
  std::vector<double> x(257);
  for (double& v : x) v = value(gen);
  for (const auto& stat : {mean_statistic(), variance_statistic(), rms_statistic()}) {
    Statistic generic = stat;
    generic.from_sums = nullptr;
    const BootstrapConfig cfg{300, 0.95, 5};
    const auto fast = bootstrap_replicates(x, stat, cfg);
    const auto slow = bootstrap_replicates(x, generic, cfg);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t b = 0; b < fast.size(); ++b)
      EXPECT_NEAR(fast[b], slow[b], 1e-12 * std::fabs(slow[b])) << stat.name << " " << b;
  }
}

TEST(SortedQuantile, LinearInterpolation) {
  const std::vector<double> v{1.0, 2.0, 4.0};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.25), 1.5);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.75), 3.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 4.0);
}

}  // namespace
}  // namespace uqbench
