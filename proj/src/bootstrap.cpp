#include "uqbench/bootstrap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "uqbench/errors.hpp"
#include "uqbench/normal.hpp"
#include "uqbench/parallel.hpp"

namespace uqbench {

void BootstrapConfig::validate() const {
  if (n_resamples < 100) {
    throw Error(Errc::invalid_config, "n_resamples must be at least 100, got " +
                                          std::to_string(n_resamples));
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(Errc::invalid_config, "confidence level must lie in (0, 1)");
  }
}

namespace {

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

Statistic mean_statistic() {
  Statistic s;
  s.name = "mean";
  s.compute = [](std::span<const double> x) { return mean_of(x); };
  s.leave_one_out = [](std::span<const double> x) {
    double total = 0.0;
    for (double v : x) total += v;
    const double n1 = static_cast<double>(x.size() - 1);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (total - x[i]) / n1;
    return out;
  };
  s.from_sums = [](const PowerSums& p) { return p.center + p.s1 / p.n; };
  return s;
}

Statistic variance_statistic() {
  Statistic s;
  s.name = "variance";
  s.compute = [](std::span<const double> x) {
    // shifting by the first value keeps constant samples exactly at zero
    const double shift = x.front();
    double m = 0.0;
    for (double v : x) m += v - shift;
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - shift - m) * (v - shift - m);
    return ss / static_cast<double>(x.size() - 1);
  };
  // Removing x_i from centred data d (sum d = 0, sum d^2 = D) leaves a sum of
  // squares about the new mean of D - d_i^2 * n / (n - 1).
  s.leave_one_out = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double m = mean_of(x);
    double total = 0.0;
    for (double v : x) total += (v - m) * (v - m);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - m;
      out[i] = (total - d * d * n / (n - 1.0)) / (n - 2.0);
    }
    return out;
  };
  s.from_sums = [](const PowerSums& p) {
    return std::max(0.0, p.s2 - p.s1 * p.s1 / p.n) / (p.n - 1.0);
  };
  return s;
}

Statistic rms_statistic() {
  Statistic s;
  s.name = "rms";
  s.compute = [](std::span<const double> x) {
    double ss = 0.0;
    for (double v : x) ss += v * v;
    return std::sqrt(ss / static_cast<double>(x.size()));
  };
  s.leave_one_out = [](std::span<const double> x) {
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double n1 = static_cast<double>(x.size() - 1);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = std::sqrt(std::max(0.0, ss - x[i] * x[i]) / n1);
    }
    return out;
  };
  // sum x^2 = s2 + 2 c s1 + n c^2
  s.from_sums = [](const PowerSums& p) {
    const double ss = p.s2 + p.center * (2.0 * p.s1 + p.n * p.center);
    return std::sqrt(std::max(0.0, ss) / p.n);
  };
  return s;
}

std::vector<double> jackknife_values(std::span<const double> samples, const Statistic& stat) {
  if (stat.leave_one_out) return stat.leave_one_out(samples);
  std::vector<double> out(samples.size());
  std::vector<double> buf(samples.size() - 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::copy(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(i), buf.begin());
    std::copy(samples.begin() + static_cast<std::ptrdiff_t>(i) + 1, samples.end(),
              buf.begin() + static_cast<std::ptrdiff_t>(i));
    out[i] = stat.compute(buf);
  }
  return out;
}

namespace {

// Resample indices in [0, n) for n < 2^32: engine outputs are drawn in
// blocks, each 64-bit output yields two 32-bit halves (high first), and each
// half maps to an index by multiply-and-reject (unbiased). A rejected half,
// which happens with probability below n / 2^32, is replaced by the next
// half. This keeps index generation a small fraction of resampling cost,
// unlike std::uniform_int_distribution.
class IndexSource {
 public:
  IndexSource(std::uint64_t seed, std::uint32_t n) : gen_(seed), n_(n), threshold_((0u - n) % n) {}

  /// Calls fn(index) exactly `count` times.
  template <typename Fn>
  void generate(std::size_t count, Fn&& fn) {
    std::array<std::uint64_t, kBlock> raw;
    while (count > 0) {
      const std::size_t words = std::min(kBlock, (count + 1) / 2);
      for (std::size_t k = 0; k < words; ++k) raw[k] = gen_();
      std::size_t emitted = 0;
      for (std::size_t k = 0; k < words && emitted < count; ++k) {
        for (int half = 0; half < 2 && emitted < count; ++half) {
          const auto bits = static_cast<std::uint32_t>(half == 0 ? raw[k] >> 32 : raw[k]);
          const std::uint64_t m = std::uint64_t{bits} * n_;
          if (static_cast<std::uint32_t>(m) < threshold_) continue;
          fn(static_cast<std::uint32_t>(m >> 32));
          ++emitted;
        }
      }
      count -= emitted;
    }
  }

 private:
  static constexpr std::size_t kBlock = 256;
  SplitMix64 gen_;
  std::uint32_t n_;
  std::uint32_t threshold_;
};

}  // namespace

std::vector<double> bootstrap_replicates(std::span<const double> samples, const Statistic& stat,
                                         const BootstrapConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw Error(Errc::too_few_samples, "cannot bootstrap an empty sample");
  const std::size_t n = samples.size();
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::invalid_argument, "bootstrap sample exceeds 2^32 values");
  }
  const auto n32 = static_cast<std::uint32_t>(n);
  std::vector<double> reps(cfg.n_resamples);
  if (stat.from_sums) {
    // centre at the sample mean so the second power sum stays well conditioned
    const double center = mean_of(samples);
    std::vector<double> shifted(n);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = samples[i] - center;
    parallel_for(cfg.n_resamples, [&](std::size_t begin, std::size_t end) {
      for (std::size_t b = begin; b < end; ++b) {
        IndexSource pick(substream_seed(cfg.seed, b), n32);
        double s1 = 0.0;
        double s2 = 0.0;
        pick.generate(n, [&](std::uint32_t idx) {
          const double d = shifted[idx];
          s1 += d;
          s2 += d * d;
        });
        reps[b] = stat.from_sums({static_cast<double>(n), center, s1, s2});
      }
    });
    return reps;
  }
  parallel_for(cfg.n_resamples, [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf(n);
    for (std::size_t b = begin; b < end; ++b) {
      IndexSource pick(substream_seed(cfg.seed, b), n32);
      std::size_t i = 0;
      pick.generate(n, [&](std::uint32_t idx) { buf[i++] = samples[idx]; });
      reps[b] = stat.compute(buf);
    }
  });
  return reps;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return kUndefined;
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IntervalCI bca_ci(std::span<const double> samples, const Statistic& stat,
                  const BootstrapConfig& cfg) {
  cfg.validate();
  if (samples.size() < 10) {
    throw Error(Errc::too_few_samples, "BCa interval needs at least 10 samples, got " +
                                           std::to_string(samples.size()));
  }
  const double estimate = stat.compute(samples);
  std::vector<double> reps = bootstrap_replicates(samples, stat, cfg);
  std::sort(reps.begin(), reps.end());

  IntervalCI ci;
  ci.level = cfg.level;
  if (reps.front() == reps.back()) {
    ci.lo = ci.hi = estimate;
    ci.degenerate = true;
    return ci;
  }

  const double b = static_cast<double>(reps.size());
  const auto below = std::lower_bound(reps.begin(), reps.end(), estimate) - reps.begin();
  const double frac = std::clamp(static_cast<double>(below) / b, 0.5 / b, 1.0 - 0.5 / b);
  const double z0 = normal_quantile(frac);

  const std::vector<double> jack = jackknife_values(samples, stat);
  const double jack_mean = mean_of(jack);
  double num = 0.0;
  double den = 0.0;
  for (double t : jack) {
    const double d = jack_mean - t;
    num += d * d * d;
    den += d * d;
  }
  const double accel = den > 0.0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;

  const double alpha = (1.0 - cfg.level) / 2.0;
  const auto adjusted = [&](double tail) {
    const double z = z0 + normal_quantile(tail);
    return normal_cdf(z0 + z / (1.0 - accel * z));
  };
  ci.lo = sorted_quantile(reps, adjusted(alpha));
  ci.hi = sorted_quantile(reps, adjusted(1.0 - alpha));
  return ci;
}

IntervalCI percentile_ci(std::span<const double> samples, const Statistic& stat,
                         const BootstrapConfig& cfg) {
  std::vector<double> reps = bootstrap_replicates(samples, stat, cfg);
  std::sort(reps.begin(), reps.end());
  const double alpha = (1.0 - cfg.level) / 2.0;
  IntervalCI ci;
  ci.level = cfg.level;
  ci.lo = sorted_quantile(reps, alpha);
  ci.hi = sorted_quantile(reps, 1.0 - alpha);
  ci.degenerate = reps.front() == reps.back();
  return ci;
}

}  // namespace uqbench
