#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace uqbench {

/// Worker count for data-parallel loops: hardware concurrency, capped by the
/// UQBENCH_THREADS environment variable when it holds a positive integer.
unsigned thread_count();

/// Runs body(begin, end) over disjoint chunks covering [0, n). Chunks are
/// handed out statically so each index is processed exactly once; callers
/// write results into per-index slots, which keeps output independent of
/// the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// SplitMix64 generator (a UniformRandomBitGenerator). Much cheaper per
/// output than std::mt19937_64 and statistically strong enough for
/// resampling; used where the draw count dominates run time.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  constexpr result_type operator()() noexcept {
    const std::uint64_t out = mix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }

 private:
  std::uint64_t state_;
};

/// Seed for the independent substream `stream` of a master seed.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace uqbench
