#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace dprune {

// Seeded generator used for every stochastic decision in the toolkit.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The conversions below (uniform doubles, bounded integers, normals)
// are implemented here rather than with <random> distributions, whose
// algorithms differ between standard libraries. Together this makes a seed
// reproduce the same stream on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via the Box-Muller transform.
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Independent, reproducible per-trial seed.
std::uint64_t derive_trial_seed(std::uint64_t base_seed, std::uint64_t trial);

// round(x) with halves rounded up; x >= 0.
std::size_t round_half_up(double x);

// Drop-away / drop-back knobs. xi_back < xi_away is required for net shrinkage.
struct DropConfig {
  double xi_away = 0.9;
  double xi_back = 0.08;
  std::uint64_t base_seed = 0;

  // Throws ConfigError unless both lie in [0,1] and xi_back < xi_away.
  void validate() const;
};

// Uniformly random subset of `pool` with exactly `count` elements.
//
// Draws one uniform variate per element and keeps the `count` elements with
// the smallest draws (partial selection). The result is sorted ascending.
std::vector<std::size_t> sample_k(Rng& rng, std::span<const std::size_t> pool, std::size_t count);

// B(M, p): a uniformly random subset of exactly round_half_up(p * |M|)
// elements. The size is fixed by (|M|, p); it is not per-element Bernoulli.
std::vector<std::size_t> sample_subset(Rng& rng, std::span<const std::size_t> pool, double p);

// Number of pruned weights to revive: min(round_half_up(xi_back * |S|), |K|).
std::size_t drop_back_count(double xi_back, std::size_t candidates, std::size_t pruned);

}  // namespace dprune
