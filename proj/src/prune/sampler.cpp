#include "dprune/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dprune/error.hpp"

namespace dprune {

std::uint64_t Rng::below(std::uint64_t n) {
  // Largest multiple of n representable; values above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = next();
  while (x >= limit) {
    x = next();
  }
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t derive_trial_seed(std::uint64_t base_seed, std::uint64_t trial) {
  // splitmix64 finalizer over the trial index, folded into the base seed.
  std::uint64_t z = trial + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return base_seed ^ z;
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

void DropConfig::validate() const {
  if (!(xi_away >= 0.0 && xi_away <= 1.0) || !(xi_back >= 0.0 && xi_back <= 1.0)) {
    throw ConfigError("drop probabilities xi1, xi2 must lie in [0, 1]");
  }
  if (!(xi_back < xi_away)) {
    throw ConfigError("xi2 must be strictly smaller than xi1");
  }
}

std::vector<std::size_t> sample_k(Rng& rng, std::span<const std::size_t> pool, std::size_t count) {
  if (count > pool.size()) {
    throw Error("sample_k: requested " + std::to_string(count) + " of " +
                std::to_string(pool.size()) + " elements");
  }
  std::vector<std::size_t> out;
  if (count == pool.size()) {
    out.assign(pool.begin(), pool.end());
  } else if (count > 0) {
    std::vector<std::pair<double, std::size_t>> keyed(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      keyed[i] = {rng.uniform(), i};
    }
    std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(count), keyed.end());
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(pool[keyed[i].second]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> sample_subset(Rng& rng, std::span<const std::size_t> pool, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error("sample_subset: p must lie in [0, 1]");
  }
  const std::size_t count = std::min(round_half_up(p * static_cast<double>(pool.size())), pool.size());
  return sample_k(rng, pool, count);
}

std::size_t drop_back_count(double xi_back, std::size_t candidates, std::size_t pruned) {
  return std::min(round_half_up(xi_back * static_cast<double>(candidates)), pruned);
}

}  // namespace dprune
