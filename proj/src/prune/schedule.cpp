#include "dprune/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dprune/error.hpp"
#include "dprune/sampler.hpp"

namespace dprune {

void ScheduleConfig::validate() const {
  if (!(final_sparsity > 0.0 && final_sparsity < 1.0)) {
    throw ConfigError("target sparsity must lie in (0, 1)");
  }
  if (prune_steps == 0) throw ConfigError("prune_steps must be at least 1");
}

double target_sparsity_at(const ScheduleConfig& cfg, std::size_t t) {
  if (t > cfg.prune_steps) {
    throw Error("prune step " + std::to_string(t) + " outside [0, " + std::to_string(cfg.prune_steps) + "]");
  }
  if (t == cfg.prune_steps) return cfg.final_sparsity;
  const double remaining = 1.0 - static_cast<double>(t) / static_cast<double>(cfg.prune_steps);
  return cfg.final_sparsity * (1.0 - remaining * remaining * remaining);
}

std::size_t target_pruned_count(double s, std::size_t total) {
  return std::min(total, round_half_up(s * static_cast<double>(total)));
}

Threshold threshold_for(const MaskedModel& m, std::size_t needed, const Scope& scope) {
  std::vector<std::size_t> live = m.mask.support(scope);
  if (needed > live.size()) {
    throw Error("threshold_for: need " + std::to_string(needed) + " candidates but only " +
                std::to_string(live.size()) + " live weights in scope");
  }
  Threshold out;
  if (needed == 0) {
    out.lambda = -std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(live.size());
  for (std::size_t i : live) keyed.emplace_back(std::abs(m.weight(i)), i);
  const auto nth = keyed.begin() + static_cast<std::ptrdiff_t>(needed - 1);
  std::nth_element(keyed.begin(), nth, keyed.end());
  out.lambda = nth->first;
  out.candidates.reserve(needed);
  for (auto it = keyed.begin(); it <= nth; ++it) out.candidates.push_back(it->second);
  std::sort(out.candidates.begin(), out.candidates.end());
  return out;
}

}  // namespace dprune
