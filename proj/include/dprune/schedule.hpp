#pragma once

#include <cstddef>
#include <vector>

#include "dprune/mask.hpp"

namespace dprune {

// LSC imposes the target on every layer; GSC on the whole weight vector.
enum class Constraint { LSC, GSC };

struct ScheduleConfig {
  double final_sparsity = 0.9;
  std::size_t prune_steps = 20;
  std::size_t retrain_batches = 300;  // masked SGD minibatches after each prune step
  Constraint constraint = Constraint::GSC;
  std::size_t finetune_epochs = 9;

  // Throws ConfigError unless 0 < final_sparsity < 1 and prune_steps >= 1.
  void validate() const;
};

// Cubic ramp s_t = s * (1 - (1 - t/n)^3); s_0 = 0, s_n = s.
// Throws Error when t > n.
double target_sparsity_at(const ScheduleConfig& cfg, std::size_t t);

// Number of pruned weights that realises sparsity `s` over `total` weights.
std::size_t target_pruned_count(double s, std::size_t total);

// Pre-pruned set S and the magnitude threshold that produced it.
struct Threshold {
  double lambda = 0.0;                 // largest selected magnitude; -inf when S is empty
  std::vector<std::size_t> candidates;  // ascending flat indices
};

// Selects exactly `needed` live weights in `scope` with the smallest
// magnitudes, ties broken towards the lower flat index. lambda is the
// needed-th smallest live magnitude, so S = {i : |theta_i| <= lambda, T_i = 1}
// up to ties. Throws Error when `needed` exceeds the live count in scope.
Threshold threshold_for(const MaskedModel& m, std::size_t needed, const Scope& scope);

}  // namespace dprune
