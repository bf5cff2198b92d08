#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dprune/dataset.hpp"
#include "dprune/error.hpp"
#include "dprune/mask.hpp"
#include "dprune/network.hpp"
#include "dprune/sampler.hpp"
#include "dprune/schedule.hpp"

namespace dprune {

// Traditional: p_away = 1, p_back = 0.
// DropAway:    p_away = xi1, p_back = 0.
// DropPruning: p_away = xi1, drop-back count from drop_back_count(xi2, ...).
enum class Variant { Traditional, DropAway, DropPruning };

struct DropProbabilities {
  double away = 1.0;
  double back = 0.0;  // xi2 fed to drop_back_count; 0 disables drop back
};

DropProbabilities probabilities_for(Variant v, const DropConfig& drop);

struct PruneConfig {
  ScheduleConfig schedule;
  DropConfig drop;
  TrainConfig train;  // batch size and learning-rate policy for retraining; epochs unused
  Variant variant = Variant::DropPruning;
  // Every trial reuses one minibatch order; only the drop sampler differs.
  bool shared_sgd_stream = false;

  void validate() const;
};

// Outcome of steps 1-4 of a prune step within one scope.
struct DropDecision {
  Threshold threshold;              // S and lambda
  std::size_t pruned_before = 0;    // |K|, taken before any mask change
  std::vector<std::size_t> away;    // B(S, p_away)
  std::vector<std::size_t> back;    // B(K, p_back)
};

// Size of S so that the net removal round(p_away|S|) - min(round(xi2|S|), |K|)
// approaches `net_removal` without exceeding it. Starts from
// ceil(net_removal / (p_away - xi2)), capped at `live`.
std::size_t candidate_count(std::size_t net_removal, const DropProbabilities& p, std::size_t live,
                            std::size_t pruned);

// S from the magnitude threshold, K from the current mask, then the two
// fixed-size random draws. Does not modify the model.
DropDecision decide_drops(const MaskedModel& m, const Scope& scope, std::size_t candidates,
                          const DropProbabilities& p, Rng& rng);

// Drop decisions that move every constrained scope towards `target_sparsity`
// (one scope under GSC, one per layer under LSC).
std::vector<DropDecision> plan_prune(const MaskedModel& m, Constraint constraint,
                                     double target_sparsity, const DropProbabilities& p, Rng& rng);

// Applies a plan's away/back sets to the mask.
void apply_plan(MaskedModel& m, const std::vector<DropDecision>& plan);

// Masked minibatch SGD over a dataset with the epoch-indexed learning-rate
// policy; the epoch counter starts at zero on construction.
class MaskedTrainer {
 public:
  MaskedTrainer(const Dataset& train, const TrainConfig& cfg, std::uint64_t seed);

  // Runs `batches` masked SGD steps and returns their mean loss.
  // Throws TrialAborted when the loss turns non-finite.
  double run(MaskedModel& m, std::size_t batches);
  double epoch() const { return stream_.epoch_position(); }
  double learning_rate() const { return lr_.at(stream_.epoch_position()); }
  std::size_t batches_per_epoch() const { return stream_.batches_per_epoch(); }

 private:
  Rng rng_;
  BatchStream stream_;
  LrSchedule lr_;
  Tensor batch_;
  std::vector<int> labels_;
};

class TrialAborted : public Error {
 public:
  using Error::Error;
};

struct StepRecord {
  std::size_t step = 0;  // 1..n for scheduled steps, n + 1 for the final clamp
  double scheduled_sparsity = 0.0;
  double achieved_sparsity = 0.0;
  std::size_t support_before = 0;
  std::size_t support_after = 0;
  std::size_t candidates = 0;     // |S| summed over scopes
  std::size_t pruned_before = 0;  // |K| summed over scopes
  std::size_t dropped_away = 0;
  std::size_t dropped_back = 0;
  double learning_rate = 0.0;  // at the first retraining batch; NaN for the clamp step
  double train_loss = 0.0;  // mean retraining loss; NaN for the clamp step
  double test_error = 0.0;
};

// One scheduled prune step: threshold, drop away, drop back, retrain.
StepRecord prune_step(MaskedModel& m, const PruneConfig& cfg, Rng& rng, MaskedTrainer& trainer,
                      const Dataset& test, std::size_t step);

// Deterministically prunes the smallest live weights until each constrained
// scope sits exactly at the final sparsity. Returns nullopt when nothing to do.
std::optional<StepRecord> clamp_to_target(MaskedModel& m, const PruneConfig& cfg, const Dataset& test,
                                          std::size_t step);

struct TrialReport {
  std::size_t trial_id = 0;
  std::uint64_t drop_seed = 0;
  std::uint64_t sgd_seed = 0;
  bool aborted = false;
  std::string diagnostic;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> finetune;
  double final_test_error = 0.0;
  double min_finetune_test_error = 0.0;
  double final_sparsity = 0.0;
  double weight_compression = 0.0;  // dense weights / live weights
  double param_compression = 0.0;   // same with biases counted on both sides
  MaskedModel model;
};

// Full gradual prune-retrain loop from a trained baseline, then finetuning
// with a frozen mask. Throws TrialAborted on a non-finite loss.
TrialReport run_trial(const Network& baseline, const Dataset& train, const Dataset& test,
                      const PruneConfig& cfg, std::size_t trial_id);

struct ExperimentSummary {
  double sparsity = 0.0;
  Variant variant = Variant::DropPruning;
  double best = 0.0;  // min final test error over completed trials
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t num_trials = 0;  // completed trials
  std::size_t aborted = 0;
  std::vector<TrialReport> trials;  // in trial-id order, aborted ones included
};

// Aggregates completed reports; aborted ones are counted and skipped.
ExperimentSummary summarize(std::vector<TrialReport> trials, double sparsity, Variant variant);

using TrialCallback = std::function<void(const TrialReport&)>;

// Runs `num_trials` independent trials on up to `jobs` threads. Results do not
// depend on `jobs`. The callback, if set, is invoked under a lock.
ExperimentSummary run_experiment(const Network& baseline, const Dataset& train, const Dataset& test,
                                 const PruneConfig& cfg, std::size_t num_trials, std::size_t jobs = 1,
                                 const TrialCallback& on_done = {});

}  // namespace dprune
