#include "dprune/prune.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "dprune/error.hpp"

namespace dprune {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Scope> constrained_scopes(const MaskedModel& m, Constraint constraint) {
  if (constraint == Constraint::GSC) return {Scope::global()};
  std::vector<Scope> scopes;
  for (std::size_t k = 0; k < m.mask.layer_count(); ++k) scopes.push_back(Scope::of_layer(k));
  return scopes;
}

// Live-weight count each scope must reach for sparsity s.
std::size_t target_support(const Mask& mask, const Scope& scope, double s) {
  const auto [b, e] = mask.range(scope);
  return (e - b) - target_pruned_count(s, e - b);
}

double test_error_of(const MaskedModel& m, const Dataset& test) {
  return test.empty() ? kNaN : evaluate(zeroed_copy(m), test).test_error;
}

}  // namespace

DropProbabilities probabilities_for(Variant v, const DropConfig& drop) {
  switch (v) {
    case Variant::Traditional:
      return {1.0, 0.0};
    case Variant::DropAway:
      return {drop.xi_away, 0.0};
    case Variant::DropPruning:
      return {drop.xi_away, drop.xi_back};
  }
  return {};
}

void PruneConfig::validate() const {
  schedule.validate();
  drop.validate();
  if (!(train.lr.initial > 0.0)) throw ConfigError("learning rate must be positive");
  if (train.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (schedule.retrain_batches == 0) throw ConfigError("retrain_batches must be at least 1");
}

std::size_t candidate_count(std::size_t net_removal, const DropProbabilities& p, std::size_t live,
                            std::size_t pruned) {
  if (net_removal == 0 || live == 0) return 0;
  const double rate = p.away - p.back;
  if (!(rate > 0.0)) throw ConfigError("drop-away probability must exceed drop-back probability");
  auto realized = [&](std::size_t c) {
    const std::size_t away = round_half_up(p.away * static_cast<double>(c));
    const std::size_t back = std::min(round_half_up(p.back * static_cast<double>(c)), pruned);
    return away > back ? away - back : 0;
  };
  const double wanted = std::ceil(static_cast<double>(net_removal) / rate);
  std::size_t c = wanted >= static_cast<double>(live) ? live : static_cast<std::size_t>(wanted);
  while (c > 0 && realized(c) > net_removal) --c;
  return c;
}

DropDecision decide_drops(const MaskedModel& m, const Scope& scope, std::size_t candidates,
                          const DropProbabilities& p, Rng& rng) {
  DropDecision d;
  d.threshold = threshold_for(m, candidates, scope);
  const std::vector<std::size_t> pruned = m.mask.pruned(scope);
  d.pruned_before = pruned.size();
  d.away = sample_subset(rng, d.threshold.candidates, p.away);
  d.back = sample_k(rng, pruned, drop_back_count(p.back, d.threshold.candidates.size(), pruned.size()));
  return d;
}

std::vector<DropDecision> plan_prune(const MaskedModel& m, Constraint constraint, double target_sparsity,
                                     const DropProbabilities& p, Rng& rng) {
  std::vector<DropDecision> plan;
  for (const Scope& scope : constrained_scopes(m, constraint)) {
    const auto [b, e] = m.mask.range(scope);
    const std::size_t live = m.mask.support_size(scope);
    const std::size_t goal = target_support(m.mask, scope, target_sparsity);
    const std::size_t net = live > goal ? live - goal : 0;
    const std::size_t c = candidate_count(net, p, live, (e - b) - live);
    plan.push_back(decide_drops(m, scope, c, p, rng));
  }
  return plan;
}

void apply_plan(MaskedModel& m, const std::vector<DropDecision>& plan) {
  std::vector<std::size_t> away, back;
  for (const auto& d : plan) {
    away.insert(away.end(), d.away.begin(), d.away.end());
    back.insert(back.end(), d.back.begin(), d.back.end());
  }
  apply_mask_updates(m, away, back);
}

MaskedTrainer::MaskedTrainer(const Dataset& train, const TrainConfig& cfg, std::uint64_t seed)
    : rng_(seed), stream_(train, cfg.batch_size, rng_), lr_(cfg.lr) {}

double MaskedTrainer::run(MaskedModel& m, std::size_t batches) {
  double total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double lr = lr_.at(stream_.epoch_position());
    stream_.next(batch_, labels_);
    const Gradients g = masked_backward(m, batch_, labels_);
    if (!std::isfinite(g.loss)) {
      throw TrialAborted("non-finite loss after " + std::to_string(stream_.batches_done()) +
                         " retraining batches");
    }
    masked_sgd_step(m, g, lr);
    total += g.loss;
  }
  return batches == 0 ? kNaN : total / static_cast<double>(batches);
}

StepRecord prune_step(MaskedModel& m, const PruneConfig& cfg, Rng& rng, MaskedTrainer& trainer,
                      const Dataset& test, std::size_t step) {
  StepRecord rec;
  rec.step = step;
  rec.scheduled_sparsity = target_sparsity_at(cfg.schedule, step);
  rec.support_before = m.mask.support_size();

  const auto plan = plan_prune(m, cfg.schedule.constraint, rec.scheduled_sparsity,
                               probabilities_for(cfg.variant, cfg.drop), rng);
  for (const auto& d : plan) {
    rec.candidates += d.threshold.candidates.size();
    rec.pruned_before += d.pruned_before;
    rec.dropped_away += d.away.size();
    rec.dropped_back += d.back.size();
  }
  apply_plan(m, plan);
  rec.support_after = m.mask.support_size();
  rec.achieved_sparsity = sparsity(m);

  rec.learning_rate = trainer.learning_rate();
  rec.train_loss = trainer.run(m, cfg.schedule.retrain_batches);
  rec.test_error = test_error_of(m, test);
  return rec;
}

std::optional<StepRecord> clamp_to_target(MaskedModel& m, const PruneConfig& cfg, const Dataset& test,
                                          std::size_t step) {
  std::vector<std::size_t> away;
  std::size_t candidates = 0;
  for (const Scope& scope : constrained_scopes(m, cfg.schedule.constraint)) {
    const std::size_t live = m.mask.support_size(scope);
    const std::size_t goal = target_support(m.mask, scope, cfg.schedule.final_sparsity);
    if (live <= goal) continue;
    const Threshold t = threshold_for(m, live - goal, scope);
    candidates += t.candidates.size();
    away.insert(away.end(), t.candidates.begin(), t.candidates.end());
  }
  if (away.empty()) return std::nullopt;

  StepRecord rec;
  rec.step = step;
  rec.scheduled_sparsity = cfg.schedule.final_sparsity;
  rec.support_before = m.mask.support_size();
  rec.pruned_before = m.mask.size() - rec.support_before;
  rec.candidates = candidates;
  rec.dropped_away = away.size();
  apply_mask_updates(m, away, {});
  rec.support_after = m.mask.support_size();
  rec.achieved_sparsity = sparsity(m);
  rec.learning_rate = kNaN;
  rec.train_loss = kNaN;
  rec.test_error = test_error_of(m, test);
  return rec;
}

TrialReport run_trial(const Network& baseline, const Dataset& train, const Dataset& test,
                      const PruneConfig& cfg, std::size_t trial_id) {
  cfg.validate();
  TrialReport report;
  report.trial_id = trial_id;
  report.drop_seed = derive_trial_seed(cfg.drop.base_seed, 2 * trial_id);
  report.sgd_seed = cfg.shared_sgd_stream ? derive_trial_seed(cfg.drop.base_seed, ~std::uint64_t{0})
                                          : derive_trial_seed(cfg.drop.base_seed, 2 * trial_id + 1);

  MaskedModel m(baseline);
  Rng drop_rng(report.drop_seed);
  MaskedTrainer trainer(train, cfg.train, report.sgd_seed);

  const std::size_t n = cfg.schedule.prune_steps;
  for (std::size_t t = 1; t <= n; ++t) {
    report.steps.push_back(prune_step(m, cfg, drop_rng, trainer, test, t));
  }
  if (auto clamp = clamp_to_target(m, cfg, test, n + 1)) {
    report.steps.push_back(*clamp);
  }

  double min_error = test_error_of(m, test);
  double last_error = min_error;
  for (std::size_t e = 0; e < cfg.schedule.finetune_epochs; ++e) {
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.learning_rate = cfg.train.lr.at(trainer.epoch());
    rec.train_loss = trainer.run(m, trainer.batches_per_epoch());
    rec.test_error = test_error_of(m, test);
    report.finetune.push_back(rec);
    last_error = rec.test_error;
    min_error = std::min(min_error, rec.test_error);
  }

  report.final_test_error = last_error;
  report.min_finetune_test_error = min_error;
  report.final_sparsity = sparsity(m);
  const auto live = static_cast<double>(m.mask.support_size());
  const auto dense = static_cast<double>(m.mask.size());
  const auto biases = static_cast<double>(m.net.parameter_count() - m.net.weight_count());
  report.weight_compression = live > 0 ? dense / live : std::numeric_limits<double>::infinity();
  report.param_compression = (dense + biases) / (live + biases);
  report.model = std::move(m);
  return report;
}

ExperimentSummary summarize(std::vector<TrialReport> trials, double sparsity, Variant variant) {
  ExperimentSummary s;
  s.sparsity = sparsity;
  s.variant = variant;
  std::vector<double> errors;
  for (const auto& t : trials) {
    if (t.aborted) {
      ++s.aborted;
    } else {
      errors.push_back(t.final_test_error);
    }
  }
  s.num_trials = errors.size();
  if (errors.empty()) {
    s.best = s.mean = s.std = kNaN;
  } else {
    s.best = *std::min_element(errors.begin(), errors.end());
    double sum = 0.0;
    for (double e : errors) sum += e;
    s.mean = sum / static_cast<double>(errors.size());
    double var = 0.0;
    for (double e : errors) var += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(var / static_cast<double>(errors.size()));
  }
  s.trials = std::move(trials);
  return s;
}

ExperimentSummary run_experiment(const Network& baseline, const Dataset& train, const Dataset& test,
                                 const PruneConfig& cfg, std::size_t num_trials, std::size_t jobs,
                                 const TrialCallback& on_done) {
  if (num_trials == 0) throw ConfigError("num_trials must be at least 1");
  cfg.validate();
  std::vector<TrialReport> reports(num_trials);
  std::atomic<std::size_t> next{0};
  std::mutex lock;
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < num_trials; i = next++) {
      TrialReport r;
      try {
        r = run_trial(baseline, train, test, cfg, i);
      } catch (const TrialAborted& e) {
        r.trial_id = i;
        r.aborted = true;
        r.diagnostic = e.what();
      } catch (...) {
        std::lock_guard guard(lock);
        if (!failure) failure = std::current_exception();
        return;
      }
      std::lock_guard guard(lock);
      if (on_done) on_done(r);
      reports[i] = std::move(r);
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, num_trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return summarize(std::move(reports), cfg.schedule.final_sparsity, cfg.variant);
}

}  // namespace dprune
