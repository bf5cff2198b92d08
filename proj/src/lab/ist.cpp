#include "dprune/ist.hpp"

#include <cmath>
#include <string>

#include "dprune/error.hpp"
#include "dprune/sampler.hpp"

namespace dprune::ist {

namespace {

constexpr double kDivergenceNorm = 1e12;

}  // namespace

void QuadraticProblem::validate() const {
  if (A.rows() != b.size()) {
    throw ConfigError("A has " + std::to_string(A.rows()) + " rows but b has " + std::to_string(b.size()));
  }
  if (A.cols() == 0) throw ConfigError("A must have at least one column");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
}

Eigen::VectorXd hard_threshold(const Eigen::VectorXd& theta, double s) {
  Eigen::VectorXd out = theta;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::abs(out(i)) < s) out(i) = 0.0;
  }
  return out;
}

double evaluate_objective(const QuadraticProblem& prob, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd r = prob.A * theta - prob.b;
  const auto nnz = static_cast<double>((theta.array() != 0.0).count());
  return 0.5 * r.squaredNorm() + prob.lambda * nnz;
}

double spectral_norm_sq(const Eigen::MatrixXd& A, std::size_t iters) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(A.cols()) / std::sqrt(static_cast<double>(A.cols()));
  double estimate = 0.0;
  for (std::size_t k = 0; k < iters; ++k) {
    const Eigen::VectorXd w = A.transpose() * (A * v);
    estimate = w.norm();
    if (estimate == 0.0) return 0.0;
    v = w / estimate;
  }
  return estimate;
}

double threshold_level(const QuadraticProblem& prob, double step, ThresholdRule rule) {
  return rule == ThresholdRule::Proximal ? std::sqrt(2.0 * prob.lambda * step) : prob.lambda * step;
}

IstResult ist_iterate(const QuadraticProblem& prob, const IstConfig& cfg, const Eigen::VectorXd& theta0) {
  prob.validate();
  if (theta0.size() != prob.A.cols()) {
    throw ShapeError("theta0 has length " + std::to_string(theta0.size()) + ", expected " +
                     std::to_string(prob.A.cols()));
  }
  if (cfg.stochastic) {
    DropConfig{cfg.xi_away, cfg.xi_back, cfg.seed}.validate();
  }

  IstResult result;
  if (cfg.step > 0.0) {
    result.step = cfg.step;
  } else {
    const double l = spectral_norm_sq(prob.A);
    if (!(l > 0.0)) throw ConfigError("A^T A is zero; choose a step explicitly");
    result.step = 1.0 / l;
  }
  const double eta = result.step;
  const double thr = threshold_level(prob, eta, cfg.rule);
  result.threshold = thr;

  const Eigen::Index n = theta0.size();
  Rng rng(cfg.seed);
  Eigen::VectorXd memory = theta0;  // last nonzero value per coordinate
  std::vector<std::uint8_t> has_memory(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) has_memory[static_cast<std::size_t>(i)] = theta0(i) != 0.0;

  Eigen::VectorXd theta = theta0;
  result.trajectory.push_back(theta);
  result.objectives.push_back(evaluate_objective(prob, theta));
  result.best = theta;
  result.best_objective = result.objectives.back();

  std::vector<std::size_t> below_live, revivable;
  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    const Eigen::VectorXd grad = prob.A.transpose() * (prob.A * theta - prob.b);
    Eigen::VectorXd z = theta - eta * grad;

    Eigen::VectorXd next;
    if (!cfg.stochastic) {
      next = hard_threshold(z, thr);
    } else {
      below_live.clear();
      revivable.clear();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(z(i)) >= thr) continue;
        if (theta(i) != 0.0) {
          below_live.push_back(static_cast<std::size_t>(i));
        } else {
          z(i) = 0.0;
          if (has_memory[static_cast<std::size_t>(i)]) revivable.push_back(static_cast<std::size_t>(i));
        }
      }
      for (std::size_t i : sample_subset(rng, below_live, cfg.xi_away)) {
        z(static_cast<Eigen::Index>(i)) = 0.0;
      }
      const std::size_t revive = drop_back_count(cfg.xi_back, below_live.size(), revivable.size());
      for (std::size_t i : sample_k(rng, revivable, revive)) {
        const auto j = static_cast<Eigen::Index>(i);
        z(j) = memory(j) - eta * grad(j);
      }
      next = std::move(z);
    }

    if (!next.allFinite() || next.norm() > kDivergenceNorm) {
      throw Error("IST diverged at iteration " + std::to_string(k + 1) + "; reduce the step size");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (next(i) != 0.0) {
        memory(i) = next(i);
        has_memory[static_cast<std::size_t>(i)] = 1;
      }
    }
    theta = std::move(next);
    const double obj = evaluate_objective(prob, theta);
    result.trajectory.push_back(theta);
    result.objectives.push_back(obj);
    if (obj < result.best_objective) {
      result.best_objective = obj;
      result.best = theta;
    }
  }
  return result;
}

Instance make_instance(std::uint64_t seed, std::size_t m, std::size_t n, std::size_t k, double sigma,
                       double lambda) {
  if (m == 0 || n == 0) throw ConfigError("instance dimensions must be positive");
  if (k > n) throw ConfigError("sparsity k exceeds n");
  Rng rng(seed);
  Instance inst;
  auto& A = inst.problem.A;
  A.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) A(r, c) = scale * rng.normal();
  }
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  inst.truth = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i : sample_k(rng, all, k)) {
    const double magnitude = rng.uniform(1.0, 2.0);
    inst.truth(static_cast<Eigen::Index>(i)) = rng.uniform() < 0.5 ? -magnitude : magnitude;
  }
  inst.problem.b = A * inst.truth;
  for (Eigen::Index r = 0; r < inst.problem.b.size(); ++r) inst.problem.b(r) += sigma * rng.normal();
  inst.problem.lambda = lambda;
  return inst;
}

double support_f1(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const bool e = estimate(i) != 0.0;
    const bool t = truth(i) != 0.0;
    tp += e && t;
    fp += e && !t;
    fn += !e && t;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

}  // namespace dprune::ist
