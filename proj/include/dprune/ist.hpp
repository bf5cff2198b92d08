#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dprune::ist {

// min_theta  1/2 ||A theta - b||^2 + lambda ||theta||_0
struct QuadraticProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double lambda = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(A.cols()); }
  // Throws ConfigError on inconsistent dimensions or negative lambda.
  void validate() const;
};

// Threshold applied after each gradient step of size eta = 1/alpha:
//   Proximal: sqrt(2 * lambda * eta), the exact proximal map of lambda*||.||_0,
//             whose fixed points include the closed-form minimiser on
//             orthogonal designs.
//   Literal:  lambda * eta (lambda / alpha).
enum class ThresholdRule { Proximal, Literal };

struct IstConfig {
  double step = 0.0;  // eta = 1/alpha; 0 selects 1/||A^T A||_2 by power iteration
  std::size_t max_iters = 500;
  ThresholdRule rule = ThresholdRule::Proximal;
  bool stochastic = false;
  double xi_away = 0.9;  // stochastic mode only
  double xi_back = 0.08;
  std::uint64_t seed = 0;
};

// Keeps theta_i iff |theta_i| >= s; everything strictly below s becomes 0.
Eigen::VectorXd hard_threshold(const Eigen::VectorXd& theta, double s);

// 1/2 ||A theta - b||^2 + lambda * nnz(theta).
double evaluate_objective(const QuadraticProblem& prob, const Eigen::VectorXd& theta);

// Largest eigenvalue of A^T A after `iters` power-iteration steps from a fixed start.
double spectral_norm_sq(const Eigen::MatrixXd& A, std::size_t iters = 50);

double threshold_level(const QuadraticProblem& prob, double step, ThresholdRule rule);

struct IstResult {
  std::vector<Eigen::VectorXd> trajectory;  // theta^0 .. theta^K
  std::vector<double> objectives;           // objective of each trajectory entry
  Eigen::VectorXd best;                     // lowest-objective iterate (earliest on ties)
  double best_objective = 0.0;
  double step = 0.0;       // step size actually used
  double threshold = 0.0;  // threshold level actually used

  const Eigen::VectorXd& final_iterate() const { return trajectory.back(); }
  double final_objective() const { return objectives.back(); }
};

// theta^{k+1} = H(theta^k - eta * A^T (A theta^k - b)).
//
// In stochastic mode the thresholding step is replaced by drop away and drop
// back: of the live coordinates that fall below the threshold, a random
// fraction xi_away (exact count) is zeroed and the rest survive; of the
// coordinates that are zero and would stay zero, min(round(xi_back * |S|), |K|)
// chosen at random are revived from their last nonzero value plus the
// gradient step. With xi_away = 1, xi_back = 0 this reproduces the
// deterministic iteration bit for bit.
//
// Throws Error when ||theta|| exceeds 1e12.
IstResult ist_iterate(const QuadraticProblem& prob, const IstConfig& cfg, const Eigen::VectorXd& theta0);

// Random instance: A with N(0, 1/m) entries, k-sparse ground truth with
// magnitudes in [1, 2) and random signs, b = A x + sigma * noise.
struct Instance {
  QuadraticProblem problem;
  Eigen::VectorXd truth;
};
Instance make_instance(std::uint64_t seed, std::size_t m, std::size_t n, std::size_t k, double sigma,
                       double lambda);

// F1 score of supp(estimate) against supp(truth); 1 when both are empty.
double support_f1(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

}  // namespace dprune::ist
