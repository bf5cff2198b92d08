#include <gtest/gtest.h>

#include <sstream>

#include "dprune/error.hpp"
#include "dprune/ist.hpp"
#include "dprune/mwvc.hpp"
#include "support/oracles.hpp"

using namespace dprune;

TEST(Ist, IdentityExample) {
  ist::QuadraticProblem p{Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 0.1), 0.04};
  ist::IstConfig cfg;
  cfg.step = 1.0;
  cfg.max_iters = 5;
  const auto r = ist::ist_iterate(p, cfg, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(r.final_iterate(), Eigen::Vector2d(1.0, 0.0));
  EXPECT_DOUBLE_EQ(r.final_objective(), 0.5 * 0.01 + 0.04);
}

TEST(Ist, LiteralRuleUsesLambdaTimesStep) {
  ist::QuadraticProblem p{Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 0.1), 0.04};
  EXPECT_DOUBLE_EQ(ist::threshold_level(p, 1.0, ist::ThresholdRule::Literal), 0.04);
  EXPECT_DOUBLE_EQ(ist::threshold_level(p, 0.5, ist::ThresholdRule::Proximal), std::sqrt(0.04));
  ist::IstConfig cfg;
  cfg.step = 1.0;
  cfg.max_iters = 3;
  cfg.rule = ist::ThresholdRule::Literal;
  EXPECT_EQ(ist::ist_iterate(p, cfg, Eigen::VectorXd::Zero(2)).final_iterate(), Eigen::Vector2d(1.0, 0.1));
}

TEST(Ist, HardThresholdKeepsTies) {
  const Eigen::Vector3d v(0.5, -0.49, -0.5);
  EXPECT_EQ(ist::hard_threshold(v, 0.5), Eigen::Vector3d(0.5, 0.0, -0.5));
}

TEST(Ist, ObjectiveMatchesOracle) {
  const auto inst = ist::make_instance(3, 8, 6, 2, 0.1, 0.05);
  const ist::IstConfig cfg;
  const auto r = ist::ist_iterate(inst.problem, cfg, Eigen::VectorXd::Zero(6));
  for (std::size_t k = 0; k < r.trajectory.size(); k += 50) {
    EXPECT_NEAR(r.objectives[k],
                oracle::l0_objective(inst.problem.A, inst.problem.b, inst.problem.lambda, r.trajectory[k]), 1e-12);
  }
  EXPECT_GE(r.best_objective + 1e-12, oracle::l0_global_min(inst.problem.A, inst.problem.b, inst.problem.lambda));
}

TEST(Ist, StochasticDegeneratesToDeterministic) {
  const auto inst = ist::make_instance(4, 20, 30, 4, 0.05, 0.02);
  ist::IstConfig det;
  det.max_iters = 100;
  ist::IstConfig sto = det;
  sto.stochastic = true;
  sto.xi_away = 1.0;
  sto.xi_back = 0.0;
  sto.seed = 99;
  const auto a = ist::ist_iterate(inst.problem, det, Eigen::VectorXd::Zero(30));
  const auto b = ist::ist_iterate(inst.problem, sto, Eigen::VectorXd::Zero(30));
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t k = 0; k < a.trajectory.size(); ++k) EXPECT_EQ(a.trajectory[k], b.trajectory[k]);
}

TEST(Ist, DivergenceIsReported) {
  const auto inst = ist::make_instance(5, 10, 10, 2, 0.0, 0.0);
  ist::IstConfig cfg;
  cfg.step = 100.0;
  EXPECT_THROW(ist::ist_iterate(inst.problem, cfg, Eigen::VectorXd::Zero(10)), Error);
  ist::QuadraticProblem bad{Eigen::MatrixXd::Identity(3, 3), Eigen::Vector2d(1.0, 1.0), 0.1};
  EXPECT_THROW(ist::ist_iterate(bad, cfg, Eigen::VectorXd::Zero(3)), ConfigError);
}

TEST(Ist, NoisefreeRecoveryWithoutPenalty) {
  const auto inst = ist::make_instance(6, 30, 10, 3, 0.0, 0.0);
  ist::IstConfig cfg;
  cfg.max_iters = 3000;
  const auto r = ist::ist_iterate(inst.problem, cfg, Eigen::VectorXd::Zero(10));
  EXPECT_LT((inst.problem.A * r.final_iterate() - inst.problem.b).norm(), 1e-8);
}

namespace {

mwvc::WeightedGraph path3() { return mwvc::WeightedGraph({1.0, 1.0, 1.0}, {{0, 1}, {1, 2}}); }

// 5-cycle with one heavy vertex.
mwvc::WeightedGraph cycle5() {
  return mwvc::WeightedGraph({1.0, 2.0, 1.0, 5.0, 1.0}, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
}

}  // namespace

TEST(Mwvc, PathEnumeratedByHand) {
  // The 8 subsets of {0,1,2}: covers are {1}, {0,1}, {1,2}, {0,2}, {0,1,2}.
  const auto g = path3();
  int covers = 0;
  for (int code = 0; code < 8; ++code) {
    mwvc::Cover s{static_cast<std::uint8_t>(code & 1), static_cast<std::uint8_t>((code >> 1) & 1),
                  static_cast<std::uint8_t>((code >> 2) & 1)};
    covers += mwvc::is_cover(g, s);
  }
  EXPECT_EQ(covers, 5);
  const auto exact = mwvc::solve_exact(g);
  EXPECT_EQ(exact.cover, (mwvc::Cover{0, 1, 0}));
  EXPECT_EQ(exact.objective, 1.0);
  EXPECT_EQ(mwvc::objective(g, {0, 0, 0}, 10.0), 20.0);
}

TEST(Mwvc, CycleEnumeratedByHand) {
  // Of the 32 subsets of a 5-cycle, 11 are covers; cheapest is {0, 2, 4} at 3.
  const auto g = cycle5();
  int covers = 0;
  for (int code = 0; code < 32; ++code) {
    mwvc::Cover s(5);
    for (int v = 0; v < 5; ++v) s[static_cast<std::size_t>(v)] = (code >> v) & 1;
    covers += mwvc::is_cover(g, s);
  }
  EXPECT_EQ(covers, 11);
  const auto exact = mwvc::solve_exact(g);
  EXPECT_EQ(exact.cover, (mwvc::Cover{1, 0, 1, 0, 1}));
  EXPECT_EQ(exact.objective, 3.0);
  EXPECT_EQ(oracle::brute_force_cover(g).second, 3.0);
}

TEST(Mwvc, GreedyReachesAFeasibleLocalMinimum) {
  const auto g = cycle5();
  mwvc::MwvcConfig cfg;
  cfg.penalty = mwvc::default_penalty(g);
  const auto r = mwvc::solve_greedy(g, cfg);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(mwvc::is_cover(g, r.cover));
  for (std::size_t v = 0; v < 5; ++v) {
    auto flipped = r.cover;
    flipped[v] ^= 1;
    EXPECT_GE(mwvc::objective(g, flipped, cfg.penalty), r.objective);
  }
}

TEST(Mwvc, MemoryNeverWorseThanGreedy) {
  const auto g = cycle5();
  mwvc::MwvcConfig cfg;
  cfg.penalty = mwvc::default_penalty(g);
  const double greedy = mwvc::solve_greedy(g, cfg).objective;
  cfg.mutation = 0.2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const auto r = mwvc::solve_memory(g, cfg);
    EXPECT_TRUE(r.feasible);
    EXPECT_LE(r.objective, greedy);
    EXPECT_EQ(r.objective, mwvc::cover_weight(g, r.cover));
  }
  cfg.mutation = 0.0;
  EXPECT_EQ(mwvc::solve_memory(g, cfg).cover, mwvc::solve_greedy(g, cfg).cover);
}

TEST(Mwvc, ParserAndValidation) {
  std::istringstream ok("3 2\n1 2 3\n0 1\n1 2\n");
  const auto g = mwvc::parse_graph(ok);
  EXPECT_EQ(g.vertex_count(), 3u);
  EXPECT_EQ(g.edge_count(), 2u);
  std::istringstream truncated("3 2\n1 2 3\n0 1\n");
  EXPECT_THROW(mwvc::parse_graph(truncated), FormatError);
  std::istringstream loop("2 1\n1 1\n1 1\n");
  EXPECT_THROW(mwvc::parse_graph(loop), FormatError);
  std::istringstream dup("2 2\n1 1\n0 1\n1 0\n");
  EXPECT_THROW(mwvc::parse_graph(dup), FormatError);
  EXPECT_THROW(mwvc::WeightedGraph({1.0, 0.0}, {}), ConfigError);
  mwvc::MwvcConfig cfg;
  EXPECT_THROW(mwvc::solve_greedy(g, cfg), ConfigError);  // penalty unset
  EXPECT_THROW(mwvc::solve_exact(mwvc::WeightedGraph(std::vector<double>(25, 1.0), {})), ConfigError);
}
