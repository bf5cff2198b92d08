#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <utility>
#include <vector>

namespace dprune::mwvc {

// Undirected graph with positive vertex weights. Edges are stored with u < v.
class WeightedGraph {
 public:
  // Throws ConfigError on self-loops, duplicate edges, out-of-range
  // endpoints, or non-positive weights.
  WeightedGraph(std::vector<double> weights, std::vector<std::pair<std::size_t, std::size_t>> edges);

  std::size_t vertex_count() const { return weights_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  double weight(std::size_t v) const { return weights_[v]; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adjacency_[v]; }
  double max_weight() const;

 private:
  std::vector<double> weights_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

// Edge-list text format: "V E", then V weight lines, then E lines "u v"
// (0-indexed). Throws FormatError on malformed input.
WeightedGraph parse_graph(std::istream& in);
WeightedGraph load_graph(const std::filesystem::path& path);

using Cover = std::vector<std::uint8_t>;

// sum_i w_i S_i + penalty * (number of uncovered edges).
double objective(const WeightedGraph& g, const Cover& s, double penalty);
bool is_cover(const WeightedGraph& g, const Cover& s);
double cover_weight(const WeightedGraph& g, const Cover& s);

// Penalty large enough that every local minimum is a valid cover.
double default_penalty(const WeightedGraph& g);

struct MwvcConfig {
  double mutation = 0.0;          // probability of replaying a remembered action
  std::size_t memory_depth = 8;   // H, ring length per vertex
  std::size_t max_rounds = 200;
  double penalty = 0.0;           // rho; must be > 0
  std::uint64_t seed = 0;
  std::optional<Cover> initial;   // defaults to all-ones

  // Throws ConfigError on out-of-range knobs.
  void validate() const;
};

struct CoverResult {
  Cover cover;
  double objective = 0.0;
  bool feasible = false;
  std::size_t rounds = 0;
  std::vector<double> round_objectives;  // objective after each round (greedy) or best-so-far (memory)
};

// Round-robin best response: each vertex in index order flips its bit iff
// that strictly lowers the objective; stops after a round without changes or
// after max_rounds. The mutation knob is ignored.
CoverResult solve_greedy(const WeightedGraph& g, const MwvcConfig& cfg);

// Memory mechanism. Each round every vertex, in index order, plays its best
// response with probability 1 - mutation, otherwise an action drawn uniformly
// from its last `memory_depth` actions; actions are appended after each round.
// Runs `restarts` independent passes of max_rounds from the initial state,
// seeded with the plain greedy result, and returns the lowest-objective
// feasible state seen. mutation == 0 reduces to solve_greedy.
CoverResult solve_memory(const WeightedGraph& g, const MwvcConfig& cfg, std::size_t restarts = 1);

// Exhaustive minimum-weight cover; ties go to the lexicographically smallest
// S. Throws ConfigError when V > 24.
CoverResult solve_exact(const WeightedGraph& g);

inline constexpr std::size_t kMaxExactVertices = 24;

}  // namespace dprune::mwvc
