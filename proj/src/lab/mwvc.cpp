#include "dprune/mwvc.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "dprune/error.hpp"
#include "dprune/sampler.hpp"

namespace dprune::mwvc {

WeightedGraph::WeightedGraph(std::vector<double> weights,
                             std::vector<std::pair<std::size_t, std::size_t>> edges)
    : weights_(std::move(weights)), adjacency_(weights_.size()) {
  for (std::size_t v = 0; v < weights_.size(); ++v) {
    if (!(weights_[v] > 0.0)) {
      throw ConfigError("vertex " + std::to_string(v) + " has non-positive weight");
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [u, v] : edges) {
    if (u >= weights_.size() || v >= weights_.size()) {
      throw ConfigError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range");
    }
    if (u == v) throw ConfigError("self-loop at vertex " + std::to_string(u));
    if (u > v) std::swap(u, v);
    if (!seen.emplace(u, v).second) {
      throw ConfigError("duplicate edge (" + std::to_string(u) + ", " + std::to_string(v) + ")");
    }
    edges_.emplace_back(u, v);
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
  }
}

double WeightedGraph::max_weight() const {
  return weights_.empty() ? 0.0 : *std::max_element(weights_.begin(), weights_.end());
}

WeightedGraph parse_graph(std::istream& in) {
  auto fail = [](const std::string& what) {
    return FormatError(FormatError::Kind::BadValue, "graph: " + what);
  };
  long long v = -1, e = -1;
  if (!(in >> v >> e) || v < 0 || e < 0) throw fail("expected header \"V E\"");
  std::vector<double> weights(static_cast<std::size_t>(v));
  for (auto& w : weights) {
    if (!(in >> w)) throw FormatError(FormatError::Kind::Truncated, "graph: missing vertex weight");
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (long long i = 0; i < e; ++i) {
    long long a = -1, b = -1;
    if (!(in >> a >> b)) throw FormatError(FormatError::Kind::Truncated, "graph: missing edge line");
    if (a < 0 || b < 0) throw fail("negative vertex index");
    edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  std::string extra;
  if (in >> extra) throw fail("trailing content \"" + extra + "\"");
  try {
    return WeightedGraph(std::move(weights), std::move(edges));
  } catch (const ConfigError& err) {
    throw fail(err.what());
  }
}

WeightedGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file " + path.string());
  return parse_graph(in);
}

double cover_weight(const WeightedGraph& g, const Cover& s) {
  double total = 0.0;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    if (s[v]) total += g.weight(v);
  }
  return total;
}

namespace {

std::size_t uncovered_edges(const WeightedGraph& g, const Cover& s) {
  std::size_t n = 0;
  for (auto [u, v] : g.edges()) n += !s[u] && !s[v];
  return n;
}

void check_size(const WeightedGraph& g, const Cover& s) {
  if (s.size() != g.vertex_count()) {
    throw ShapeError("cover has " + std::to_string(s.size()) + " entries for " +
                     std::to_string(g.vertex_count()) + " vertices");
  }
}

// Tracks a state with its uncovered-edge count so flips cost O(degree).
class State {
 public:
  State(const WeightedGraph& g, Cover s, double penalty)
      : g_(g), s_(std::move(s)), penalty_(penalty), uncovered_(uncovered_edges(g, s_)) {}

  const Cover& cover() const { return s_; }
  bool feasible() const { return uncovered_ == 0; }

  std::size_t open_neighbors(std::size_t v) const {
    std::size_t z = 0;
    for (std::size_t u : g_.neighbors(v)) z += !s_[u];
    return z;
  }

  // Objective change if v flips.
  double flip_delta(std::size_t v) const {
    const double z = static_cast<double>(open_neighbors(v));
    return s_[v] ? -g_.weight(v) + penalty_ * z : g_.weight(v) - penalty_ * z;
  }

  std::uint8_t best_response(std::size_t v) const {
    return flip_delta(v) < 0.0 ? static_cast<std::uint8_t>(!s_[v]) : s_[v];
  }

  // Returns true when the bit changed.
  bool play(std::size_t v, std::uint8_t action) {
    if (action == s_[v]) return false;
    const std::size_t z = open_neighbors(v);
    if (action) {
      uncovered_ -= z;
    } else {
      uncovered_ += z;
    }
    s_[v] = action;
    return true;
  }

 private:
  const WeightedGraph& g_;
  Cover s_;
  double penalty_;
  std::size_t uncovered_;
};

Cover initial_cover(const WeightedGraph& g, const MwvcConfig& cfg) {
  if (cfg.initial) {
    check_size(g, *cfg.initial);
    return *cfg.initial;
  }
  return Cover(g.vertex_count(), 1);
}

}  // namespace

double objective(const WeightedGraph& g, const Cover& s, double penalty) {
  check_size(g, s);
  return cover_weight(g, s) + penalty * static_cast<double>(uncovered_edges(g, s));
}

bool is_cover(const WeightedGraph& g, const Cover& s) {
  check_size(g, s);
  return uncovered_edges(g, s) == 0;
}

double default_penalty(const WeightedGraph& g) { return g.max_weight() + 1.0; }

void MwvcConfig::validate() const {
  if (!(mutation >= 0.0 && mutation <= 1.0)) throw ConfigError("mutation probability must lie in [0, 1]");
  if (memory_depth == 0) throw ConfigError("memory depth must be at least 1");
  if (!(penalty > 0.0)) throw ConfigError("penalty must be positive");
}

CoverResult solve_greedy(const WeightedGraph& g, const MwvcConfig& cfg) {
  cfg.validate();
  State state(g, initial_cover(g, cfg), cfg.penalty);
  CoverResult r;
  for (std::size_t round = 0; round < cfg.max_rounds; ++round) {
    bool changed = false;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      changed |= state.play(v, state.best_response(v));
    }
    ++r.rounds;
    r.round_objectives.push_back(objective(g, state.cover(), cfg.penalty));
    if (!changed) break;
  }
  r.cover = state.cover();
  r.objective = objective(g, r.cover, cfg.penalty);
  r.feasible = state.feasible();
  return r;
}

CoverResult solve_memory(const WeightedGraph& g, const MwvcConfig& cfg, std::size_t restarts) {
  CoverResult best = solve_greedy(g, cfg);
  if (cfg.mutation == 0.0) return best;

  Rng rng(cfg.seed);
  const std::size_t n = g.vertex_count();
  const std::size_t depth = cfg.memory_depth;
  best.round_objectives.clear();
  best.rounds = 0;

  for (std::size_t pass = 0; pass < restarts; ++pass) {
    State state(g, initial_cover(g, cfg), cfg.penalty);
    // ring[v] holds up to `depth` past actions of v, oldest overwritten first.
    std::vector<std::vector<std::uint8_t>> ring(n);
    std::vector<std::size_t> head(n, 0);
    for (std::size_t v = 0; v < n; ++v) ring[v].push_back(state.cover()[v]);

    for (std::size_t round = 0; round < cfg.max_rounds; ++round) {
      for (std::size_t v = 0; v < n; ++v) {
        std::uint8_t action;
        if (rng.uniform() < cfg.mutation) {
          action = ring[v][rng.below(ring[v].size())];
        } else {
          action = state.best_response(v);
        }
        if (state.play(v, action) && state.feasible()) {
          const double obj = cover_weight(g, state.cover());
          if (!best.feasible || obj < best.objective) {
            best.cover = state.cover();
            best.objective = obj;
            best.feasible = true;
          }
        }
      }
      for (std::size_t v = 0; v < n; ++v) {
        if (ring[v].size() < depth) {
          ring[v].push_back(state.cover()[v]);
        } else {
          ring[v][head[v]] = state.cover()[v];
          head[v] = (head[v] + 1) % depth;
        }
      }
      ++best.rounds;
      best.round_objectives.push_back(best.objective);
    }
  }
  return best;
}

CoverResult solve_exact(const WeightedGraph& g) {
  const std::size_t n = g.vertex_count();
  if (n > kMaxExactVertices) {
    throw ConfigError("exact solver supports at most " + std::to_string(kMaxExactVertices) + " vertices");
  }
  // Neighbor bitmasks indexed by vertex. Vertex i maps to bit (n-1-i) of the
  // enumeration counter, so increasing counters visit S in lexicographic order.
  std::vector<std::uint32_t> nbr(n, 0);
  auto bit = [n](std::size_t v) { return std::uint32_t{1} << (n - 1 - v); };
  for (auto [u, v] : g.edges()) {
    nbr[u] |= bit(v);
    nbr[v] |= bit(u);
  }

  CoverResult r;
  r.feasible = true;
  std::uint32_t best_code = 0;
  double best_cost = 0.0;
  bool found = false;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t code64 = 0; code64 < total; ++code64) {
    const auto code = static_cast<std::uint32_t>(code64);
    bool covers = true;
    for (std::size_t v = 0; v < n && covers; ++v) {
      if (!(code & bit(v)) && (nbr[v] & ~code) != 0) covers = false;
    }
    if (!covers) continue;
    double cost = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (code & bit(v)) cost += g.weight(v);
    }
    if (!found || cost < best_cost) {
      found = true;
      best_cost = cost;
      best_code = code;
    }
  }
  r.cover.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) r.cover[v] = (best_code & bit(v)) ? 1 : 0;
  r.objective = best_cost;
  return r;
}

}  // namespace dprune::mwvc
