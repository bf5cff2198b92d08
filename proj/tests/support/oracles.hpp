#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the code under test except for plain data accessors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dprune/mask.hpp"
#include "dprune/mwvc.hpp"
#include "dprune/network.hpp"

namespace oracle {

// Mean cross-entropy computed with plain loops, no Eigen.
inline double loss(const dprune::Network& net, const dprune::Tensor& x, const std::vector<int>& labels) {
  const std::size_t n = x.dim(0);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> a(x.values().begin() + static_cast<long>(r * x.dim(1)),
                          x.values().begin() + static_cast<long>((r + 1) * x.dim(1)));
    for (std::size_t k = 0; k < net.depth(); ++k) {
      const auto& L = net.layer(k);
      std::vector<double> z(L.fan_out());
      for (std::size_t j = 0; j < L.fan_out(); ++j) {
        double s = L.bias[j];
        for (std::size_t i = 0; i < L.fan_in(); ++i) s += a[i] * L.weights.at(i, j);
        z[j] = s;
      }
      if (L.activation == dprune::Activation::ReLU) {
        for (auto& v : z) v = std::max(v, 0.0);
      }
      a = std::move(z);
    }
    const double m = *std::max_element(a.begin(), a.end());
    double den = 0.0;
    for (double v : a) den += std::exp(v - m);
    total += -(a[static_cast<std::size_t>(labels[r])] - m - std::log(den));
  }
  return total / static_cast<double>(n);
}

// Smallest |pre-activation| over every hidden ReLU unit; central differences
// are only meaningful when this stays clear of zero.
inline double min_relu_margin(const dprune::Network& net, const dprune::Tensor& x) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    std::vector<double> a(x.values().begin() + static_cast<long>(r * x.dim(1)),
                          x.values().begin() + static_cast<long>((r + 1) * x.dim(1)));
    for (std::size_t k = 0; k < net.depth(); ++k) {
      const auto& L = net.layer(k);
      std::vector<double> z(L.fan_out());
      for (std::size_t j = 0; j < L.fan_out(); ++j) {
        double s = L.bias[j];
        for (std::size_t i = 0; i < L.fan_in(); ++i) s += a[i] * L.weights.at(i, j);
        z[j] = s;
        if (L.activation == dprune::Activation::ReLU) margin = std::min(margin, std::abs(s));
      }
      if (L.activation == dprune::Activation::ReLU) {
        for (auto& v : z) v = std::max(v, 0.0);
      }
      a = std::move(z);
    }
  }
  return margin;
}

// Parameter `index` counting layer by layer, weights (row-major) then bias.
inline double& parameter(dprune::Network& net, std::size_t index) {
  for (auto& L : net.layers()) {
    if (index < L.weights.size()) return L.weights[index];
    index -= L.weights.size();
    if (index < L.bias.size()) return L.bias[index];
    index -= L.bias.size();
  }
  throw std::out_of_range("parameter index");
}

// Central difference of oracle::loss with respect to one parameter.
inline double central_difference(dprune::Network net, std::size_t index, const dprune::Tensor& x,
                                 const std::vector<int>& labels, double h = 1e-6) {
  double& p = parameter(net, index);
  const double saved = p;
  p = saved + h;
  const double up = loss(net, x, labels);
  p = saved - h;
  const double down = loss(net, x, labels);
  p = saved;
  return (up - down) / (2.0 * h);
}

// Network copy with pruned weights zeroed, written without zeroed_copy().
inline dprune::Network zero_pruned(const dprune::MaskedModel& m) {
  dprune::Network out = m.net;
  std::size_t flat = 0;
  for (auto& L : out.layers()) {
    for (auto& w : L.weights.values()) {
      if (!m.mask.test(flat)) w = 0.0;
      ++flat;
    }
  }
  return out;
}

// Indices of the `needed` smallest live magnitudes by a full stable sort.
inline std::vector<std::size_t> smallest_live(const std::vector<double>& magnitudes,
                                              const std::vector<std::size_t>& live, std::size_t needed) {
  std::vector<std::size_t> order = live;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return magnitudes[a] < magnitudes[b]; });
  order.resize(needed);
  std::sort(order.begin(), order.end());
  return order;
}

// Upper-tail probability of the chi-square distribution, via the regularized
// incomplete gamma function (series below a + 1, continued fraction above).
inline double chi_square_sf(double stat, double df) {
  const double a = df / 2.0, x = stat / 2.0;
  if (x <= 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - lg) * h;
}

// L0 objective with plain loops.
inline double l0_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda,
                           const Eigen::VectorXd& theta) {
  double sq = 0.0;
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    double s = -b(r);
    for (Eigen::Index c = 0; c < A.cols(); ++c) s += A(r, c) * theta(c);
    sq += s * s;
  }
  std::size_t nnz = 0;
  for (Eigen::Index c = 0; c < theta.size(); ++c) nnz += theta(c) != 0.0;
  return 0.5 * sq + lambda * static_cast<double>(nnz);
}

// Global L0 minimum by least squares on every one of the 2^n supports.
inline double l0_global_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda) {
  const auto n = A.cols();
  double best = 0.5 * b.squaredNorm();
  for (std::uint32_t code = 1; code < (std::uint32_t{1} << n); ++code) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (code & (1u << c)) cols.push_back(c);
    }
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = A.col(cols[j]);
    const Eigen::VectorXd x = sub.colPivHouseholderQr().solve(b);
    const double obj = 0.5 * (sub * x - b).squaredNorm() + lambda * static_cast<double>(cols.size());
    best = std::min(best, obj);
  }
  return best;
}

// Minimum-weight vertex cover by recursive include/exclude branching over
// vertices in index order; exclusion is tried first, so among equal costs the
// lexicographically smallest cover is found first. Integer weights expected.
struct BranchCover {
  const dprune::mwvc::WeightedGraph& g;
  dprune::mwvc::Cover current, best;
  double best_cost = std::numeric_limits<double>::infinity();

  explicit BranchCover(const dprune::mwvc::WeightedGraph& graph)
      : g(graph), current(graph.vertex_count(), 0) {}

  bool edges_ok_upto(std::size_t v) const {
    // every edge with both endpoints <= v must be covered
    for (auto [a, b] : g.edges()) {
      if (b <= v && !current[a] && !current[b]) return false;
    }
    return true;
  }

  void go(std::size_t v, double cost) {
    if (v == g.vertex_count()) {
      if (cost < best_cost) {
        best_cost = cost;
        best = current;
      }
      return;
    }
    for (std::uint8_t choice : {std::uint8_t{0}, std::uint8_t{1}}) {
      current[v] = choice;
      if (edges_ok_upto(v)) go(v + 1, cost + (choice ? g.weight(v) : 0.0));
    }
    current[v] = 0;
  }
};

inline std::pair<dprune::mwvc::Cover, double> brute_force_cover(const dprune::mwvc::WeightedGraph& g) {
  BranchCover search(g);
  search.go(0, 0.0);
  return {search.best, search.best_cost};
}

}  // namespace oracle
