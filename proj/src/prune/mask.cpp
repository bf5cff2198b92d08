#include "dprune/mask.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dprune/error.hpp"

namespace dprune {

namespace {

std::vector<std::size_t> weight_sizes(const Network& net) {
  std::vector<std::size_t> sizes;
  for (const auto& l : net.layers()) sizes.push_back(l.weights.size());
  return sizes;
}

// Layer that owns flat index i.
std::size_t owner(const std::vector<std::size_t>& offsets, std::size_t i) {
  const auto it = std::upper_bound(offsets.begin(), offsets.end(), i);
  return static_cast<std::size_t>(it - offsets.begin()) - 1;
}

}  // namespace

Mask::Mask(std::span<const std::size_t> layer_sizes) {
  offsets_.push_back(0);
  for (std::size_t s : layer_sizes) offsets_.push_back(offsets_.back() + s);
  bits_.assign(offsets_.back(), 1);
  live_ = bits_.size();
}

Mask Mask::for_network(const Network& net) {
  const auto sizes = weight_sizes(net);
  return Mask(sizes);
}

std::pair<std::size_t, std::size_t> Mask::range(const Scope& scope) const {
  if (!scope.layer) return {0, bits_.size()};
  if (*scope.layer >= layer_count()) {
    throw Error("layer index " + std::to_string(*scope.layer) + " out of range (" +
                std::to_string(layer_count()) + " layers)");
  }
  return {offsets_[*scope.layer], offsets_[*scope.layer + 1]};
}

void Mask::set(std::size_t i, bool live) {
  const bool was = bits_[i] != 0;
  if (was == live) return;
  bits_[i] = live ? 1 : 0;
  if (live) {
    ++live_;
  } else {
    --live_;
  }
}

std::size_t Mask::support_size(const Scope& scope) const {
  if (!scope.layer) return live_;
  const auto [b, e] = range(scope);
  return static_cast<std::size_t>(std::count(bits_.begin() + static_cast<std::ptrdiff_t>(b),
                                              bits_.begin() + static_cast<std::ptrdiff_t>(e), 1));
}

std::size_t Mask::count_support() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::vector<std::size_t> Mask::support(const Scope& scope) const {
  const auto [b, e] = range(scope);
  std::vector<std::size_t> out;
  for (std::size_t i = b; i < e; ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Mask::pruned(const Scope& scope) const {
  const auto [b, e] = range(scope);
  std::vector<std::size_t> out;
  for (std::size_t i = b; i < e; ++i) {
    if (!bits_[i]) out.push_back(i);
  }
  return out;
}

MaskedModel::MaskedModel(Network network) : net(std::move(network)), mask(Mask::for_network(net)) {}

MaskedModel::MaskedModel(Network network, Mask m) : net(std::move(network)), mask(std::move(m)) {
  const auto sizes = weight_sizes(net);
  if (mask.layer_count() != sizes.size()) {
    throw ShapeError("mask has " + std::to_string(mask.layer_count()) + " layers, network has " +
                     std::to_string(sizes.size()));
  }
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto [b, e] = mask.range(Scope::of_layer(k));
    if (e - b != sizes[k]) {
      throw ShapeError("mask covers " + std::to_string(e - b) + " weights, layer has " +
                           std::to_string(sizes[k]),
                       k);
    }
  }
}

double MaskedModel::weight(std::size_t i) const {
  const std::size_t k = owner(mask.layer_offsets(), i);
  return net.layer(k).weights[i - mask.layer_offsets()[k]];
}

double& MaskedModel::weight(std::size_t i) {
  const std::size_t k = owner(mask.layer_offsets(), i);
  return net.layer(k).weights[i - mask.layer_offsets()[k]];
}

double sparsity(const Mask& mask, const Scope& scope) {
  const auto [b, e] = mask.range(scope);
  if (e == b) return 0.0;
  return 1.0 - static_cast<double>(mask.support_size(scope)) / static_cast<double>(e - b);
}

double sparsity(const MaskedModel& m, const Scope& scope) { return sparsity(m.mask, scope); }

Network zeroed_copy(const MaskedModel& m) {
  Network copy = m.net;
  const auto bits = m.mask.bits();
  const auto& offsets = m.mask.layer_offsets();
  for (std::size_t k = 0; k < copy.depth(); ++k) {
    double* w = copy.layer(k).weights.data();
    const std::uint8_t* t = bits.data() + offsets[k];
    const std::size_t n = offsets[k + 1] - offsets[k];
    for (std::size_t i = 0; i < n; ++i) {
      if (!t[i]) w[i] = 0.0;
    }
  }
  return copy;
}

Tensor masked_forward(const MaskedModel& m, const Tensor& batch) { return forward(zeroed_copy(m), batch); }

Gradients masked_backward(const MaskedModel& m, const Tensor& batch, std::span<const int> labels) {
  return backward(zeroed_copy(m), batch, labels);
}

void masked_sgd_step(MaskedModel& m, const Gradients& grads, double lr) {
  if (grads.layers.size() != m.net.depth()) {
    throw ShapeError("gradient layer count does not match network");
  }
  const auto bits = m.mask.bits();
  const auto& offsets = m.mask.layer_offsets();
  for (std::size_t k = 0; k < m.net.depth(); ++k) {
    DenseLayer& layer = m.net.layer(k);
    const LayerGradient& g = grads.layers[k];
    if (g.weights.shape() != layer.weights.shape() || g.bias.shape() != layer.bias.shape()) {
      throw ShapeError("gradient shape does not match parameters", k);
    }
    double* w = layer.weights.data();
    const double* gw = g.weights.data();
    const std::uint8_t* t = bits.data() + offsets[k];
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
      if (t[i]) w[i] -= lr * gw[i];
    }
    double* b = layer.bias.data();
    const double* gb = g.bias.data();
    for (std::size_t i = 0; i < layer.bias.size(); ++i) b[i] -= lr * gb[i];
  }
}

void apply_mask_updates(MaskedModel& m, std::span<const std::size_t> away,
                        std::span<const std::size_t> back) {
  const std::size_t n = m.mask.size();
  std::vector<std::uint8_t> touched(n, 0);
  for (std::size_t i : away) {
    if (i >= n || !m.mask.test(i)) {
      throw Error("apply_mask_updates: drop-away index " + std::to_string(i) + " is not live");
    }
    if (touched[i]) throw Error("apply_mask_updates: duplicate index " + std::to_string(i));
    touched[i] = 1;
  }
  for (std::size_t i : back) {
    if (i >= n || m.mask.test(i)) {
      throw Error("apply_mask_updates: drop-back index " + std::to_string(i) + " is not pruned");
    }
    if (touched[i]) throw Error("apply_mask_updates: index " + std::to_string(i) + " in both sets");
    touched[i] = 1;
  }
  for (std::size_t i : away) m.mask.set(i, false);
  for (std::size_t i : back) m.mask.set(i, true);
}

}  // namespace dprune
