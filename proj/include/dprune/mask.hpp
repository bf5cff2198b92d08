#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dprune/network.hpp"

namespace dprune {

// Where a sparsity figure or a threshold applies: the whole weight vector or one layer.
struct Scope {
  std::optional<std::size_t> layer;

  static Scope global() { return {}; }
  static Scope of_layer(std::size_t k) { return {k}; }
};

// Pruning state T over the flattened weights of a network (biases excluded).
// Bit i is 1 when weight i is live. Layer k owns the flat range
// [offsets[k], offsets[k+1]) in row-major [fan_in, fan_out] order.
class Mask {
 public:
  Mask() = default;
  // All-ones mask over layers of the given weight counts.
  explicit Mask(std::span<const std::size_t> layer_sizes);
  static Mask for_network(const Network& net);

  std::size_t size() const { return bits_.size(); }
  std::size_t layer_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  const std::vector<std::size_t>& layer_offsets() const { return offsets_; }
  std::pair<std::size_t, std::size_t> range(const Scope& scope) const;

  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool live);
  std::span<const std::uint8_t> bits() const { return bits_; }

  // |N(T)|, maintained incrementally by set().
  std::size_t support_size() const { return live_; }
  std::size_t support_size(const Scope& scope) const;
  // Recount from scratch, O(n).
  std::size_t count_support() const;

  std::vector<std::size_t> support(const Scope& scope) const;
  std::vector<std::size_t> pruned(const Scope& scope) const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
  std::vector<std::size_t> offsets_;
  std::size_t live_ = 0;
};

// A pruned model (theta, T). Stored weights of pruned entries are frozen:
// they act as zero in every forward pass and keep their value so a dropped
// back weight resumes where it left off.
struct MaskedModel {
  Network net;
  Mask mask;

  MaskedModel() = default;
  explicit MaskedModel(Network network);
  // Throws ShapeError when the mask layout does not match the network.
  MaskedModel(Network network, Mask m);

  // Stored value of flat weight i.
  double weight(std::size_t i) const;
  double& weight(std::size_t i);
};

// 1 - |support| / |total| within `scope`. Throws Error on a bad layer index.
double sparsity(const Mask& mask, const Scope& scope = Scope::global());
double sparsity(const MaskedModel& m, const Scope& scope = Scope::global());

// Copy of the network with every pruned weight replaced by 0.0.
Network zeroed_copy(const MaskedModel& m);

Tensor masked_forward(const MaskedModel& m, const Tensor& batch);
Gradients masked_backward(const MaskedModel& m, const Tensor& batch, std::span<const int> labels);

// theta <- theta - lr * g on live weights only; biases always update.
void masked_sgd_step(MaskedModel& m, const Gradients& grads, double lr);

// T_i := 0 for i in `away`, T_i := 1 for i in `back`. Requires away within the
// support, back within its complement, and the two disjoint; throws Error
// otherwise, leaving the mask untouched.
void apply_mask_updates(MaskedModel& m, std::span<const std::size_t> away,
                        std::span<const std::size_t> back);

}  // namespace dprune
