#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dprune/dataset.hpp"
#include "dprune/tensor.hpp"

namespace dprune {

class Rng;

// Softmax is only legal on the last layer, where it is fused with the
// cross-entropy loss: forward() returns probabilities, backward() works on
// the pre-softmax logits.
enum class Activation : std::uint8_t { ReLU = 0, Identity = 1, Softmax = 2 };

struct DenseLayer {
  Tensor weights;  // [fan_in, fan_out]
  Tensor bias;     // [fan_out]
  Activation activation = Activation::Identity;

  std::size_t fan_in() const { return weights.dim(0); }
  std::size_t fan_out() const { return weights.dim(1); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Stack of dense layers trained with mean softmax cross-entropy.
class Network {
 public:
  Network() = default;
  // Throws ShapeError when shapes do not chain or Softmax is not last.
  explicit Network(std::vector<DenseLayer> layers);

  // Multilayer perceptron over `sizes` (e.g. {784, 300, 100, 10}): ReLU hidden
  // layers, softmax output. Weights uniform in +-sqrt(6 / (fan_in + fan_out)),
  // biases zero.
  static Network mlp(std::span<const std::size_t> sizes, Rng& rng);

  std::span<DenseLayer> layers() { return layers_; }
  std::span<const DenseLayer> layers() const { return layers_; }
  DenseLayer& layer(std::size_t k) { return layers_.at(k); }
  const DenseLayer& layer(std::size_t k) const { return layers_.at(k); }
  std::size_t depth() const { return layers_.size(); }

  std::size_t input_dim() const { return layers_.front().fan_in(); }
  std::size_t output_dim() const { return layers_.back().fan_out(); }
  std::size_t weight_count() const;
  std::size_t parameter_count() const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

struct LayerGradient {
  Tensor weights;
  Tensor bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  double loss = 0.0;  // mean cross-entropy of the batch
};

// Class scores for a [B, input_dim] batch (probabilities when the last layer
// is Softmax). Throws ShapeError naming the layer on width mismatch.
Tensor forward(const Network& net, const Tensor& batch);

// Gradients of the batch-mean cross-entropy w.r.t. every weight and bias.
// Throws Error when a label lies outside [0, output_dim).
Gradients backward(const Network& net, const Tensor& batch, std::span<const int> labels);

// p <- p - lr * g for every parameter.
void sgd_step(Network& net, const Gradients& grads, double lr);

struct Evaluation {
  double test_error = 0.0;  // misclassified / total, argmax decision, ties to lowest class
  double mean_loss = 0.0;
};

// Throws Error on an empty dataset.
Evaluation evaluate(const Network& net, const Dataset& data);

// Step-decay learning-rate policy keyed on the (fractional) epoch counter.
struct LrSchedule {
  double initial = 0.1;
  double decay = 0.1;
  std::vector<double> milestones{10.0, 15.0};

  double at(double epoch) const;
};

struct TrainConfig {
  LrSchedule lr;
  std::size_t batch_size = 100;
  std::size_t epochs = 18;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double test_error = 0.0;
};

// Plain minibatch SGD with per-epoch reshuffling from `cfg.seed`.
// `test` may be empty, in which case test_error is reported as NaN.
// Throws Error if the loss becomes non-finite.
std::vector<EpochRecord> train(Network& net, const Dataset& train_set, const Dataset& test,
                               const TrainConfig& cfg);

}  // namespace dprune
