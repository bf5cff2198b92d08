#include "dprune/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dprune/error.hpp"
#include "dprune/sampler.hpp"

namespace dprune {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

ConstMatMap as_matrix(const Tensor& t) {
  return ConstMatMap(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

// Pre-activations and activations of every layer for one batch.
struct Trace {
  std::vector<RowMat> pre;
  std::vector<RowMat> post;
};

void check_batch(const Network& net, const Tensor& batch) {
  if (net.depth() == 0) {
    throw ShapeError("network has no layers");
  }
  if (batch.rank() != 2) {
    throw ShapeError("batch must be a [B, D] matrix", 0);
  }
  if (batch.dim(1) != net.input_dim()) {
    throw ShapeError("batch width " + std::to_string(batch.dim(1)) + " != fan_in " +
                         std::to_string(net.input_dim()),
                     0);
  }
}

void softmax_rows(RowMat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double top = row.maxCoeff();
    row = (row.array() - top).exp().matrix();
    row /= row.sum();
  }
}

// Runs the network; the last layer's `post` holds logits (softmax not applied).
Trace run(const Network& net, const Tensor& batch) {
  check_batch(net, batch);
  Trace trace;
  trace.pre.resize(net.depth());
  trace.post.resize(net.depth());
  const auto layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const DenseLayer& layer = layers[k];
    const ConstVecMap bias(layer.bias.data(), static_cast<Eigen::Index>(layer.fan_out()));
    RowMat& z = trace.pre[k];
    if (k == 0) {
      z.noalias() = as_matrix(batch) * as_matrix(layer.weights);
    } else {
      z.noalias() = trace.post[k - 1] * as_matrix(layer.weights);
    }
    z.rowwise() += bias;
    if (layer.activation == Activation::ReLU) {
      trace.post[k] = z.cwiseMax(0.0);
    } else {
      trace.post[k] = z;
    }
  }
  return trace;
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " != batch rows " +
                     std::to_string(rows));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw Error("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

double row_cross_entropy(const RowMat& logits, Eigen::Index r, int label) {
  const auto row = logits.row(r);
  const double top = row.maxCoeff();
  const double lse = top + std::log((row.array() - top).exp().sum());
  return lse - row(label);
}

}  // namespace

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& l = layers_[k];
    if (l.weights.rank() != 2 || l.weights.dim(0) == 0 || l.weights.dim(1) == 0) {
      throw ShapeError("weights must be a nonempty [fan_in, fan_out] matrix", k);
    }
    if (l.bias.rank() != 1 || l.bias.dim(0) != l.fan_out()) {
      throw ShapeError("bias length must equal fan_out " + std::to_string(l.fan_out()), k);
    }
    if (k > 0 && layers_[k - 1].fan_out() != l.fan_in()) {
      throw ShapeError("fan_in " + std::to_string(l.fan_in()) + " != previous fan_out " +
                           std::to_string(layers_[k - 1].fan_out()),
                       k);
    }
    if (l.activation == Activation::Softmax && k + 1 != layers_.size()) {
      throw ShapeError("softmax is only allowed on the last layer", k);
    }
  }
}

Network Network::mlp(std::span<const std::size_t> sizes, Rng& rng) {
  if (sizes.size() < 2) {
    throw ShapeError("an MLP needs at least input and output sizes");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::size_t fan_in = sizes[k];
    const std::size_t fan_out = sizes[k + 1];
    DenseLayer layer;
    layer.weights = Tensor({fan_in, fan_out});
    layer.bias = Tensor({fan_out});
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : layer.weights.values()) {
      w = rng.uniform(-limit, limit);
    }
    layer.activation = k + 2 == sizes.size() ? Activation::Softmax : Activation::ReLU;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

std::size_t Network::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size();
  return n;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

Tensor forward(const Network& net, const Tensor& batch) {
  Trace trace = run(net, batch);
  RowMat& out = trace.post.back();
  if (net.layers().back().activation == Activation::Softmax) {
    softmax_rows(out);
  }
  Tensor result({static_cast<std::size_t>(out.rows()), static_cast<std::size_t>(out.cols())});
  MatMap(result.data(), out.rows(), out.cols()) = out;
  return result;
}

Gradients backward(const Network& net, const Tensor& batch, std::span<const int> labels) {
  Trace trace = run(net, batch);
  const auto rows = static_cast<Eigen::Index>(batch.dim(0));
  check_labels(labels, batch.dim(0), net.output_dim());
  if (rows == 0) {
    throw Error("backward: empty batch");
  }

  Gradients grads;
  grads.layers.resize(net.depth());
  RowMat& logits = trace.post.back();
  double loss = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    loss += row_cross_entropy(logits, r, labels[static_cast<std::size_t>(r)]);
  }
  grads.loss = loss / static_cast<double>(rows);

  // d(mean CE)/d(logits) = (softmax - onehot) / B
  RowMat delta = logits;
  softmax_rows(delta);
  for (Eigen::Index r = 0; r < rows; ++r) {
    delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  }
  delta /= static_cast<double>(rows);

  for (std::size_t k = net.depth(); k-- > 0;) {
    const DenseLayer& layer = net.layer(k);
    LayerGradient& g = grads.layers[k];
    g.weights = Tensor({layer.fan_in(), layer.fan_out()});
    g.bias = Tensor({layer.fan_out()});
    MatMap gw(g.weights.data(), static_cast<Eigen::Index>(layer.fan_in()),
              static_cast<Eigen::Index>(layer.fan_out()));
    if (k == 0) {
      gw.noalias() = as_matrix(batch).transpose() * delta;
    } else {
      gw.noalias() = trace.post[k - 1].transpose() * delta;
    }
    VecMap(g.bias.data(), static_cast<Eigen::Index>(layer.fan_out())) = delta.colwise().sum();

    if (k > 0) {
      RowMat upstream = delta * as_matrix(layer.weights).transpose();
      if (net.layer(k - 1).activation == Activation::ReLU) {
        upstream.array() *= (trace.pre[k - 1].array() > 0.0).cast<double>();
      }
      delta = std::move(upstream);
    }
  }
  return grads;
}

void sgd_step(Network& net, const Gradients& grads, double lr) {
  if (grads.layers.size() != net.depth()) {
    throw ShapeError("gradient layer count does not match network");
  }
  for (std::size_t k = 0; k < net.depth(); ++k) {
    DenseLayer& layer = net.layer(k);
    const LayerGradient& g = grads.layers[k];
    if (g.weights.shape() != layer.weights.shape() || g.bias.shape() != layer.bias.shape()) {
      throw ShapeError("gradient shape does not match parameters", k);
    }
    double* w = layer.weights.data();
    const double* gw = g.weights.data();
    for (std::size_t i = 0; i < layer.weights.size(); ++i) w[i] -= lr * gw[i];
    double* b = layer.bias.data();
    const double* gb = g.bias.data();
    for (std::size_t i = 0; i < layer.bias.size(); ++i) b[i] -= lr * gb[i];
  }
}

Evaluation evaluate(const Network& net, const Dataset& data) {
  if (data.empty()) {
    throw Error("evaluate: empty dataset");
  }
  constexpr std::size_t kChunk = 1000;
  std::size_t wrong = 0;
  double loss = 0.0;
  Tensor batch;
  std::vector<int> labels;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t end = std::min(data.size(), start + kChunk);
    rows.resize(end - start);
    for (std::size_t i = start; i < end; ++i) rows[i - start] = i;
    data.gather(rows, batch, labels);
    const Trace trace = run(net, batch);
    const RowMat& logits = trace.post.back();
    check_labels(labels, rows.size(), net.output_dim());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index best = 0;
      logits.row(r).maxCoeff(&best);
      if (best != labels[static_cast<std::size_t>(r)]) ++wrong;
      loss += row_cross_entropy(logits, r, labels[static_cast<std::size_t>(r)]);
    }
  }
  return {static_cast<double>(wrong) / static_cast<double>(data.size()),
          loss / static_cast<double>(data.size())};
}

double LrSchedule::at(double epoch) const {
  double lr = initial;
  for (double m : milestones) {
    if (epoch >= m) lr *= decay;
  }
  return lr;
}

void TrainConfig::validate() const {
  if (!(lr.initial > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lr.decay > 0.0)) throw ConfigError("learning-rate decay factor must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
}

std::vector<EpochRecord> train(Network& net, const Dataset& train_set, const Dataset& test,
                               const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  BatchStream stream(train_set, cfg.batch_size, rng);
  Tensor batch;
  std::vector<int> labels;
  std::vector<EpochRecord> log;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr.at(static_cast<double>(epoch));
    double loss_sum = 0.0;
    const std::size_t batches = stream.batches_per_epoch();
    for (std::size_t b = 0; b < batches; ++b) {
      stream.next(batch, labels);
      const Gradients grads = backward(net, batch, labels);
      if (!std::isfinite(grads.loss)) {
        throw Error("non-finite training loss at epoch " + std::to_string(epoch));
      }
      loss_sum += grads.loss;
      sgd_step(net, grads, lr);
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.learning_rate = lr;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.test_error = test.empty() ? std::numeric_limits<double>::quiet_NaN() : evaluate(net, test).test_error;
    log.push_back(rec);
  }
  return log;
}

}  // namespace dprune
