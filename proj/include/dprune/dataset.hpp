#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dprune/tensor.hpp"

namespace dprune {

class Rng;

enum class Split { Train, Test };

// Labelled examples. inputs has shape [N, D] with values in [0, 1];
// labels has length N with values in [0, num_classes).
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  Split split = Split::Train;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.rank() == 2 ? inputs.dim(1) : 0; }
  bool empty() const { return labels.empty(); }

  // Copies the listed rows into a contiguous batch.
  void gather(std::span<const std::size_t> rows, Tensor& batch, std::vector<int>& batch_labels) const;
};

// Parses a big-endian IDX image file (magic 0x00000803, [N, rows, cols]) and
// its label file (magic 0x00000801, [N]). Pixels are scaled by 1/255.
// Throws FormatError on bad magic, truncation, or an N mismatch.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split = Split::Train);

// The four standard MNIST file names under `dir`.
struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};
MnistFiles mnist_files(const std::filesystem::path& dir);

// Gaussian blobs around seeded random centers in [0,1]^dim, clamped to [0,1].
// Samples are ordered class by class. Throws ConfigError on non-positive sizes.
Dataset synth_blobs(std::uint64_t seed, std::size_t classes, std::size_t per_class, std::size_t dim,
                    double spread);

// Deterministic holdout: every `stride`-th example goes to the test split.
std::pair<Dataset, Dataset> split_every(const Dataset& all, std::size_t stride);

// Epoch-based minibatch iterator. Reshuffles the row order with `rng` at the
// start of every epoch; the last batch of an epoch may be short.
class BatchStream {
 public:
  BatchStream(const Dataset& data, std::size_t batch_size, Rng& rng);

  // Fills the next batch; epochs roll over automatically.
  void next(Tensor& batch, std::vector<int>& labels);

  std::size_t batches_per_epoch() const;
  std::size_t batches_done() const { return batches_done_; }
  // Fractional epoch counter (batches_done / batches_per_epoch).
  double epoch_position() const;

 private:
  void reshuffle();

  const Dataset* data_;
  std::size_t batch_size_;
  Rng* rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t batches_done_ = 0;
};

}  // namespace dprune
