#include "dprune/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "dprune/error.hpp"
#include "dprune/sampler.hpp"

namespace dprune {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

void Dataset::gather(std::span<const std::size_t> rows, Tensor& batch,
                     std::vector<int>& batch_labels) const {
  const std::size_t d = dim();
  if (batch.rank() != 2 || batch.dim(0) != rows.size() || batch.dim(1) != d) {
    batch = Tensor({rows.size(), d});
  }
  batch_labels.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::memcpy(batch.data() + r * d, inputs.data() + rows[r] * d, d * sizeof(double));
    batch_labels[r] = labels[rows[r]];
  }
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);

  if (read_be32(img, 0, images) != kImageMagic) {
    throw FormatError(FormatError::Kind::BadMagic, images.string() + ": not an IDX image file");
  }
  if (read_be32(lab, 0, labels) != kLabelMagic) {
    throw FormatError(FormatError::Kind::BadMagic, labels.string() + ": not an IDX label file");
  }
  const std::size_t n = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t n_labels = read_be32(lab, 4, labels);
  if (n != n_labels) {
    throw FormatError(FormatError::Kind::CountMismatch,
                      "image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));
  }
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n * d) {
    throw FormatError(FormatError::Kind::Truncated, images.string() + ": truncated pixel data");
  }
  if (lab.size() < 8 + n) {
    throw FormatError(FormatError::Kind::Truncated, labels.string() + ": truncated label data");
  }

  Dataset ds;
  ds.split = split;
  ds.inputs = Tensor({n, d});
  double* px = ds.inputs.data();
  for (std::size_t i = 0; i < n * d; ++i) {
    px[i] = static_cast<double>(img[16 + i]) / 255.0;
  }
  ds.labels.resize(n);
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max<std::size_t>(10, static_cast<std::size_t>(max_label + 1));
  return ds;
}

MnistFiles mnist_files(const std::filesystem::path& dir) {
  return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
          dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
}

Dataset synth_blobs(std::uint64_t seed, std::size_t classes, std::size_t per_class, std::size_t dim,
                    double spread) {
  if (classes == 0 || per_class == 0 || dim == 0) {
    throw ConfigError("synth_blobs: classes, per_class and dim must be positive");
  }
  if (!(spread >= 0.0)) {
    throw ConfigError("synth_blobs: spread must be nonnegative");
  }
  Rng rng(seed);
  std::vector<double> centers(classes * dim);
  for (double& c : centers) {
    c = rng.uniform();
  }

  Dataset ds;
  ds.num_classes = classes;
  ds.inputs = Tensor({classes * per_class, dim});
  ds.labels.resize(classes * per_class);
  std::size_t row = 0;
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      ds.labels[row] = static_cast<int>(k);
      for (std::size_t j = 0; j < dim; ++j) {
        const double noise = spread > 0.0 ? spread * rng.normal() : 0.0;
        ds.inputs.at(row, j) = std::clamp(centers[k * dim + j] + noise, 0.0, 1.0);
      }
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split_every(const Dataset& all, std::size_t stride) {
  if (stride < 2) {
    throw ConfigError("split_every: stride must be at least 2");
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (i % stride == stride - 1 ? test_rows : train_rows).push_back(i);
  }
  Dataset train, test;
  all.gather(train_rows, train.inputs, train.labels);
  all.gather(test_rows, test.inputs, test.labels);
  train.num_classes = test.num_classes = all.num_classes;
  train.split = Split::Train;
  test.split = Split::Test;
  return {std::move(train), std::move(test)};
}

BatchStream::BatchStream(const Dataset& data, std::size_t batch_size, Rng& rng)
    : data_(&data), batch_size_(batch_size), rng_(&rng), order_(data.size()) {
  if (data.empty()) {
    throw Error("BatchStream: empty dataset");
  }
  if (batch_size == 0) {
    throw ConfigError("batch_size must be positive");
  }
  reshuffle();
}

void BatchStream::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  rng_->shuffle(std::span<std::size_t>(order_));
  cursor_ = 0;
}

void BatchStream::next(Tensor& batch, std::vector<int>& labels) {
  if (cursor_ >= order_.size()) {
    reshuffle();
  }
  const std::size_t take = std::min(batch_size_, order_.size() - cursor_);
  data_->gather(std::span<const std::size_t>(order_).subspan(cursor_, take), batch, labels);
  cursor_ += take;
  ++batches_done_;
}

std::size_t BatchStream::batches_per_epoch() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

double BatchStream::epoch_position() const {
  return static_cast<double>(batches_done_) / static_cast<double>(batches_per_epoch());
}

}  // namespace dprune
