#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dprune {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between a tensor and what an operation expects.
// `layer` names the offending layer when the mismatch is inside a network.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what, std::optional<std::size_t> layer = std::nullopt)
      : Error(layer ? "layer " + std::to_string(*layer) + ": " + what : what), layer_(layer) {}

  std::optional<std::size_t> layer() const { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

// Malformed on-disk data (IDX files, checkpoints, graph files).
class FormatError : public Error {
 public:
  enum class Kind { BadMagic, Truncated, CountMismatch, BadValue };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Invalid user configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dprune
