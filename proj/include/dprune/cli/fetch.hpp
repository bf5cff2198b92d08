#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dprune::cli {

// Inflates a gzip stream. Throws FormatError on corrupt input.
std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& compressed);

// GET over http or https, following redirects. Throws Error on failure.
std::vector<std::uint8_t> http_get(const std::string& url);

// Downloads the four MNIST archives from `mirror` (a base URL) into `dir`,
// decompressed. Files already present are kept. Returns the paths written.
std::vector<std::filesystem::path> fetch_mnist(const std::string& mirror, const std::filesystem::path& dir);

inline constexpr const char* kDefaultMnistMirror = "https://storage.googleapis.com/cvdf-datasets/mnist/";

}  // namespace dprune::cli
