#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "dprune/cli/fetch.hpp"

#include <zlib.h>

#include <fstream>

#include "dprune/dataset.hpp"
#include "dprune/error.hpp"
#include "httplib.h"

namespace dprune::cli {

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& compressed) {
  z_stream zs{};
  // 16 + MAX_WBITS selects the gzip wrapper.
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error("zlib init failed");
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = static_cast<uInt>(compressed.size());
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof chunk;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError(FormatError::Kind::BadValue, "corrupt gzip stream");
    }
    out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw FormatError(FormatError::Kind::Truncated, "gzip stream ends early");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> http_get(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("url without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  auto res = client.Get(path);
  if (!res) throw Error("GET " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error("GET " + url + " returned HTTP " + std::to_string(res->status));
  return {res->body.begin(), res->body.end()};
}

std::vector<std::filesystem::path> fetch_mnist(const std::string& mirror, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const MnistFiles files = mnist_files(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& target : {files.train_images, files.train_labels, files.test_images, files.test_labels}) {
    if (std::filesystem::exists(target)) continue;
    std::string base = mirror;
    if (!base.empty() && base.back() != '/') base += '/';
    const auto raw = gunzip(http_get(base + target.filename().string() + ".gz"));
    const auto tmp = std::filesystem::path(target.string() + ".part");
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
      if (!out) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
    written.push_back(target);
  }
  return written;
}

}  // namespace dprune::cli
