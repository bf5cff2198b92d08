#include "dprune/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dprune/error.hpp"

namespace dprune {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'R', 'N'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(FormatError::Kind::Truncated, "checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= std::uint32_t{bytes_[pos_++]} << s;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int s = 0; s < 64; s += 8) v |= std::uint64_t{bytes_[pos_++]} << s;
    return std::bit_cast<double>(v);
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const MaskedModel& m) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(m.net.depth()));
  for (const auto& l : m.net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(l.fan_in()));
    put_u32(out, static_cast<std::uint32_t>(l.fan_out()));
    put_u32(out, static_cast<std::uint32_t>(l.activation));
  }
  for (const auto& l : m.net.layers()) {
    for (double w : l.weights.values()) put_f64(out, w);
    for (double b : l.bias.values()) put_f64(out, b);
  }
  const auto bits = m.mask.bits();
  std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.insert(out.end(), packed.begin(), packed.end());
  return out;
}

MaskedModel decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::BadMagic, "not a DPRN checkpoint");
  }
  Reader in(bytes);
  for (int i = 0; i < 4; ++i) in.u8();
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatError::Kind::BadValue, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t depth = in.u32();
  std::vector<DenseLayer> layers(depth);
  for (auto& l : layers) {
    const std::size_t fan_in = in.u32();
    const std::size_t fan_out = in.u32();
    const std::uint32_t act = in.u32();
    if (act > 2) {
      throw FormatError(FormatError::Kind::BadValue, "unknown activation code " + std::to_string(act));
    }
    // Reject sizes the remaining bytes cannot possibly hold before allocating.
    if (fan_in * fan_out > in.remaining()) {
      throw FormatError(FormatError::Kind::Truncated, "checkpoint truncated (layer dims exceed file)");
    }
    l.weights = Tensor({fan_in, fan_out});
    l.bias = Tensor({fan_out});
    l.activation = static_cast<Activation>(act);
  }
  for (auto& l : layers) {
    for (double& w : l.weights.values()) w = in.f64();
    for (double& b : l.bias.values()) b = in.f64();
  }
  Network net(std::move(layers));
  Mask mask = Mask::for_network(net);
  const std::size_t nbits = mask.size();
  std::vector<std::uint8_t> packed((nbits + 7) / 8);
  for (auto& byte : packed) byte = in.u8();
  for (std::size_t i = 0; i < nbits; ++i) {
    mask.set(i, (packed[i / 8] >> (i % 8)) & 1u);
  }
  if (in.remaining() != 0) {
    throw FormatError(FormatError::Kind::CountMismatch, "trailing bytes after checkpoint");
  }
  return MaskedModel(std::move(net), std::move(mask));
}

void save_checkpoint(const std::filesystem::path& path, const MaskedModel& m) {
  const auto bytes = encode_checkpoint(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

MaskedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace dprune
