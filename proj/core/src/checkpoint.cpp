#include "batdiff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "batdiff/error.hpp"

namespace batdiff {
namespace {

constexpr char kMagic[8] = {'B', 'A', 'T', 'D', 'I', 'F', 'F', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxNameLength = 256;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError("checkpoint truncated");
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, b, 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(std::ostream& out, const DenoiserBank& bank) {
  if (bank.nets.empty()) throw ArgumentError("cannot write an empty denoiser bank");
  const DenoiserConfig& c = bank.config();
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(c.channels));
  put_u32(out, static_cast<std::uint32_t>(c.features));
  put_u32(out, static_cast<std::uint32_t>(c.blocks));
  put_u32(out, static_cast<std::uint32_t>(c.embed_dim));
  put_u32(out, static_cast<std::uint32_t>(c.levels));
  put_u32(out, static_cast<std::uint32_t>(c.timesteps));
  put_u32(out, c.padding == ConvPadding::kPeriodic ? 1u : 0u);
  put_u32(out, static_cast<std::uint32_t>(bank.nets.size()));
  for (const auto& net : bank.nets) {
    if (!(net.config == c)) throw ArgumentError("denoiser bank mixes configurations");
    put_u32(out, static_cast<std::uint32_t>(net.weights.tensor_count()));
    for (const Tensor& t : net.weights.tensors()) {
      put_u32(out, static_cast<std::uint32_t>(t.name.size()));
      out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
      put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
      for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
      for (double v : t.values) put_f64(out, v);
    }
  }
  if (!out) throw IoError("failed writing checkpoint");
}

void save_checkpoint(const DenoiserBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, bank);
}

DenoiserBank read_checkpoint(std::istream& in) {
  char magic[8];
  read_exact(in, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("not a batdiff checkpoint");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  DenoiserConfig c;
  c.channels = static_cast<int>(get_u32(in));
  c.features = static_cast<int>(get_u32(in));
  c.blocks = static_cast<int>(get_u32(in));
  c.embed_dim = static_cast<int>(get_u32(in));
  c.levels = static_cast<int>(get_u32(in));
  c.timesteps = static_cast<int>(get_u32(in));
  c.padding = get_u32(in) == 1 ? ConvPadding::kPeriodic : ConvPadding::kZero;
  c.validate();
  const std::uint32_t net_count = get_u32(in);
  if (net_count != 1 && net_count != static_cast<std::uint32_t>(c.levels) + 1) {
    throw IoError("checkpoint holds " + std::to_string(net_count) + " networks for " +
                  std::to_string(c.levels) + " levels");
  }
  DenoiserBank bank;
  for (std::uint32_t n = 0; n < net_count; ++n) {
    DenoiserParams net = DenoiserParams::zeros(c);
    const std::uint32_t tensor_count = get_u32(in);
    if (tensor_count != net.weights.tensor_count()) {
      throw IoError("checkpoint tensor count does not match its header");
    }
    for (Tensor& t : net.weights.tensors()) {
      const std::uint32_t name_len = get_u32(in);
      if (name_len > kMaxNameLength) throw IoError("corrupt tensor name length");
      std::string name(name_len, '\0');
      read_exact(in, name.data(), name_len);
      const std::uint32_t rank = get_u32(in);
      std::vector<int> shape(rank);
      for (auto& d : shape) d = static_cast<int>(get_u32(in));
      if (name != t.name || shape != t.shape) {
        throw IoError("unexpected tensor '" + name + "' (expected '" + t.name + "')");
      }
      for (double& v : t.values) v = get_f64(in);
    }
    bank.nets.push_back(std::move(net));
  }
  return bank;
}

DenoiserBank load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace batdiff
