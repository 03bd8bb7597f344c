#include "uavtl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "uavtl/error.hpp"

namespace uavtl::agent {

namespace {

constexpr char kMagic[8] = {'U', 'A', 'V', 'T', 'L', 'C', 'K', 'P'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) fail(ErrorKind::load, "checkpoint is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

std::string shape_text(int in, int out) { return std::to_string(out) + "x" + std::to_string(in); }

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const DuelingNetwork& net) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.architecture().input_dim));
  put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const LayerShape& l : net.layers()) {
    out.push_back(static_cast<std::uint8_t>(l.stream));
    put_u32(out, static_cast<std::uint32_t>(l.in));
    put_u32(out, static_cast<std::uint32_t>(l.out));
  }
  put_u64(out, net.parameter_count());
  for (double p : net.parameters()) put_u64(out, std::bit_cast<std::uint64_t>(p));
  return out;
}

DuelingNetwork decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    fail(ErrorKind::load, "not a checkpoint file (bad magic)");
  Reader r(bytes);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    fail(ErrorKind::load, "unsupported checkpoint version " + std::to_string(version));

  Architecture arch;
  arch.input_dim = static_cast<int>(r.u32());
  arch.trunk.clear();
  arch.value_hidden.clear();
  arch.advantage_hidden.clear();
  const std::uint32_t count = r.u32();
  struct Entry {
    int stream, in, out;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e{r.u8(), 0, 0};
    e.in = static_cast<int>(r.u32());
    e.out = static_cast<int>(r.u32());
    if (e.stream > 2) fail(ErrorKind::load, "checkpoint layer " + std::to_string(i) + " has an unknown stream");
    entries.push_back(e);
  }
  // The last layer of each head is the output layer; the rest are hidden widths.
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    const bool last_of_stream = i + 1 == entries.size() || entries[i + 1].stream != e.stream;
    if (e.stream == 0) arch.trunk.push_back(e.out);
    if (e.stream == 1 && !last_of_stream) arch.value_hidden.push_back(e.out);
    if (e.stream == 2 && !last_of_stream) arch.advantage_hidden.push_back(e.out);
  }
  DuelingNetwork net(arch);
  if (net.layers().size() != entries.size()) fail(ErrorKind::load, "checkpoint layer list is inconsistent");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const LayerShape& l = net.layers()[i];
    if (static_cast<int>(l.stream) != entries[i].stream || l.in != entries[i].in || l.out != entries[i].out)
      fail(ErrorKind::load, "checkpoint layer " + l.name() + " is inconsistent with its neighbours");
  }
  const std::uint64_t n = r.u64();
  if (n != net.parameter_count()) fail(ErrorKind::load, "checkpoint parameter count does not match its layers");
  auto params = net.parameters();
  for (std::uint64_t i = 0; i < n; ++i) params[i] = std::bit_cast<double>(r.u64());
  if (!r.at_end()) fail(ErrorKind::load, "checkpoint has trailing bytes");
  return net;
}

void save_checkpoint(const DuelingNetwork& net, const std::string& path) {
  const auto bytes = encode_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::config, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::config, "write to '" + path + "' failed");
}

DuelingNetwork load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void require_architecture(const DuelingNetwork& net, const Architecture& expected) {
  const DuelingNetwork reference(expected);
  const auto& got = net.layers();
  const auto& want = reference.layers();
  for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
    if (got[i].stream != want[i].stream) {
      fail(ErrorKind::load, "architecture mismatch at layer " + want[i].name() + ": checkpoint has " +
                                got[i].name() + " there");
    }
    if (got[i].in != want[i].in || got[i].out != want[i].out) {
      fail(ErrorKind::load, "architecture mismatch at layer " + want[i].name() + ": checkpoint " +
                                shape_text(got[i].in, got[i].out) + ", configured " +
                                shape_text(want[i].in, want[i].out));
    }
  }
  if (got.size() != want.size()) {
    const auto& extra = got.size() > want.size() ? got[want.size()] : want[got.size()];
    fail(ErrorKind::load, "architecture mismatch at layer " + extra.name() + ": checkpoint has " +
                              std::to_string(got.size()) + " layers, configured " +
                              std::to_string(want.size()));
  }
}

}  // namespace uavtl::agent
