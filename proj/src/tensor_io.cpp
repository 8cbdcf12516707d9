#include "intp/tensor_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "intp/error.hpp"

namespace intp::io {

namespace {

constexpr std::array<char, 4> kMagic = {'I', 'T', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v), 4); }
  void bytes(std::span<const std::uint8_t> b) {
    out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  }
  void magic() { out_.write(kMagic.data(), kMagic.size()); }
  void check() {
    if (!out_) fail(ErrorKind::kIo, "failed writing tensor file");
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    std::vector<std::uint8_t> b(n);
    in_.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) truncated();
    return b;
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      fail(ErrorKind::kFormat, "trailing bytes after tensor payload");
    }
  }

 private:
  [[noreturn]] static void truncated() { fail(ErrorKind::kFormat, "tensor file is truncated"); }
  std::uint64_t le(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) truncated();
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(c)) << (8 * i);
    }
    return v;
  }
  std::istream& in_;
};

void write_header(Writer& w, DType dtype, std::span<const std::size_t> shape) {
  require(!shape.empty() && shape.size() <= 255, "tensor rank must be in [1, 255]");
  w.magic();
  w.u16(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) {
    require(d <= std::numeric_limits<std::uint32_t>::max(), "tensor dimension exceeds u32");
    w.u32(static_cast<std::uint32_t>(d));
  }
}

constexpr std::size_t kMaxElements = std::size_t{1} << 34;

}  // namespace

std::vector<std::uint8_t> pack_codes(std::span<const std::int32_t> codes, int bits,
                                     std::int32_t p_min) {
  std::vector<std::uint8_t> out(kv_quant::packed_code_bytes(codes.size(), bits), 0);
  const std::uint32_t mask = bits >= 32 ? 0xffffffffu : ((1u << bits) - 1u);
  std::size_t bit = 0;
  for (std::int32_t code : codes) {
    const std::uint32_t v = static_cast<std::uint32_t>(code - p_min);
    require((v & ~mask) == 0, "code " + std::to_string(code) + " does not fit in " +
                                  std::to_string(bits) + " bits");
    for (int b = 0; b < bits; ++b, ++bit) {
      if ((v >> b) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  }
  return out;
}

std::vector<std::int32_t> unpack_codes(std::span<const std::uint8_t> bytes, std::size_t count,
                                       int bits, std::int32_t p_min) {
  require(bytes.size() >= kv_quant::packed_code_bytes(count, bits), "packed payload too short");
  std::vector<std::int32_t> codes(count);
  std::size_t bit = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b, ++bit) {
      v |= static_cast<std::uint32_t>((bytes[bit / 8] >> (bit % 8)) & 1u) << b;
    }
    codes[i] = static_cast<std::int32_t>(v) + p_min;
  }
  return codes;
}

void write_tensor(std::ostream& out, const Tensor& tensor) {
  require(Tensor::element_count(tensor.shape) == tensor.size(), "tensor shape/data mismatch");
  Writer w(out);
  write_header(w, DType::kF32, tensor.shape);
  for (float v : tensor.data) w.f32(v);
  w.check();
}

void write_quantized(std::ostream& out, const kv_quant::QuantizedCacheLayer& layer) {
  layer.scheme.validate();
  require(Tensor::element_count(layer.original_shape) == layer.codes.size(),
          "quantized layer shape/code mismatch");
  require(layer.params.scale.size() == layer.params.zero_point.size(), "malformed params");
  Writer w(out);
  write_header(w, DType::kPackedCodes, layer.original_shape);
  w.u8(static_cast<std::uint8_t>(layer.scheme.bits));
  w.u8(static_cast<std::uint8_t>(layer.scheme.axis));
  w.u32(static_cast<std::uint32_t>(layer.scheme.group_size));
  w.u32(static_cast<std::uint32_t>(layer.params.groups()));
  for (std::size_t g = 0; g < layer.params.groups(); ++g) {
    w.f32(layer.params.scale[g]);
    w.i32(layer.params.zero_point[g]);
  }
  w.bytes(pack_codes(layer.codes, layer.scheme.bits, layer.scheme.p_min()));
  w.check();
}

TensorFile read_file(std::istream& in) {
  Reader r(in);
  std::array<char, 4> magic{};
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (magic != kMagic) fail(ErrorKind::kFormat, "bad magic: not an ITPT tensor file");
  const std::uint16_t version = r.u16();
  if (version != kFormatVersion) {
    fail(ErrorKind::kFormat, "unsupported tensor file version " + std::to_string(version));
  }
  const std::uint8_t dtype = r.u8();
  const std::uint8_t rank = r.u8();
  if (rank == 0) fail(ErrorKind::kFormat, "tensor rank must be at least 1");
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (auto& d : shape) {
    d = r.u32();
    count *= d;
    if (count > kMaxElements) fail(ErrorKind::kFormat, "tensor too large");
  }

  if (dtype == static_cast<std::uint8_t>(DType::kF32)) {
    Tensor t(shape);
    for (float& v : t.data) v = r.f32();
    r.expect_end();
    return t;
  }
  if (dtype != static_cast<std::uint8_t>(DType::kPackedCodes)) {
    fail(ErrorKind::kFormat, "unknown dtype code " + std::to_string(dtype));
  }
  kv_quant::QuantizedCacheLayer layer;
  layer.original_shape = shape;
  layer.scheme.bits = r.u8();
  const std::uint8_t axis = r.u8();
  if (axis > 1) fail(ErrorKind::kFormat, "unknown quantization axis code " + std::to_string(axis));
  layer.scheme.axis = static_cast<kv_quant::QuantAxis>(axis);
  const std::uint32_t group_size = r.u32();
  if (group_size > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    fail(ErrorKind::kFormat, "group_size out of range");
  }
  layer.scheme.group_size = static_cast<int>(group_size);
  try {
    layer.scheme.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kFormat, e.what());
  }
  const std::uint32_t groups = r.u32();
  const std::size_t channels = shape.back();
  if (channels == 0 || groups != layer.scheme.group_count(count / channels, channels)) {
    fail(ErrorKind::kFormat, "group table size does not match shape and scheme");
  }
  layer.params.scale.resize(groups);
  layer.params.zero_point.resize(groups);
  for (std::uint32_t g = 0; g < groups; ++g) {
    layer.params.scale[g] = r.f32();
    layer.params.zero_point[g] = r.i32();
    if (!(layer.params.scale[g] > 0.0f) || !std::isfinite(layer.params.scale[g])) {
      fail(ErrorKind::kFormat, "non-positive scale in group table");
    }
  }
  const auto payload = r.bytes(kv_quant::packed_code_bytes(count, layer.scheme.bits));
  r.expect_end();
  layer.codes = unpack_codes(payload, count, layer.scheme.bits, layer.scheme.p_min());
  return layer;
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  write_tensor(out, tensor);
}

void save_quantized(const std::filesystem::path& path, const kv_quant::QuantizedCacheLayer& layer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  write_quantized(out, layer);
}

TensorFile load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return read_file(in);
}

Tensor load_tensor(const std::filesystem::path& path) {
  auto file = load_file(path);
  if (auto* t = std::get_if<Tensor>(&file)) return std::move(*t);
  fail(ErrorKind::kFormat, path.string() + " holds packed codes, expected f32");
}

kv_quant::QuantizedCacheLayer load_quantized(const std::filesystem::path& path) {
  auto file = load_file(path);
  if (auto* q = std::get_if<kv_quant::QuantizedCacheLayer>(&file)) return std::move(*q);
  fail(ErrorKind::kFormat, path.string() + " holds f32 data, expected packed codes");
}

Tensor to_tensor(const rearrange::TokenGrid& grid) {
  const auto d = grid.data();
  return Tensor({static_cast<std::size_t>(grid.frames()),
                 static_cast<std::size_t>(grid.tokens_per_frame()),
                 static_cast<std::size_t>(grid.dim())},
                std::vector<float>(d.begin(), d.end()));
}

rearrange::TokenGrid to_grid(const Tensor& tensor) {
  if (tensor.shape.size() != 3) {
    fail(ErrorKind::kFormat, "token grid must be rank 3 [frames x tokens x dim], got rank " +
                                 std::to_string(tensor.shape.size()));
  }
  for (std::size_t d : tensor.shape) {
    if (d == 0 || d > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
      fail(ErrorKind::kFormat, "token grid dimension out of range");
    }
  }
  return rearrange::TokenGrid(static_cast<int>(tensor.shape[0]), static_cast<int>(tensor.shape[1]),
                              static_cast<int>(tensor.shape[2]), tensor.data);
}

}  // namespace intp::io
