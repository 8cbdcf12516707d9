#pragma once

// ITPT tensor files (all multi-byte fields little-endian):
//
//   "ITPT"  u16 version(=1)  u8 dtype  u8 rank  u32 dims[rank]
//   dtype 0 (f32):          f32 payload[prod(dims)]
//   dtype 1 (packed codes): u8 bits  u8 axis  u32 group_size  u32 n_groups
//                           {f32 scale, i32 zero_point}[n_groups]
//                           u8 payload[ceil(prod(dims) * bits / 8)]
//
// Packed codes are stored as unsigned offsets (code - p_min), LSB-first: the
// lowest-indexed element occupies the least-significant bits of a byte.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "intp/kv_quant.hpp"
#include "intp/rearrange.hpp"
#include "intp/tensor.hpp"

namespace intp::io {

inline constexpr std::uint16_t kFormatVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kPackedCodes = 1 };

using TensorFile = std::variant<Tensor, kv_quant::QuantizedCacheLayer>;

std::vector<std::uint8_t> pack_codes(std::span<const std::int32_t> codes, int bits,
                                     std::int32_t p_min);
std::vector<std::int32_t> unpack_codes(std::span<const std::uint8_t> bytes, std::size_t count,
                                       int bits, std::int32_t p_min);

void write_tensor(std::ostream& out, const Tensor& tensor);
void write_quantized(std::ostream& out, const kv_quant::QuantizedCacheLayer& layer);
TensorFile read_file(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& tensor);
void save_quantized(const std::filesystem::path& path, const kv_quant::QuantizedCacheLayer& layer);
TensorFile load_file(const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);  // f32 files only
kv_quant::QuantizedCacheLayer load_quantized(const std::filesystem::path& path);

Tensor to_tensor(const rearrange::TokenGrid& grid);
rearrange::TokenGrid to_grid(const Tensor& tensor);  // rank-3 tensors only

}  // namespace intp::io
