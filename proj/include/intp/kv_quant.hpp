#pragma once

// Post-training asymmetric uniform quantization for KV-cache tensors.
//
//   code  = clamp(round_half_even(x / S) - Z, p_min, p_max)
//   x_hat = S * (code + Z)
//
// Z is subtracted before the clamp and added back afterwards, so it shifts the
// clamp window rather than the code origin. Substituting Z -> -Z gives the
// more common q = clamp(round(x / S) + Z) form with x_hat = S * (q - Z).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "intp/tensor.hpp"

namespace intp::kv_quant {

enum class QuantAxis { kPerChannel, kPerToken };

std::string_view to_string(QuantAxis axis);
QuantAxis parse_axis(std::string_view name);

inline constexpr int kWholeAxis = 0;

struct QuantScheme {
  int bits = 2;
  QuantAxis axis = QuantAxis::kPerChannel;
  // Consecutive channels sharing one (S, Z); kWholeAxis spans all channels.
  int group_size = 1;

  static QuantScheme keys(int bits) { return {bits, QuantAxis::kPerChannel, 1}; }
  static QuantScheme values(int bits) { return {bits, QuantAxis::kPerToken, kWholeAxis}; }

  void validate() const;  // bits in {2,4,8,16}, group_size >= 0

  std::int32_t p_min() const { return -(std::int32_t{1} << (bits - 1)); }
  std::int32_t p_max() const { return (std::int32_t{1} << (bits - 1)) - 1; }

  std::size_t channel_group_width(std::size_t channels) const {
    return group_size == kWholeAxis ? channels : static_cast<std::size_t>(group_size);
  }
  std::size_t channel_groups(std::size_t channels) const {
    const std::size_t w = channel_group_width(channels);
    return (channels + w - 1) / w;
  }
  // Number of (S, Z) pairs needed for a tensor of the given rows x channels.
  std::size_t group_count(std::size_t rows, std::size_t channels) const {
    return axis == QuantAxis::kPerChannel ? channel_groups(channels)
                                          : rows * channel_groups(channels);
  }
  // Group index owning element (row, channel).
  std::size_t group_of(std::size_t row, std::size_t channel, std::size_t channels) const {
    const std::size_t g = channel / channel_group_width(channels);
    return axis == QuantAxis::kPerChannel ? g : row * channel_groups(channels) + g;
  }
};

struct QuantParams {
  std::vector<float> scale;              // S per group, > 0
  std::vector<std::int32_t> zero_point;  // Z per group

  std::size_t groups() const { return scale.size(); }
  bool operator==(const QuantParams&) const = default;
};

struct QuantizedCacheLayer {
  QuantScheme scheme;
  QuantParams params;
  std::vector<std::size_t> original_shape;
  std::vector<std::int32_t> codes;  // row-major, each in [p_min, p_max]

  std::size_t channels() const { return original_shape.empty() ? 1 : original_shape.back(); }
  std::size_t rows() const { return channels() == 0 ? 0 : codes.size() / channels(); }
};

// Min-max calibration. Every sample must share the channel count; per-token
// schemes also need every sample to have the same number of rows.
QuantParams calibrate(std::span<const Tensor> samples, const QuantScheme& scheme);

// (S, Z) for a single group with extrema [lo, hi].
void calibrate_range(float lo, float hi, const QuantScheme& scheme, float& scale,
                     std::int32_t& zero_point);

std::int32_t quantize_value(float x, float scale, std::int32_t zero_point,
                            const QuantScheme& scheme);
float dequantize_value(std::int32_t code, float scale, std::int32_t zero_point);

QuantizedCacheLayer quantize(const Tensor& tensor, const QuantParams& params,
                             const QuantScheme& scheme);
Tensor dequantize(const QuantizedCacheLayer& layer);

// Bytes of the packed code payload alone (no scale/zero-point metadata).
std::size_t packed_code_bytes(std::size_t elements, int bits);
// Bytes of per-group metadata (f32 S + i32 Z).
std::size_t metadata_bytes(const QuantParams& params);

}  // namespace intp::kv_quant
