#include "intp/kv_quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "intp/error.hpp"

namespace intp::kv_quant {

std::string_view to_string(QuantAxis axis) {
  return axis == QuantAxis::kPerChannel ? "per_channel" : "per_token";
}

QuantAxis parse_axis(std::string_view name) {
  if (name == "per_channel" || name == "channel") return QuantAxis::kPerChannel;
  if (name == "per_token" || name == "token") return QuantAxis::kPerToken;
  fail(ErrorKind::kInvalidArgument,
       "unknown quantization axis '" + std::string(name) +
           "' (expected per_channel|per_token)");
}

void QuantScheme::validate() const {
  require(bits == 2 || bits == 4 || bits == 8 || bits == 16,
          "bits must be one of 2, 4, 8, 16; got " + std::to_string(bits));
  require(group_size >= 0, "group_size must be positive or 0 for whole-axis");
}

namespace {

void check_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::kNonFinite, "tensor contains non-finite values");
  }
}

// Power-of-two floor for S, relative to the group's magnitude. Keeps |x / S|
// below 2^22 so Z fits in int32 and f32 dequantization re-quantizes exactly.
double scale_floor(double lo, double hi) {
  const double mag = std::max({std::abs(lo), std::abs(hi), 1.0});
  return std::ldexp(1.0, std::ilogb(mag) - 20);
}

}  // namespace

void calibrate_range(float lo, float hi, const QuantScheme& scheme, float& scale,
                     std::int32_t& zero_point) {
  require(lo <= hi, "calibration range is inverted");
  const double span = static_cast<double>(hi) - static_cast<double>(lo);
  const double levels = static_cast<double>(scheme.p_max() - scheme.p_min());
  const double exact = std::max(span / levels, scale_floor(lo, hi));
  scale = static_cast<float>(exact);
  // Round S up so the levels still cover [lo, hi] after the f32 cast.
  if (static_cast<double>(scale) < exact) {
    scale = std::nextafter(scale, std::numeric_limits<float>::infinity());
  }
  // lo lands exactly on p_min: round(lo / S) - Z == p_min.
  const double lo_code = std::nearbyint(static_cast<double>(lo) / scale);
  zero_point = static_cast<std::int32_t>(lo_code) - scheme.p_min();
}

QuantParams calibrate(std::span<const Tensor> samples, const QuantScheme& scheme) {
  scheme.validate();
  if (samples.empty()) fail(ErrorKind::kInvalidArgument, "calibration needs at least one sample");
  const std::size_t channels = samples.front().channels();
  const std::size_t rows = samples.front().rows();
  require(channels > 0, "calibration sample has no channels");
  for (const auto& s : samples) {
    require(s.channels() == channels, "calibration samples disagree on channel count");
    if (scheme.axis == QuantAxis::kPerToken) {
      require(s.rows() == rows,
              "per_token calibration samples must all have " + std::to_string(rows) + " rows");
    }
    check_finite(s.data);
  }
  const std::size_t groups = scheme.group_count(rows, channels);
  std::vector<float> lo(groups, std::numeric_limits<float>::infinity());
  std::vector<float> hi(groups, -std::numeric_limits<float>::infinity());
  for (const auto& s : samples) {
    for (std::size_t r = 0; r < s.rows(); ++r) {
      for (std::size_t c = 0; c < channels; ++c) {
        const float v = s.data[r * channels + c];
        const std::size_t g = scheme.group_of(r, c, channels);
        lo[g] = std::min(lo[g], v);
        hi[g] = std::max(hi[g], v);
      }
    }
  }
  QuantParams params;
  params.scale.resize(groups);
  params.zero_point.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    require(lo[g] <= hi[g], "calibration group received no samples");
    calibrate_range(lo[g], hi[g], scheme, params.scale[g], params.zero_point[g]);
  }
  return params;
}

std::int32_t quantize_value(float x, float scale, std::int32_t zero_point,
                            const QuantScheme& scheme) {
  const double q = std::nearbyint(static_cast<double>(x) / scale) - zero_point;
  return static_cast<std::int32_t>(
      std::clamp(q, static_cast<double>(scheme.p_min()), static_cast<double>(scheme.p_max())));
}

float dequantize_value(std::int32_t code, float scale, std::int32_t zero_point) {
  return static_cast<float>(static_cast<double>(scale) *
                            (static_cast<double>(code) + zero_point));
}

QuantizedCacheLayer quantize(const Tensor& tensor, const QuantParams& params,
                             const QuantScheme& scheme) {
  scheme.validate();
  check_finite(tensor.data);
  const std::size_t channels = tensor.channels();
  const std::size_t rows = tensor.rows();
  require(params.scale.size() == params.zero_point.size(), "malformed quantization params");
  require(params.groups() == scheme.group_count(rows, channels),
          "params carry " + std::to_string(params.groups()) + " groups, tensor needs " +
              std::to_string(scheme.group_count(rows, channels)));
  for (float s : params.scale) require(s > 0.0f && std::isfinite(s), "scale must be positive");

  QuantizedCacheLayer layer;
  layer.scheme = scheme;
  layer.params = params;
  layer.original_shape = tensor.shape;
  layer.codes.resize(tensor.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t g = scheme.group_of(r, c, channels);
      const std::size_t i = r * channels + c;
      layer.codes[i] = quantize_value(tensor.data[i], params.scale[g], params.zero_point[g], scheme);
    }
  }
  return layer;
}

Tensor dequantize(const QuantizedCacheLayer& layer) {
  const auto& scheme = layer.scheme;
  scheme.validate();
  const std::size_t channels = layer.channels();
  const std::size_t rows = layer.rows();
  require(Tensor::element_count(layer.original_shape) == layer.codes.size(),
          "code count does not match original shape");
  require(layer.params.groups() == scheme.group_count(rows, channels),
          "quantized layer has the wrong number of groups");
  Tensor out(layer.original_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = r * channels + c;
      const std::int32_t code = layer.codes[i];
      if (code < scheme.p_min() || code > scheme.p_max()) {
        fail(ErrorKind::kFormat, "code " + std::to_string(code) + " outside [" +
                                     std::to_string(scheme.p_min()) + ", " +
                                     std::to_string(scheme.p_max()) + "]");
      }
      const std::size_t g = scheme.group_of(r, c, channels);
      out.data[i] = dequantize_value(code, layer.params.scale[g], layer.params.zero_point[g]);
    }
  }
  return out;
}

std::size_t packed_code_bytes(std::size_t elements, int bits) {
  return (elements * static_cast<std::size_t>(bits) + 7) / 8;
}

std::size_t metadata_bytes(const QuantParams& params) {
  return params.groups() * (sizeof(float) + sizeof(std::int32_t));
}

}  // namespace intp::kv_quant
