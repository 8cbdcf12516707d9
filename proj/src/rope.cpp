#include "intp/rope.hpp"

#include <cmath>
#include <string>

#include "intp/error.hpp"

namespace intp::rope {

std::string_view to_string(ScalingMode mode) {
  switch (mode) {
    case ScalingMode::kNone: return "none";
    case ScalingMode::kLinear: return "linear";
    case ScalingMode::kNtkAware: return "ntk";
  }
  return "none";
}

ScalingMode parse_scaling_mode(std::string_view name) {
  if (name == "none") return ScalingMode::kNone;
  if (name == "linear") return ScalingMode::kLinear;
  if (name == "ntk") return ScalingMode::kNtkAware;
  fail(ErrorKind::kInvalidArgument,
       "unknown rope mode '" + std::string(name) + "' (expected none|linear|ntk)");
}

void RopeConfig::validate() const {
  require(head_dim >= 2 && head_dim % 2 == 0,
          "rope head_dim must be even and >= 2, got " + std::to_string(head_dim));
  require(std::isfinite(base) && base > 1.0, "rope base must be > 1");
  require(pretrained_window > 0, "pretrained_window must be positive");
  require(target_window >= pretrained_window,
          "target_window (" + std::to_string(target_window) +
              ") must be >= pretrained_window (" +
              std::to_string(pretrained_window) + ")");
}

double ntk_base(const RopeConfig& config) {
  config.validate();
  require(config.head_dim > 2, "ntk_base needs head_dim > 2");
  const double d = config.head_dim;
  return config.base * std::pow(config.scaling_ratio(), d / (d - 2.0));
}

double effective_base(const RopeConfig& config) {
  return config.mode == ScalingMode::kNtkAware ? ntk_base(config) : config.base;
}

FrequencyTable compute_frequencies(const RopeConfig& config) {
  config.validate();
  const double base = effective_base(config);
  const std::size_t pairs = static_cast<std::size_t>(config.head_dim / 2);
  FrequencyTable table;
  table.theta.resize(pairs);
  for (std::size_t d = 0; d < pairs; ++d) {
    const double exponent = -2.0 * static_cast<double>(d) / config.head_dim;
    table.theta[d] = std::pow(base, exponent);
  }
  return table;
}

double interpolate_position(std::int64_t m, const RopeConfig& config) {
  require(m >= 0, "position must be non-negative");
  if (config.mode != ScalingMode::kLinear) return static_cast<double>(m);
  return static_cast<double>(m) * static_cast<double>(config.pretrained_window) /
         static_cast<double>(config.target_window);
}

template <typename T>
void rotate_inplace(std::span<T> values, double position,
                    const FrequencyTable& freqs) {
  require(values.size() == 2 * freqs.pairs(),
          "rotation length mismatch: vector has " + std::to_string(values.size()) +
              " elements, frequency table covers " +
              std::to_string(2 * freqs.pairs()));
  for (std::size_t d = 0; d < freqs.pairs(); ++d) {
    const double angle = position * freqs.theta[d];
    const T c = static_cast<T>(std::cos(angle));
    const T s = static_cast<T>(std::sin(angle));
    const T x0 = values[2 * d];
    const T x1 = values[2 * d + 1];
    values[2 * d] = x0 * c - x1 * s;
    values[2 * d + 1] = x0 * s + x1 * c;
  }
}

template void rotate_inplace<float>(std::span<float>, double,
                                    const FrequencyTable&);
template void rotate_inplace<double>(std::span<double>, double,
                                     const FrequencyTable&);

std::vector<double> apply_rotation(const PositionedVector& v,
                                   const FrequencyTable& freqs) {
  require(v.position >= 0.0, "position must be non-negative");
  std::vector<double> out = v.values;
  rotate_inplace<double>(out, v.position, freqs);
  return out;
}

}  // namespace intp::rope
