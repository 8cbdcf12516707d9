#pragma once

// Rotary position embedding with context-window extension.
//
// Frequencies follow theta_d = base^(-2d/head_dim) with d counted from zero,
// so theta_0 == 1 and the first rotation pair turns fastest. Rotations act on
// adjacent pairs (2d, 2d+1), not on split halves.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace intp::rope {

enum class ScalingMode { kNone, kLinear, kNtkAware };

std::string_view to_string(ScalingMode mode);
ScalingMode parse_scaling_mode(std::string_view name);

struct RopeConfig {
  double base = 10000.0;
  int head_dim = 128;
  std::int64_t pretrained_window = 4096;
  std::int64_t target_window = 4096;
  ScalingMode mode = ScalingMode::kNone;

  // Throws intp::Error on odd/short head_dim, base <= 1, or L' < L.
  void validate() const;

  // s = L' / L.
  double scaling_ratio() const {
    return static_cast<double>(target_window) /
           static_cast<double>(pretrained_window);
  }
};

struct FrequencyTable {
  std::vector<double> theta;  // head_dim / 2 entries, strictly decreasing

  std::size_t pairs() const { return theta.size(); }
  int head_dim() const { return static_cast<int>(2 * theta.size()); }
};

struct PositionedVector {
  std::vector<double> values;
  double position = 0.0;
};

// b' = b * s^(D / (D - 2)). Requires head_dim > 2.
double ntk_base(const RopeConfig& config);

// The base actually used for frequencies: ntk_base() in NTK mode, else base.
double effective_base(const RopeConfig& config);

FrequencyTable compute_frequencies(const RopeConfig& config);

// m * L / L' in linear mode; m unchanged otherwise.
double interpolate_position(std::int64_t m, const RopeConfig& config);

// In-place rotation of adjacent pairs by position * theta_d. Angles and their
// sin/cos are evaluated in double; the multiply-adds run in T.
template <typename T>
void rotate_inplace(std::span<T> values, double position,
                    const FrequencyTable& freqs);

extern template void rotate_inplace<float>(std::span<float>, double,
                                           const FrequencyTable&);
extern template void rotate_inplace<double>(std::span<double>, double,
                                            const FrequencyTable&);

std::vector<double> apply_rotation(const PositionedVector& v,
                                   const FrequencyTable& freqs);

}  // namespace intp::rope
