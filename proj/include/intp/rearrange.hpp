#pragma once

// Strided frame decomposition for a frozen N-frame video encoder.
//
// An m*N frame clip is split into m subsequences; subsequence i (1-based)
// holds frames {i, m+i, 2m+i, ..., mN-m+i}. Each subsequence goes through the
// encoder on its own, and the resulting per-frame token blocks are merged
// back by absolute frame index.

#include <cstdint>
#include <span>
#include <vector>

namespace intp::rearrange {

inline constexpr int kDefaultTokensPerFrame = 256;

struct RearrangePlan {
  int total_frames = 0;
  int encoder_capacity = 0;
  int multiplier = 0;
  // multiplier lists of encoder_capacity 1-based frame indices.
  std::vector<std::vector<int>> subsequences;
};

// Dense [frames x tokens_per_frame x dim] tensor, row-major.
class TokenGrid {
 public:
  TokenGrid() = default;
  TokenGrid(int frames, int tokens_per_frame, int dim);
  TokenGrid(int frames, int tokens_per_frame, int dim, std::vector<float> data);

  int frames() const { return frames_; }
  int tokens_per_frame() const { return tokens_per_frame_; }
  int dim() const { return dim_; }
  std::size_t frame_stride() const {
    return static_cast<std::size_t>(tokens_per_frame_) * dim_;
  }

  std::span<float> frame(int index);  // 0-based
  std::span<const float> frame(int index) const;

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const TokenGrid&) const = default;

 private:
  int frames_ = 0;
  int tokens_per_frame_ = 0;
  int dim_ = 0;
  std::vector<float> data_;
};

// Rejects total_frames not divisible by encoder_capacity (ErrorKind::kDivisibility).
RearrangePlan plan_subsequences(int total_frames, int encoder_capacity);

// Gathers each subsequence's frames out of a chronological grid.
std::vector<TokenGrid> split_by_plan(const TokenGrid& grid, const RearrangePlan& plan);

// Places every group's frame blocks at their absolute frame position.
TokenGrid interleave_tokens(std::span<const TokenGrid> groups, const RearrangePlan& plan);

// Uniform, deterministic frame sampling; idx_j = floor((j + 0.5) * L / count) + 1.
std::vector<int> sample_frame_indices(std::int64_t video_length, int count);

// Stand-in for the frozen encoder + projector: every frame maps through the
// same seeded random projection, so identical frames give identical tokens.
class MockEncoder {
 public:
  MockEncoder(int in_dim, int out_dim, std::uint64_t seed);

  TokenGrid encode(const TokenGrid& frames) const;

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  int in_dim_;
  int out_dim_;
  std::vector<float> projection_;  // out_dim x in_dim
};

}  // namespace intp::rearrange
