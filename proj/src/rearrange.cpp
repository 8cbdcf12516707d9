#include "intp/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "intp/error.hpp"
#include "intp/random.hpp"

namespace intp::rearrange {

TokenGrid::TokenGrid(int frames, int tokens_per_frame, int dim)
    : TokenGrid(frames, tokens_per_frame, dim,
                std::vector<float>(static_cast<std::size_t>(frames) *
                                   tokens_per_frame * dim)) {}

TokenGrid::TokenGrid(int frames, int tokens_per_frame, int dim,
                     std::vector<float> data)
    : frames_(frames),
      tokens_per_frame_(tokens_per_frame),
      dim_(dim),
      data_(std::move(data)) {
  require(frames > 0 && tokens_per_frame > 0 && dim > 0,
          "token grid dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(frames) * tokens_per_frame * dim,
          "token grid data size does not match its dimensions");
}

std::span<float> TokenGrid::frame(int index) {
  require(index >= 0 && index < frames_, "frame index out of range");
  return std::span<float>(data_).subspan(index * frame_stride(), frame_stride());
}

std::span<const float> TokenGrid::frame(int index) const {
  require(index >= 0 && index < frames_, "frame index out of range");
  return std::span<const float>(data_).subspan(index * frame_stride(), frame_stride());
}

RearrangePlan plan_subsequences(int total_frames, int encoder_capacity) {
  require(total_frames > 0, "total_frames must be positive");
  require(encoder_capacity > 0, "encoder_capacity must be positive");
  if (total_frames % encoder_capacity != 0) {
    fail(ErrorKind::kDivisibility,
         "total_frames " + std::to_string(total_frames) +
             " is not a multiple of encoder capacity " +
             std::to_string(encoder_capacity));
  }
  RearrangePlan plan;
  plan.total_frames = total_frames;
  plan.encoder_capacity = encoder_capacity;
  plan.multiplier = total_frames / encoder_capacity;
  plan.subsequences.resize(plan.multiplier);
  for (int i = 1; i <= plan.multiplier; ++i) {
    auto& sub = plan.subsequences[i - 1];
    sub.reserve(encoder_capacity);
    for (int k = 0; k < encoder_capacity; ++k) sub.push_back(k * plan.multiplier + i);
  }
  return plan;
}

std::vector<TokenGrid> split_by_plan(const TokenGrid& grid, const RearrangePlan& plan) {
  require(grid.frames() == plan.total_frames,
          "grid has " + std::to_string(grid.frames()) + " frames, plan expects " +
              std::to_string(plan.total_frames));
  std::vector<TokenGrid> groups;
  groups.reserve(plan.subsequences.size());
  for (const auto& sub : plan.subsequences) {
    TokenGrid group(static_cast<int>(sub.size()), grid.tokens_per_frame(), grid.dim());
    for (std::size_t k = 0; k < sub.size(); ++k) {
      std::ranges::copy(grid.frame(sub[k] - 1), group.frame(static_cast<int>(k)).begin());
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

TokenGrid interleave_tokens(std::span<const TokenGrid> groups, const RearrangePlan& plan) {
  require(groups.size() == plan.subsequences.size(),
          "plan has " + std::to_string(plan.subsequences.size()) +
              " subsequences but " + std::to_string(groups.size()) +
              " token groups were given");
  require(!groups.empty(), "no token groups");
  const int tpf = groups.front().tokens_per_frame();
  const int dim = groups.front().dim();
  for (const auto& g : groups) {
    require(g.frames() == plan.encoder_capacity,
            "token group has " + std::to_string(g.frames()) +
                " frames, encoder capacity is " + std::to_string(plan.encoder_capacity));
    require(g.tokens_per_frame() == tpf && g.dim() == dim,
            "token groups disagree on tokens_per_frame or dim");
  }
  TokenGrid out(plan.total_frames, tpf, dim);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& sub = plan.subsequences[i];
    for (std::size_t k = 0; k < sub.size(); ++k) {
      std::ranges::copy(groups[i].frame(static_cast<int>(k)), out.frame(sub[k] - 1).begin());
    }
  }
  return out;
}

std::vector<int> sample_frame_indices(std::int64_t video_length, int count) {
  require(video_length > 0, "video_length must be positive");
  require(count > 0, "count must be positive");
  require(count <= video_length,
          "cannot sample " + std::to_string(count) + " frames from a " +
              std::to_string(video_length) + "-frame video");
  std::vector<int> idx(count);
  for (int j = 0; j < count; ++j) {
    // (2j+1)*L / (2*count) in exact integer arithmetic.
    const std::int64_t num = (2 * static_cast<std::int64_t>(j) + 1) * video_length;
    idx[j] = static_cast<int>(num / (2 * static_cast<std::int64_t>(count)) + 1);
  }
  return idx;
}

MockEncoder::MockEncoder(int in_dim, int out_dim, std::uint64_t seed)
    : in_dim_(in_dim), out_dim_(out_dim) {
  require(in_dim > 0 && out_dim > 0, "encoder dims must be positive");
  const CounterRng rng(seed, /*stream=*/0xe11c0de);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  projection_.resize(static_cast<std::size_t>(in_dim) * out_dim);
  for (std::size_t i = 0; i < projection_.size(); ++i) {
    projection_[i] = static_cast<float>(rng.symmetric(i) * scale);
  }
}

TokenGrid MockEncoder::encode(const TokenGrid& frames) const {
  require(frames.dim() == in_dim_, "mock encoder input dim mismatch");
  TokenGrid out(frames.frames(), frames.tokens_per_frame(), out_dim_);
  const auto in = frames.data();
  auto dst = out.data();
  const std::size_t tokens = static_cast<std::size_t>(frames.frames()) * frames.tokens_per_frame();
  for (std::size_t t = 0; t < tokens; ++t) {
    const float* x = in.data() + t * in_dim_;
    for (int o = 0; o < out_dim_; ++o) {
      const float* w = projection_.data() + static_cast<std::size_t>(o) * in_dim_;
      float acc = 0.0f;
      for (int i = 0; i < in_dim_; ++i) acc += w[i] * x[i];
      dst[t * out_dim_ + o] = acc;
    }
  }
  return out;
}

}  // namespace intp::rearrange
