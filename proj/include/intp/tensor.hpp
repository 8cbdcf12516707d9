#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace intp {

// Row-major f32 tensor. For quantization the last axis is the channel axis
// and every leading axis is flattened into rows (tokens).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)), data(element_count(shape)) {}
  Tensor(std::vector<std::size_t> dims, std::vector<float> values)
      : shape(std::move(dims)), data(std::move(values)) {}

  static std::size_t element_count(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t channels() const { return shape.empty() ? 1 : shape.back(); }
  std::size_t rows() const { return channels() == 0 ? 0 : size() / channels(); }

  bool operator==(const Tensor&) const = default;
};

}  // namespace intp
