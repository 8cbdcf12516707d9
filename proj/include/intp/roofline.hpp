#pragma once

// Memory-bound roofline model for batch-1 LLM decoding with a growing
// visual-token KV cache. All byte figures are decimal (1 GB = 1e9 B).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace intp::roofline {

struct ModelSpec {
  std::string name = "model";
  double n_params = 0;  // parameters streamed from memory per decoded token
  int layers = 0;
  int hidden = 0;
  double weight_bytes_per_param = 2.0;
  int tokens_per_frame = 256;
  double activation_overhead_bytes = 0;

  void validate() const;
  double weight_bytes() const { return n_params * weight_bytes_per_param; }
};

struct HardwareSpec {
  std::string name = "device";
  double peak_compute = 0;    // ops / s
  double peak_bandwidth = 0;  // bytes / s
  double bandwidth_efficiency = 1.0;

  void validate() const;
  double effective_bandwidth() const { return peak_bandwidth * bandwidth_efficiency; }
};

struct CostReport {
  int frames = 0;
  int kv_bits = 16;
  std::int64_t seq_len = 0;
  double ops_total = 0;
  double compute_time_ms = 0;  // informational: ops_total / n_out / peak_compute
  double decode_time_ms = 0;   // per generated token, memory bound
  double total_memory_bytes = 0;
  double kv_bytes = 0;
};

// 2 (K and V) * layers * hidden * seq_len * bits / 8.
double kv_bytes(const ModelSpec& model, std::int64_t seq_len, int bits);

// n_out * (2 * n_params + 4 * layers * hidden * mean_context), where
// mean_context = seq_len + (n_out - 1) / 2 is the average attended length
// while generating n_out tokens after a seq_len-token prompt.
double decode_ops(const ModelSpec& model, std::int64_t seq_len, std::int64_t n_out);

double total_memory(const ModelSpec& model, std::int64_t seq_len, int bits);

// Per-token latency in milliseconds: bytes / effective bandwidth.
double decode_time(double total_memory_bytes, const HardwareSpec& hw);

CostReport analyze_one(const ModelSpec& model, const HardwareSpec& hw, int frames,
                       int bits, std::int64_t n_out);

// Rows ordered by frame count, then by bit width in the given order.
std::vector<CostReport> analyze(const ModelSpec& model, const HardwareSpec& hw,
                                std::span<const int> frame_counts,
                                std::span<const int> bit_widths, std::int64_t n_out);

std::string to_csv(std::span<const CostReport> rows);
std::string to_table(std::span<const CostReport> rows, const ModelSpec& model);

}  // namespace intp::roofline
