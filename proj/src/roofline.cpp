#include "intp/roofline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "intp/error.hpp"

namespace intp::roofline {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0; }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void ModelSpec::validate() const {
  require(positive(n_params), "model n_params must be positive");
  require(layers > 0 && hidden > 0, "model layers and hidden must be positive");
  require(positive(weight_bytes_per_param), "weight_bytes_per_param must be positive");
  require(tokens_per_frame >= 0, "tokens_per_frame must be non-negative");
  require(std::isfinite(activation_overhead_bytes) && activation_overhead_bytes >= 0,
          "activation_overhead_bytes must be non-negative");
}

void HardwareSpec::validate() const {
  require(positive(peak_compute), "peak_compute must be positive");
  require(positive(peak_bandwidth), "peak_bandwidth must be positive");
  require(positive(bandwidth_efficiency) && bandwidth_efficiency <= 1.0,
          "bandwidth_efficiency must be in (0, 1]");
}

double kv_bytes(const ModelSpec& model, std::int64_t seq_len, int bits) {
  require(seq_len >= 0 && bits > 0, "kv_bytes needs seq_len >= 0 and bits > 0");
  return 2.0 * model.layers * static_cast<double>(model.hidden) *
         static_cast<double>(seq_len) * bits / 8.0;
}

double decode_ops(const ModelSpec& model, std::int64_t seq_len, std::int64_t n_out) {
  require(seq_len >= 0 && n_out >= 0, "decode_ops needs non-negative lengths");
  if (n_out == 0) return 0.0;
  const double mean_context =
      static_cast<double>(seq_len) + static_cast<double>(n_out - 1) / 2.0;
  const double per_token = 2.0 * model.n_params +
                           4.0 * model.layers * static_cast<double>(model.hidden) * mean_context;
  return static_cast<double>(n_out) * per_token;
}

double total_memory(const ModelSpec& model, std::int64_t seq_len, int bits) {
  return model.weight_bytes() + model.activation_overhead_bytes + kv_bytes(model, seq_len, bits);
}

double decode_time(double total_memory_bytes, const HardwareSpec& hw) {
  require(total_memory_bytes >= 0, "memory must be non-negative");
  hw.validate();
  return total_memory_bytes / hw.effective_bandwidth() * 1e3;
}

CostReport analyze_one(const ModelSpec& model, const HardwareSpec& hw, int frames,
                       int bits, std::int64_t n_out) {
  require(frames > 0, "frame count must be positive");
  require(bits > 0 && bits <= 32, "bit width must be in [1, 32]");
  CostReport r;
  r.frames = frames;
  r.kv_bits = bits;
  r.seq_len = static_cast<std::int64_t>(frames) * model.tokens_per_frame;
  r.kv_bytes = kv_bytes(model, r.seq_len, bits);
  r.total_memory_bytes = total_memory(model, r.seq_len, bits);
  r.ops_total = decode_ops(model, r.seq_len, n_out);
  r.compute_time_ms = n_out > 0 ? r.ops_total / static_cast<double>(n_out) / hw.peak_compute * 1e3 : 0.0;
  r.decode_time_ms = decode_time(r.total_memory_bytes, hw);
  return r;
}

std::vector<CostReport> analyze(const ModelSpec& model, const HardwareSpec& hw,
                                std::span<const int> frame_counts,
                                std::span<const int> bit_widths, std::int64_t n_out) {
  model.validate();
  hw.validate();
  require(!frame_counts.empty(), "frame list is empty");
  require(!bit_widths.empty(), "bit-width list is empty");
  require(n_out >= 0, "n_out must be non-negative");
  std::vector<CostReport> rows;
  rows.reserve(frame_counts.size() * bit_widths.size());
  for (int f : frame_counts) {
    for (int b : bit_widths) rows.push_back(analyze_one(model, hw, f, b, n_out));
  }
  return rows;
}

std::string to_csv(std::span<const CostReport> rows) {
  std::ostringstream os;
  os << "frames,kv_bits,seq_len,ops_tera,decode_time_ms,total_memory_gb,kv_gb\n";
  for (const auto& r : rows) {
    os << r.frames << ',' << r.kv_bits << ',' << r.seq_len << ',' << fixed(r.ops_total / 1e12, 3)
       << ',' << fixed(r.decode_time_ms, 3) << ',' << fixed(r.total_memory_bytes / 1e9, 3) << ','
       << fixed(r.kv_bytes / 1e9, 3) << '\n';
  }
  return os.str();
}

std::string to_table(std::span<const CostReport> rows, const ModelSpec& model) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-6s  %-14s  %-5s  %8s  %16s  %17s  %15s\n", "Frames",
                "LLM", "Quant", "OPs (T)", "Decode Time (ms)", "Total Memory (GB)",
                "Storing KV (GB)");
  os << line;
  for (const auto& r : rows) {
    const std::string quant = r.kv_bits == 16 ? "FP16" : "INT" + std::to_string(r.kv_bits);
    std::snprintf(line, sizeof line, "%6d  %-14s  %-5s  %8.1f  %16.1f  %17.1f  %15.1f\n", r.frames,
                  model.name.c_str(), quant.c_str(), r.ops_total / 1e12, r.decode_time_ms,
                  r.total_memory_bytes / 1e9, r.kv_bytes / 1e9);
    os << line;
  }
  return os.str();
}

}  // namespace intp::roofline
