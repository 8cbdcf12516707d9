#pragma once

// Minimal randomly initialised pre-norm transformer decoder. It exists to
// drive RoPE interpolation and KV-cache quantization through a real
// attention loop; it makes no claims about output quality.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "intp/kv_quant.hpp"
#include "intp/rope.hpp"
#include "intp/tensor.hpp"

namespace intp::decoder {

struct DecoderSpec {
  int layers = 2;
  int hidden = 64;
  int heads = 4;
  int vocab = 128;
  std::uint64_t seed = 42;

  void validate() const;
  int head_dim() const { return hidden / heads; }
  int mlp_hidden() const { return 4 * hidden; }
};

// Row-major [out x in] matrices.
struct LayerWeights {
  std::vector<float> attn_norm;  // hidden
  std::vector<float> wq, wk, wv, wo;  // hidden x hidden
  std::vector<float> mlp_norm;  // hidden
  std::vector<float> w_up;      // mlp_hidden x hidden
  std::vector<float> w_down;    // hidden x mlp_hidden
};

// Per-layer parameters for the quantized cache. Schemes on the per_channel
// axis use params fixed by calibration; per_token schemes calibrate each
// appended row on itself.
struct CacheQuantizer {
  kv_quant::QuantScheme key_scheme = kv_quant::QuantScheme::keys(2);
  kv_quant::QuantScheme value_scheme = kv_quant::QuantScheme::values(2);
  std::vector<std::optional<kv_quant::QuantParams>> key_params;    // per layer
  std::vector<std::optional<kv_quant::QuantParams>> value_params;  // per layer
};

class KvCache {
 public:
  static KvCache full_precision(const DecoderSpec& spec);
  static KvCache quantized(const DecoderSpec& spec, CacheQuantizer quantizer);

  bool is_quantized() const { return quantizer_.has_value(); }
  int layers() const { return static_cast<int>(layers_.size()); }
  int hidden() const { return hidden_; }
  // Tokens committed to every layer.
  std::int64_t length() const { return length_; }

  // Appends one token's (already rotated) key and value row to a layer.
  void append(int layer, std::span<const float> key, std::span<const float> value);
  // Marks the current token as present in all layers.
  void commit();

  // [rows x hidden], dequantized when the cache is quantized.
  Tensor keys(int layer) const;
  Tensor values(int layer) const;
  std::int64_t rows(int layer) const;

  // Packed code bytes (or f32 bytes) and separately the S/Z metadata.
  std::size_t payload_bytes() const;
  std::size_t metadata_bytes() const;

 private:
  struct Layer {
    std::vector<float> keys, values;  // full precision rows
    std::vector<kv_quant::QuantizedCacheLayer> key_rows, value_rows;
    std::int64_t rows = 0;
  };

  KvCache(int layers, int hidden, std::optional<CacheQuantizer> quantizer);

  kv_quant::QuantizedCacheLayer encode_row(std::span<const float> row,
                                           const kv_quant::QuantScheme& scheme,
                                           const std::optional<kv_quant::QuantParams>& fixed) const;
  Tensor read(const Layer& layer, bool key) const;

  int hidden_;
  std::int64_t length_ = 0;
  std::vector<Layer> layers_;
  std::optional<CacheQuantizer> quantizer_;
};

// Validated RoPE setup shared by every step of a session.
struct Rotary {
  rope::RopeConfig config;
  rope::FrequencyTable freqs;

  Rotary(const rope::RopeConfig& cfg, int head_dim);
};

struct AttentionOutput {
  std::vector<float> output;                 // hidden, concatenated heads, before W_o
  std::vector<std::vector<float>> weights;   // per head, one weight per cached row
  double position = 0.0;                     // rotation position actually applied
};

class Decoder {
 public:
  explicit Decoder(const DecoderSpec& spec);

  const DecoderSpec& spec() const { return spec_; }
  const LayerWeights& layer(int index) const { return layers_.at(index); }
  std::span<const float> embedding(int token) const;
  std::span<const float> unembedding() const { return unembed_; }  // vocab x hidden
  std::span<const float> final_norm() const { return final_norm_; }

  // FNV-1a over the bit patterns of every weight.
  std::uint64_t checksum() const;

  // Projects q/k/v from an already-normalised input, rotates q and k at the
  // interpolated position of the next cache slot, appends k/v to the cache
  // and attends causally over it.
  AttentionOutput attention_step(int layer, std::span<const float> normed_input, KvCache& cache,
                                 const Rotary& rotary) const;

  // Full decoder step for one input embedding; returns logits.
  std::vector<float> forward(std::span<const float> input_embedding, KvCache& cache,
                             const Rotary& rotary) const;

 private:
  DecoderSpec spec_;
  std::vector<LayerWeights> layers_;
  std::vector<float> embed_;    // vocab x hidden
  std::vector<float> unembed_;  // vocab x hidden
  std::vector<float> final_norm_;
};

// RMS normalisation with per-channel gain.
void rms_norm(std::span<const float> x, std::span<const float> gain, std::span<float> out);
// y = W x for row-major W of shape [y.size() x x.size()].
void matvec(std::span<const float> w, std::span<const float> x, std::span<float> y);
float gelu(float x);

CacheQuantizer calibrate_cache(const Decoder& decoder, std::span<const float> calibration_embeddings,
                               const rope::RopeConfig& rope, const kv_quant::QuantScheme& key_scheme,
                               const kv_quant::QuantScheme& value_scheme);

struct DecodeStep {
  int step = 0;
  std::int64_t position = 0;          // absolute index of the token that produced the logits
  double effective_position = 0.0;    // after interpolation
  int token = 0;
  float max_logit = 0.0f;
  bool finite = true;
};

struct DecodeResult {
  std::vector<int> tokens;
  std::vector<DecodeStep> steps;
  std::vector<std::vector<float>> logits;  // filled when keep_logits is set
};

struct DecodeOptions {
  bool keep_logits = false;
};

// Greedy decoding. prefix_embeddings holds pre-projected visual tokens
// (rows of hidden floats), which precede the text prompt ids.
DecodeResult decode(const Decoder& decoder, std::span<const float> prefix_embeddings,
                    std::span<const int> prompt_ids, int n_out, const rope::RopeConfig& rope,
                    KvCache& cache, const DecodeOptions& options = {});

// Runs a fixed input sequence (teacher forcing) and returns logits per position.
std::vector<std::vector<float>> forward_sequence(const Decoder& decoder,
                                                 std::span<const float> embeddings,
                                                 const rope::RopeConfig& rope, KvCache& cache);

}  // namespace intp::decoder
