#include "intp/decoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "intp/error.hpp"
#include "intp/random.hpp"

namespace intp::decoder {

namespace {

enum Stream : std::uint64_t {
  kEmbed = 1,
  kUnembed = 2,
  kLayerBase = 16,  // + 8 * layer + tensor slot
};

std::vector<float> init_matrix(std::uint64_t seed, std::uint64_t stream, std::size_t count,
                               double scale) {
  const CounterRng rng(seed, stream);
  std::vector<float> w(count);
  for (std::size_t i = 0; i < count; ++i) w[i] = static_cast<float>(rng.symmetric(i) * scale);
  return w;
}

}  // namespace

void DecoderSpec::validate() const {
  require(layers > 0, "decoder needs at least one layer");
  require(hidden > 0 && heads > 0, "hidden and heads must be positive");
  require(hidden % heads == 0, "hidden (" + std::to_string(hidden) +
                                   ") must be divisible by heads (" + std::to_string(heads) + ")");
  require(head_dim() % 2 == 0, "head_dim must be even for rotary embeddings");
  require(vocab > 0, "vocab must be positive");
}

// ---------------------------------------------------------------------------
// KvCache

KvCache::KvCache(int layers, int hidden, std::optional<CacheQuantizer> quantizer)
    : hidden_(hidden), layers_(static_cast<std::size_t>(layers)), quantizer_(std::move(quantizer)) {}

KvCache KvCache::full_precision(const DecoderSpec& spec) {
  spec.validate();
  return KvCache(spec.layers, spec.hidden, std::nullopt);
}

KvCache KvCache::quantized(const DecoderSpec& spec, CacheQuantizer quantizer) {
  spec.validate();
  quantizer.key_scheme.validate();
  quantizer.value_scheme.validate();
  quantizer.key_params.resize(spec.layers);
  quantizer.value_params.resize(spec.layers);
  const auto check = [&](const kv_quant::QuantScheme& scheme,
                         const std::vector<std::optional<kv_quant::QuantParams>>& params) {
    if (scheme.axis != kv_quant::QuantAxis::kPerChannel) return;
    for (const auto& p : params) {
      require(p.has_value(), "per_channel cache quantization needs calibrated params per layer");
      require(p->groups() == scheme.group_count(1, spec.hidden),
              "calibrated params do not match the cache width");
    }
  };
  check(quantizer.key_scheme, quantizer.key_params);
  check(quantizer.value_scheme, quantizer.value_params);
  return KvCache(spec.layers, spec.hidden, std::move(quantizer));
}

kv_quant::QuantizedCacheLayer KvCache::encode_row(
    std::span<const float> row, const kv_quant::QuantScheme& scheme,
    const std::optional<kv_quant::QuantParams>& fixed) const {
  Tensor t({1, static_cast<std::size_t>(hidden_)}, std::vector<float>(row.begin(), row.end()));
  if (scheme.axis == kv_quant::QuantAxis::kPerChannel) return kv_quant::quantize(t, *fixed, scheme);
  const Tensor sample[] = {t};
  return kv_quant::quantize(t, kv_quant::calibrate(sample, scheme), scheme);
}

void KvCache::append(int layer, std::span<const float> key, std::span<const float> value) {
  require(layer >= 0 && layer < layers(), "cache layer out of range");
  require(key.size() == static_cast<std::size_t>(hidden_) && value.size() == key.size(),
          "cache row width mismatch");
  Layer& l = layers_[layer];
  require(l.rows == length_, "layer already holds the current token");
  if (quantizer_) {
    l.key_rows.push_back(encode_row(key, quantizer_->key_scheme, quantizer_->key_params[layer]));
    l.value_rows.push_back(
        encode_row(value, quantizer_->value_scheme, quantizer_->value_params[layer]));
  } else {
    l.keys.insert(l.keys.end(), key.begin(), key.end());
    l.values.insert(l.values.end(), value.begin(), value.end());
  }
  ++l.rows;
}

void KvCache::commit() {
  for (const auto& l : layers_) {
    require(l.rows == length_ + 1, "commit before every layer appended the current token");
  }
  ++length_;
}

std::int64_t KvCache::rows(int layer) const { return layers_.at(layer).rows; }

Tensor KvCache::read(const Layer& layer, bool key) const {
  const std::size_t rows = static_cast<std::size_t>(layer.rows);
  const std::size_t width = static_cast<std::size_t>(hidden_);
  if (!quantizer_) {
    return Tensor({rows, width}, key ? layer.keys : layer.values);
  }
  Tensor out({rows, width});
  const auto& coded = key ? layer.key_rows : layer.value_rows;
  for (std::size_t r = 0; r < rows; ++r) {
    const Tensor row = kv_quant::dequantize(coded[r]);
    std::ranges::copy(row.data, out.data.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return out;
}

Tensor KvCache::keys(int layer) const { return read(layers_.at(layer), true); }
Tensor KvCache::values(int layer) const { return read(layers_.at(layer), false); }

std::size_t KvCache::payload_bytes() const {
  std::size_t total = 0;
  for (const auto& l : layers_) {
    if (!quantizer_) {
      total += (l.keys.size() + l.values.size()) * sizeof(float);
      continue;
    }
    for (const auto& row : l.key_rows) total += kv_quant::packed_code_bytes(row.codes.size(), row.scheme.bits);
    for (const auto& row : l.value_rows) total += kv_quant::packed_code_bytes(row.codes.size(), row.scheme.bits);
  }
  return total;
}

std::size_t KvCache::metadata_bytes() const {
  if (!quantizer_) return 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const auto account = [&](const kv_quant::QuantScheme& scheme,
                             const std::vector<kv_quant::QuantizedCacheLayer>& rows,
                             const std::optional<kv_quant::QuantParams>& fixed) {
      if (scheme.axis == kv_quant::QuantAxis::kPerChannel) {
        if (fixed) total += kv_quant::metadata_bytes(*fixed);
      } else {
        for (const auto& row : rows) total += kv_quant::metadata_bytes(row.params);
      }
    };
    account(quantizer_->key_scheme, l.key_rows, quantizer_->key_params[i]);
    account(quantizer_->value_scheme, l.value_rows, quantizer_->value_params[i]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Kernels

void rms_norm(std::span<const float> x, std::span<const float> gain, std::span<float> out) {
  double ss = 0.0;
  for (float v : x) ss += static_cast<double>(v) * v;
  const float inv = static_cast<float>(1.0 / std::sqrt(ss / static_cast<double>(x.size()) + 1e-6));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
}

void matvec(std::span<const float> w, std::span<const float> x, std::span<float> y) {
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < y.size(); ++o) {
    const float* row = w.data() + o * in;
    float acc = 0.0f;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

float gelu(float x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2 / pi)
  return 0.5f * x * (1.0f + std::tanh(kC * (x + 0.044715f * x * x * x)));
}

Rotary::Rotary(const rope::RopeConfig& cfg, int head_dim) : config(cfg) {
  config.validate();
  require(config.head_dim == head_dim,
          "rope head_dim " + std::to_string(config.head_dim) + " does not match decoder head_dim " +
              std::to_string(head_dim));
  freqs = rope::compute_frequencies(config);
}

// ---------------------------------------------------------------------------
// Decoder

Decoder::Decoder(const DecoderSpec& spec) : spec_(spec) {
  spec_.validate();
  const std::size_t h = static_cast<std::size_t>(spec_.hidden);
  const std::size_t f = static_cast<std::size_t>(spec_.mlp_hidden());
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec_.hidden));
  embed_ = init_matrix(spec_.seed, kEmbed, static_cast<std::size_t>(spec_.vocab) * h, scale);
  unembed_ = init_matrix(spec_.seed, kUnembed, static_cast<std::size_t>(spec_.vocab) * h, scale);
  final_norm_.assign(h, 1.0f);
  layers_.resize(spec_.layers);
  for (int l = 0; l < spec_.layers; ++l) {
    const std::uint64_t base = kLayerBase + 8 * static_cast<std::uint64_t>(l);
    LayerWeights& w = layers_[l];
    w.attn_norm.assign(h, 1.0f);
    w.mlp_norm.assign(h, 1.0f);
    w.wq = init_matrix(spec_.seed, base + 0, h * h, scale);
    w.wk = init_matrix(spec_.seed, base + 1, h * h, scale);
    w.wv = init_matrix(spec_.seed, base + 2, h * h, scale);
    w.wo = init_matrix(spec_.seed, base + 3, h * h, scale);
    w.w_up = init_matrix(spec_.seed, base + 4, f * h, scale);
    w.w_down = init_matrix(spec_.seed, base + 5, h * f, scale);
  }
}

std::span<const float> Decoder::embedding(int token) const {
  require(token >= 0 && token < spec_.vocab,
          "token id " + std::to_string(token) + " outside vocab of " + std::to_string(spec_.vocab));
  const std::size_t h = static_cast<std::size_t>(spec_.hidden);
  return std::span<const float>(embed_).subspan(static_cast<std::size_t>(token) * h, h);
}

std::uint64_t Decoder::checksum() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const auto feed = [&](const std::vector<float>& v) {
    for (float x : v) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
      for (int i = 0; i < 4; ++i) {
        hash ^= (bits >> (8 * i)) & 0xffu;
        hash *= 0x100000001b3ULL;
      }
    }
  };
  feed(embed_);
  feed(unembed_);
  feed(final_norm_);
  for (const auto& w : layers_) {
    for (const auto* m : {&w.attn_norm, &w.wq, &w.wk, &w.wv, &w.wo, &w.mlp_norm, &w.w_up, &w.w_down}) {
      feed(*m);
    }
  }
  return hash;
}

AttentionOutput Decoder::attention_step(int layer, std::span<const float> normed_input,
                                        KvCache& cache, const Rotary& rotary) const {
  require(layer >= 0 && layer < spec_.layers, "layer index out of range");
  const int hd = spec_.head_dim();
  require(rotary.config.head_dim == hd, "rotary table built for a different head_dim");
  const std::size_t h = static_cast<std::size_t>(spec_.hidden);
  require(normed_input.size() == h, "attention input width mismatch");

  const std::int64_t index = cache.rows(layer);
  if (index >= rotary.config.target_window) {
    fail(ErrorKind::kWindowOverflow,
         "position " + std::to_string(index) + " exceeds the context window of " +
             std::to_string(rotary.config.target_window) + " tokens");
  }

  const LayerWeights& w = layers_[layer];
  std::vector<float> q(h), k(h), v(h);
  matvec(w.wq, normed_input, q);
  matvec(w.wk, normed_input, k);
  matvec(w.wv, normed_input, v);

  AttentionOutput result;
  result.position = rope::interpolate_position(index, rotary.config);
  for (int head = 0; head < spec_.heads; ++head) {
    const std::size_t off = static_cast<std::size_t>(head) * hd;
    rope::rotate_inplace<float>(std::span<float>(q).subspan(off, hd), result.position, rotary.freqs);
    rope::rotate_inplace<float>(std::span<float>(k).subspan(off, hd), result.position, rotary.freqs);
  }
  cache.append(layer, k, v);

  const Tensor keys = cache.keys(layer);
  const Tensor values = cache.values(layer);
  const std::size_t rows = keys.rows();
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(hd));

  result.output.assign(h, 0.0f);
  result.weights.resize(spec_.heads);
  for (int head = 0; head < spec_.heads; ++head) {
    const std::size_t off = static_cast<std::size_t>(head) * hd;
    std::vector<float>& p = result.weights[head];
    p.resize(rows);
    float max_score = -std::numeric_limits<float>::infinity();
    for (std::size_t t = 0; t < rows; ++t) {
      const float* kr = keys.data.data() + t * h + off;
      float s = 0.0f;
      for (int d = 0; d < hd; ++d) s += q[off + d] * kr[d];
      p[t] = s * inv_sqrt;
      max_score = std::max(max_score, p[t]);
    }
    double denom = 0.0;
    for (float& s : p) {
      s = std::exp(s - max_score);
      denom += s;
    }
    for (float& s : p) s = static_cast<float>(s / denom);
    float* out = result.output.data() + off;
    for (std::size_t t = 0; t < rows; ++t) {
      const float* vr = values.data.data() + t * h + off;
      for (int d = 0; d < hd; ++d) out[d] += p[t] * vr[d];
    }
  }
  return result;
}

std::vector<float> Decoder::forward(std::span<const float> input_embedding, KvCache& cache,
                                    const Rotary& rotary) const {
  const std::size_t h = static_cast<std::size_t>(spec_.hidden);
  require(input_embedding.size() == h, "input embedding width " +
                                           std::to_string(input_embedding.size()) +
                                           " does not match hidden " + std::to_string(h));
  require(cache.layers() == spec_.layers && cache.hidden() == spec_.hidden,
          "cache shape does not match decoder");
  std::vector<float> x(input_embedding.begin(), input_embedding.end());
  std::vector<float> normed(h), proj(h), up(static_cast<std::size_t>(spec_.mlp_hidden()));
  for (int l = 0; l < spec_.layers; ++l) {
    const LayerWeights& w = layers_[l];
    rms_norm(x, w.attn_norm, normed);
    const AttentionOutput attn = attention_step(l, normed, cache, rotary);
    matvec(w.wo, attn.output, proj);
    for (std::size_t i = 0; i < h; ++i) x[i] += proj[i];
    rms_norm(x, w.mlp_norm, normed);
    matvec(w.w_up, normed, up);
    for (float& u : up) u = gelu(u);
    matvec(w.w_down, up, proj);
    for (std::size_t i = 0; i < h; ++i) x[i] += proj[i];
  }
  cache.commit();
  rms_norm(x, final_norm_, normed);
  std::vector<float> logits(static_cast<std::size_t>(spec_.vocab));
  matvec(unembed_, normed, logits);
  return logits;
}

// ---------------------------------------------------------------------------
// Sessions

std::vector<std::vector<float>> forward_sequence(const Decoder& decoder,
                                                 std::span<const float> embeddings,
                                                 const rope::RopeConfig& rope, KvCache& cache) {
  const std::size_t h = static_cast<std::size_t>(decoder.spec().hidden);
  require(embeddings.size() % h == 0, "embedding buffer is not a whole number of rows");
  const Rotary rotary(rope, decoder.spec().head_dim());
  std::vector<std::vector<float>> out;
  for (std::size_t off = 0; off < embeddings.size(); off += h) {
    out.push_back(decoder.forward(embeddings.subspan(off, h), cache, rotary));
  }
  return out;
}

CacheQuantizer calibrate_cache(const Decoder& decoder, std::span<const float> calibration_embeddings,
                               const rope::RopeConfig& rope, const kv_quant::QuantScheme& key_scheme,
                               const kv_quant::QuantScheme& value_scheme) {
  key_scheme.validate();
  value_scheme.validate();
  require(!calibration_embeddings.empty(), "calibration needs at least one token");
  const auto& spec = decoder.spec();
  KvCache cache = KvCache::full_precision(spec);
  forward_sequence(decoder, calibration_embeddings, rope, cache);

  CacheQuantizer q;
  q.key_scheme = key_scheme;
  q.value_scheme = value_scheme;
  q.key_params.resize(spec.layers);
  q.value_params.resize(spec.layers);
  for (int l = 0; l < spec.layers; ++l) {
    if (key_scheme.axis == kv_quant::QuantAxis::kPerChannel) {
      const Tensor sample[] = {cache.keys(l)};
      q.key_params[l] = kv_quant::calibrate(sample, key_scheme);
    }
    if (value_scheme.axis == kv_quant::QuantAxis::kPerChannel) {
      const Tensor sample[] = {cache.values(l)};
      q.value_params[l] = kv_quant::calibrate(sample, value_scheme);
    }
  }
  return q;
}

namespace {

int argmax(const std::vector<float>& v) {
  return static_cast<int>(std::ranges::max_element(v) - v.begin());
}

}  // namespace

DecodeResult decode(const Decoder& decoder, std::span<const float> prefix_embeddings,
                    std::span<const int> prompt_ids, int n_out, const rope::RopeConfig& rope,
                    KvCache& cache, const DecodeOptions& options) {
  const auto& spec = decoder.spec();
  const std::size_t h = static_cast<std::size_t>(spec.hidden);
  require(prefix_embeddings.size() % h == 0,
          "visual prefix width does not match hidden size " + std::to_string(h));
  require(n_out >= 0, "n_out must be non-negative");
  const Rotary rotary(rope, spec.head_dim());
  const std::int64_t prompt_len =
      static_cast<std::int64_t>(prefix_embeddings.size() / h + prompt_ids.size());
  require(prompt_len > 0, "prompt is empty");
  for (int id : prompt_ids) {
    require(id >= 0 && id < spec.vocab, "prompt token " + std::to_string(id) + " outside vocab");
  }
  const std::int64_t needed = cache.length() + prompt_len + n_out;
  if (needed > rope.target_window) {
    fail(ErrorKind::kWindowOverflow,
         "prompt (" + std::to_string(prompt_len) + " tokens) plus " + std::to_string(n_out) +
             " generated tokens needs " + std::to_string(needed) +
             " positions, exceeding the context window limit of " +
             std::to_string(rope.target_window));
  }

  DecodeResult result;
  if (n_out == 0) return result;

  std::vector<float> logits;
  for (std::size_t off = 0; off < prefix_embeddings.size(); off += h) {
    logits = decoder.forward(prefix_embeddings.subspan(off, h), cache, rotary);
  }
  for (int id : prompt_ids) logits = decoder.forward(decoder.embedding(id), cache, rotary);

  for (int step = 0; step < n_out; ++step) {
    if (step > 0) logits = decoder.forward(decoder.embedding(result.tokens.back()), cache, rotary);
    DecodeStep s;
    s.step = step;
    s.position = cache.length() - 1;
    s.effective_position = rope::interpolate_position(s.position, rope);
    s.finite = std::ranges::all_of(logits, [](float v) { return std::isfinite(v); });
    s.token = argmax(logits);
    s.max_logit = logits[static_cast<std::size_t>(s.token)];
    result.tokens.push_back(s.token);
    result.steps.push_back(s);
    if (options.keep_logits) result.logits.push_back(logits);
  }
  return result;
}

}  // namespace intp::decoder
