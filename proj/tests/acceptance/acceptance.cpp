// Acceptance suite: one PASS/FAIL line per criterion.
//
//   intp_acceptance            run everything
//   intp_acceptance --only X   run criterion X
//   intp_acceptance --list     print criterion names
//
// Exit status is 0 iff every selected criterion passed.

#include <algorithm>
#include <array>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "intp/decoder.hpp"
#include "intp/kv_quant.hpp"
#include "intp/profiles.hpp"
#include "intp/rearrange.hpp"
#include "intp/roofline.hpp"
#include "intp/rope.hpp"
#include "reference_decoder.hpp"
#include "test_util.hpp"

namespace {

using namespace intp;

// Tolerances. Relative unless noted.
constexpr double kKvFp16Tol = 0.10;
constexpr double kKvInt2Tol = 0.20;
constexpr double kMemoryTol = 0.10;
constexpr double kTimeTol = 0.15;
constexpr double kTimeRatioTol = 0.02;
constexpr double kOpsTol = 0.15;
constexpr double kOpsIncrementTol = 0.10;
constexpr std::int64_t kOpsNOut = 1000;
constexpr double kShiftTol = 1e-5;        // absolute
constexpr double kNormTol = 1e-9;
constexpr double kCompositionTol = 1e-6;  // absolute
constexpr int kRopeCases = 1000;
constexpr double kNtkSigDigitsTol = 1e-10;
constexpr int kQuantScalars = 100000;
constexpr double kCacheTol = 1e-5;  // absolute, logits

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  int failures = 0;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (++failures <= 5) detail << (detail.tellp() > 0 ? "; " : "") << what;
  }
};

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Table 1 rows (frames, bits, OPs T, time ms, total GB, KV GB).
struct PaperRow {
  int frames, bits;
  double ops, time_ms, memory, kv;
};
constexpr PaperRow kTable[] = {
    {8, 16, 14.2, 18.6, 14.0, 1.1},  {16, 16, 15.3, 20.1, 15.1, 2.1},
    {16, 2, 15.3, 17.6, 13.2, 0.3},  {32, 16, 17.4, 22.9, 17.2, 4.3},
    {32, 2, 17.4, 22.9, 13.5, 0.5},  {64, 16, 21.8, 28.6, 21.5, 8.6},
    {64, 2, 21.8, 18.8, 14.0, 1.1},  {128, 16, 30.4, 39.9, 30.1, 17.2},
    {128, 2, 30.4, 20.4, 15.1, 2.1},
};

roofline::CostReport model_row(const PaperRow& row) {
  static const auto model = profiles::bundled_vicuna_7b();
  static const auto hw = profiles::bundled_a100();
  return roofline::analyze_one(model, hw, row.frames, row.bits, kOpsNOut);
}

void table1_kv_storage(Outcome& o) {
  double worst = 0;
  for (const auto& row : kTable) {
    const double got = model_row(row).kv_bytes / 1e9;
    const double e = rel_err(got, row.kv);
    worst = std::max(worst, e);
    o.check(e <= (row.bits == 16 ? kKvFp16Tol : kKvInt2Tol),
            fmt("%g", row.frames) + (row.bits == 16 ? " FP16" : " INT2") +
                fmt(" kv %.3f GB vs %.1f", got, row.kv));
  }
  if (o.pass) o.detail << fmt("worst relative error %.1f%%", 100 * worst);
}

void table1_total_memory(Outcome& o) {
  double worst = 0;
  for (const auto& row : kTable) {
    if (row.bits != 16) continue;
    const double got = model_row(row).total_memory_bytes / 1e9;
    const double e = rel_err(got, row.memory);
    worst = std::max(worst, e);
    o.check(e <= kMemoryTol, fmt("%g frames: %.2f GB vs %.1f", row.frames, got, row.memory));
  }
  if (o.pass) o.detail << fmt("worst relative error %.1f%%", 100 * worst);
}

void table1_decode_time(Outcome& o) {
  double worst = 0;
  double lo_ratio = INFINITY, hi_ratio = 0;
  for (const auto& row : kTable) {
    const auto r = model_row(row);
    const double e = rel_err(r.decode_time_ms, row.time_ms);
    worst = std::max(worst, e);
    o.check(e <= kTimeTol, fmt("%g frames", row.frames) + (row.bits == 16 ? " FP16" : " INT2") +
                               fmt(": %.2f ms vs %.1f (%+.1f%%)", r.decode_time_ms, row.time_ms,
                                   100 * (r.decode_time_ms - row.time_ms) / row.time_ms));
    if (row.bits == 16) {
      const double ratio = r.decode_time_ms / r.total_memory_bytes;
      lo_ratio = std::min(lo_ratio, ratio);
      hi_ratio = std::max(hi_ratio, ratio);
    }
  }
  const double spread = (hi_ratio - lo_ratio) / lo_ratio;
  o.check(spread <= kTimeRatioTol, fmt("FP16 time/memory spread %.3f%%", 100 * spread));
  if (o.pass) o.detail << fmt("worst %.1f%%, FP16 time/memory spread %.4f%%", 100 * worst, 100 * spread);
}

void table1_ops(Outcome& o) {
  std::vector<double> got, want;
  for (const auto& row : kTable) {
    if (row.bits != 16) continue;
    got.push_back(model_row(row).ops_total / 1e12);
    want.push_back(row.ops);
    o.check(rel_err(got.back(), row.ops) <= kOpsTol,
            fmt("%g frames: %.2f T vs %.1f", row.frames, got.back(), row.ops));
  }
  const double increments[] = {1.1, 2.1, 4.4, 8.6};
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = got[i + 1] - got[i];
    o.check(rel_err(d, increments[i]) <= kOpsIncrementTol,
            fmt("increment %g: %.3f T vs %.1f", double(i), d, increments[i]));
  }
  if (o.pass)
    o.detail << fmt("n_out=%g, ops %.2f..%.2f T", double(kOpsNOut), got.front(), got.back());
}

rope::RopeConfig random_rope(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> half(2, 64);
  std::uniform_real_distribution<double> base(100.0, 1e6);
  std::uniform_int_distribution<int> window(16, 8192);
  std::uniform_int_distribution<int> scale(1, 8);
  std::uniform_int_distribution<int> mode(0, 2);
  rope::RopeConfig c;
  c.head_dim = 2 * half(rng);
  c.base = base(rng);
  c.pretrained_window = window(rng);
  c.target_window = c.pretrained_window * scale(rng);
  c.mode = static_cast<rope::ScalingMode>(mode(rng));
  return c;
}

std::vector<double> rotated(std::vector<double> v, double pos, const rope::FrequencyTable& f) {
  rope::rotate_inplace<double>(v, pos, f);
  return v;
}

void rope_properties(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(0.0, 8192.0);
  double worst_shift = 0, worst_norm = 0, worst_comp = 0;
  for (int i = 0; i < kRopeCases; ++i) {
    const auto cfg = random_rope(rng);
    const auto f = rope::compute_frequencies(cfg);
    const auto q = test_support::random_vector(rng, cfg.head_dim);
    const auto k = test_support::random_vector(rng, cfg.head_dim);
    const double m = pos(rng), n = pos(rng), s = pos(rng);

    const double a = test_support::dot(rotated(q, m + s, f), rotated(k, n + s, f));
    const double b = test_support::dot(rotated(q, m, f), rotated(k, n, f));
    worst_shift = std::max(worst_shift, std::abs(a - b));

    const double nq = test_support::norm2(q);
    worst_norm = std::max(worst_norm, std::abs(test_support::norm2(rotated(q, m, f)) - nq) / nq);

    const auto two_step = rotated(rotated(q, m, f), n, f);
    const auto one_step = rotated(q, m + n, f);
    for (int d = 0; d < cfg.head_dim; ++d)
      worst_comp = std::max(worst_comp, std::abs(two_step[d] - one_step[d]));

    // NTK at s = 1 and Eq. 5 at L' = L must both reduce to the plain table.
    auto unit = cfg;
    unit.target_window = unit.pretrained_window;
    unit.mode = rope::ScalingMode::kNone;
    const auto plain = rope::compute_frequencies(unit);
    unit.mode = rope::ScalingMode::kNtkAware;
    o.check(rope::compute_frequencies(unit).theta == plain.theta, "NTK s=1 frequencies differ");
    o.check(rope::ntk_base(unit) == unit.base, "NTK s=1 base differs");
    unit.mode = rope::ScalingMode::kLinear;
    const auto mi = static_cast<std::int64_t>(m);
    o.check(rope::interpolate_position(mi, unit) == static_cast<double>(mi),
            "linear L'=L moved a position");
    o.check(rope::compute_frequencies(unit).theta == plain.theta, "linear L'=L frequencies differ");
  }
  o.check(worst_shift <= kShiftTol, fmt("shift invariance %.2e", worst_shift));
  o.check(worst_norm <= kNormTol, fmt("norm %.2e", worst_norm));
  o.check(worst_comp <= kCompositionTol, fmt("composition %.2e", worst_comp));
  if (o.pass)
    o.detail << kRopeCases << " cases; worst shift " << fmt("%.1e, norm %.1e, composition %.1e", worst_shift, worst_norm, worst_comp);
}

void ntk_base_oracle(Outcome& o) {
  using big = boost::multiprecision::cpp_dec_float_50;
  const big oracle = big(10000) * boost::multiprecision::pow(big(2), big(128) / big(126));
  rope::RopeConfig c;
  c.base = 10000;
  c.head_dim = 128;
  c.pretrained_window = 2048;
  c.target_window = 4096;
  c.mode = rope::ScalingMode::kNtkAware;
  const double got = rope::ntk_base(c);
  const double want = oracle.convert_to<double>();
  const double e = rel_err(got, want);
  o.check(e <= kNtkSigDigitsTol, fmt("b' %.12g vs %.12g", got, want));
  if (o.pass) o.detail << fmt("b' = %.12f, relative error %.1e", got, e);
}

void rearrangement(Outcome& o) {
  int cases = 0;
  for (int total = 1; total <= 256; ++total) {
    for (int cap = 1; cap <= total; ++cap) {
      if (total % cap) continue;
      ++cases;
      const auto plan = rearrange::plan_subsequences(total, cap);
      const int m = total / cap;
      const std::string tag = fmt("(%g,%g)", total, cap);
      o.check(plan.multiplier == m && static_cast<int>(plan.subsequences.size()) == m, tag + " shape");
      std::vector<int> seen(total + 1, 0);
      for (int i = 0; i < m; ++i) {
        const auto& sub = plan.subsequences[i];
        o.check(static_cast<int>(sub.size()) == cap, tag + " subsequence length");
        for (int j = 0; j < static_cast<int>(sub.size()); ++j) {
          o.check(sub[j] == i + 1 + j * m, tag + " stride");
          if (sub[j] >= 1 && sub[j] <= total) ++seen[sub[j]];
        }
        o.check(std::ranges::is_sorted(sub), tag + " chronological order");
      }
      o.check(std::count(seen.begin() + 1, seen.end(), 1) == total, tag + " partition");

      // Round trip through split + interleave, frames tagged with their index.
      const int tpf = 2, dim = 3;
      rearrange::TokenGrid grid(total, tpf, dim);
      for (int f = 0; f < total; ++f)
        for (std::size_t x = 0; x < grid.frame_stride(); ++x)
          grid.frame(f)[x] = static_cast<float>(f * 100 + static_cast<int>(x));
      const auto groups = rearrange::split_by_plan(grid, plan);
      o.check(rearrange::interleave_tokens(groups, plan) == grid, tag + " round trip");
    }
  }
  // Chronological order survives a per-group encoder pass.
  {
    const auto plan = rearrange::plan_subsequences(16, 4);
    std::mt19937_64 rng(5);
    const auto raw = test_support::random_tensor(rng, {16 * 3 * 8});
    const rearrange::TokenGrid frames(16, 3, 8, raw.data);
    const rearrange::MockEncoder enc(8, 5, 9);
    std::vector<rearrange::TokenGrid> encoded;
    for (const auto& g : rearrange::split_by_plan(frames, plan)) encoded.push_back(enc.encode(g));
    o.check(rearrange::interleave_tokens(encoded, plan) == enc.encode(frames), "encoded round trip");
  }
  const auto fig2 = rearrange::plan_subsequences(4, 2);
  o.check(fig2.subsequences == std::vector<std::vector<int>>{{1, 3}, {2, 4}}, "m=2, N=2 plan");
  if (o.pass) o.detail << cases << " (total, capacity) pairs; m=2,N=2 -> [[1,3],[2,4]]";
}

// Nearest lattice point S * (c + Z) over c in [p_min, p_max]; ties go to the
// even integer c + Z.
std::int32_t brute_force_code(float x, float s, std::int32_t z, int bits) {
  const std::int32_t lo = -(1 << (bits - 1)), hi = (1 << (bits - 1)) - 1;
  const double t = static_cast<double>(x) / s;
  const double clamped = std::clamp(t, double(lo + z) - 1.0, double(hi + z) + 1.0);
  const auto centre = static_cast<std::int64_t>(std::floor(clamped));
  std::int32_t best = 0;
  double best_d = INFINITY;
  for (std::int64_t u = centre - 1; u <= centre + 2; ++u) {
    const std::int64_t c = std::clamp<std::int64_t>(u - z, lo, hi);
    const double d = std::abs(t - double(c + z));
    const bool better = d < best_d || (d == best_d && (c + z) % 2 == 0);
    if (better) best = static_cast<std::int32_t>(c), best_d = d;
  }
  return best;
}

void quantization(Outcome& o) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<float> extent(-50.0f, 50.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  int in_range = 0;
  double worst_ratio = 0;
  for (int bits : {2, 4, 8, 16}) {
    const kv_quant::QuantScheme scheme{bits, kv_quant::QuantAxis::kPerToken, kv_quant::kWholeAxis};
    float s = 0, lo = 0, hi = 0;
    std::int32_t z = 0;
    for (int i = 0; i < kQuantScalars; ++i) {
      if (i % 100 == 0) {
        lo = extent(rng), hi = extent(rng);
        if (lo > hi) std::swap(lo, hi);
        kv_quant::calibrate_range(lo, hi, scheme, s, z);
      }
      // 80% inside the calibrated range, the rest beyond it to exercise clamping.
      const float span = hi - lo;
      const float x = lo + span * (unit(rng) * 1.5f - 0.25f);
      const auto code = kv_quant::quantize_value(x, s, z, scheme);
      o.check(code == brute_force_code(x, s, z, bits),
              fmt("%g-bit oracle mismatch at x=%.9g", bits, x));
      const double lat_lo = double(s) * (scheme.p_min() + z);
      const double lat_hi = double(s) * (scheme.p_max() + z);
      if (x >= lat_lo && x <= lat_hi) {
        ++in_range;
        const float back = kv_quant::dequantize_value(code, s, z);
        const double ulp = std::nextafter(std::abs(back), INFINITY) - std::abs(back);
        const double err = std::abs(double(back) - x);
        worst_ratio = std::max(worst_ratio, err / (s / 2.0 + ulp));
        o.check(err <= s / 2.0 + ulp, fmt("%g-bit round trip %.3g > S/2", bits, err));
      }
    }
  }

  // 2-bit codes over a dense sweep of a calibrated group.
  {
    const kv_quant::QuantScheme scheme{2, kv_quant::QuantAxis::kPerChannel, kv_quant::kWholeAxis};
    std::set<std::int32_t> codes;
    for (int g = 0; g < 200; ++g) {
      const auto t = test_support::random_tensor(rng, {64, 8}, extent(rng) - 60.0f, extent(rng) + 60.0f);
      const Tensor samples[] = {t};
      const auto params = kv_quant::calibrate(samples, scheme);
      // Sweep 20% past both ends; whole-axis params apply to any channel count.
      const auto [mn, mx] = std::ranges::minmax(t.data);
      Tensor sweep({1000, 1});
      for (int i = 0; i < 1000; ++i) sweep.data[i] = mn + (mx - mn) * (1.4f * i / 999.0f - 0.2f);
      const auto layer = kv_quant::quantize(sweep, params, scheme);
      codes.insert(layer.codes.begin(), layer.codes.end());
    }
    o.check(codes == std::set<std::int32_t>{-2, -1, 0, 1}, "2-bit code set");
  }

  // Monotonicity and idempotence over randomized groups.
  for (int trial = 0; trial < 400; ++trial) {
    const int bits = 2 << (trial % 4);  // 2, 4, 8, 16
    const int gs = std::array{0, 1, 4, 8}[(trial / 4) % 4];
    const kv_quant::QuantScheme scheme{bits, kv_quant::QuantAxis::kPerChannel, gs};
    const float a = extent(rng), b = extent(rng);
    const Tensor samples[] = {test_support::random_tensor(rng, {16, 8}, std::min(a, b), std::max(a, b) + 1e-3f)};
    const auto params = kv_quant::calibrate(samples, scheme);
    auto t = test_support::random_tensor(rng, {64, 8}, -60.0f, 60.0f);
    // Sort each column so rows are non-decreasing per channel.
    for (int c = 0; c < 8; ++c) {
      std::vector<float> col(64);
      for (int r = 0; r < 64; ++r) col[r] = t.data[r * 8 + c];
      std::ranges::sort(col);
      for (int r = 0; r < 64; ++r) t.data[r * 8 + c] = col[r];
    }
    const auto layer = kv_quant::quantize(t, params, scheme);
    for (int c = 0; c < 8; ++c)
      for (int r = 1; r < 64; ++r)
        o.check(layer.codes[r * 8 + c] >= layer.codes[(r - 1) * 8 + c], "monotonicity");
    o.check(kv_quant::quantize(kv_quant::dequantize(layer), params, scheme).codes == layer.codes,
            "idempotence");
  }
  if (o.pass)
    o.detail << 4 * kQuantScalars << " scalars match the oracle; " << in_range
             << fmt(" in range, worst error %.3f of S/2+ulp", worst_ratio);
}

decoder::DecoderSpec e2e_spec() { return {2, 64, 4, 128, 42}; }

rope::RopeConfig e2e_rope(rope::ScalingMode mode, std::int64_t l, std::int64_t lp) {
  rope::RopeConfig c;
  c.head_dim = e2e_spec().head_dim();
  c.pretrained_window = l;
  c.target_window = lp;
  c.mode = mode;
  return c;
}

std::vector<float> embed(const decoder::Decoder& d, std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> id(0, d.spec().vocab - 1);
  std::vector<float> out;
  for (int i = 0; i < n; ++i) {
    const auto e = d.embedding(id(rng));
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

void decoder_e2e(Outcome& o) {
  using namespace decoder;
  const auto spec = e2e_spec();
  const Decoder d(spec);
  std::mt19937_64 rng(99);
  const std::size_t h = spec.hidden;

  double worst_cache = 0;
  for (auto mode : {rope::ScalingMode::kNone, rope::ScalingMode::kLinear, rope::ScalingMode::kNtkAware}) {
    const auto rope = e2e_rope(mode, 32, 128);
    const test_support::ReferenceDecoder ref(d, rope);
    for (int len : {1, 7, 32, 64}) {
      const auto emb = embed(d, rng, len);
      auto cache = KvCache::full_precision(spec);
      const auto logits = forward_sequence(d, emb, rope, cache);
      for (int t = 0; t < len; t += (len > 16 ? 3 : 1)) {
        const auto want = ref.last_logits(std::span<const float>(emb).first((t + 1) * h));
        for (int i = 0; i < spec.vocab; ++i)
          worst_cache = std::max(worst_cache, std::abs(double(logits[t][i]) - want[i]));
      }
    }
  }
  o.check(worst_cache <= kCacheTol, fmt("cache vs recompute %.2e", worst_cache));

  for (int trial = 0; trial < 20; ++trial) {
    const auto rope = e2e_rope(static_cast<rope::ScalingMode>(trial % 3), 16, 64);
    const int n = 2 + trial * 3, cut = 1 + trial % (n - 1);
    const auto emb = embed(d, rng, n);
    auto a = KvCache::full_precision(spec);
    auto b = KvCache::full_precision(spec);
    const auto full = forward_sequence(d, emb, rope, a);
    const auto part = forward_sequence(d, std::span<const float>(emb).first(cut * h), rope, b);
    for (int t = 0; t < cut; ++t) o.check(full[t] == part[t], "causality");
  }

  {
    const auto rope = e2e_rope(rope::ScalingMode::kNtkAware, 64, 256);
    auto cache = KvCache::full_precision(spec);
    const std::vector<int> prompt{3, 1, 4, 1, 5, 9, 2, 6};
    const auto result = decode(d, {}, prompt, 200, rope, cache, {.keep_logits = true});
    o.check(result.tokens.size() == 200, "200-token decode length");
    bool finite = true;
    for (const auto& row : result.logits)
      for (float x : row) finite = finite && std::isfinite(x);
    for (const auto& step : result.steps) finite = finite && step.finite;
    o.check(finite, "non-finite logits in 200-token decode");
    o.check(result.steps.back().position >= 64 + 64, "decode did not pass the pretrained window");
  }

  std::vector<double> deviation;
  {
    const auto rope = e2e_rope(rope::ScalingMode::kNtkAware, 32, 128);
    const auto emb = embed(d, rng, 64);
    auto fp = KvCache::full_precision(spec);
    const auto ref = forward_sequence(d, emb, rope, fp);
    for (int bits : {2, 4, 8, 16}) {
      auto q = KvCache::quantized(spec, calibrate_cache(d, emb, rope, kv_quant::QuantScheme::keys(bits),
                                                        kv_quant::QuantScheme::values(bits)));
      const auto got = forward_sequence(d, emb, rope, q);
      double sum = 0;
      for (std::size_t t = 0; t < ref.size(); ++t)
        for (int i = 0; i < spec.vocab; ++i) sum += std::abs(double(ref[t][i]) - got[t][i]);
      deviation.push_back(sum / (ref.size() * spec.vocab));
    }
    for (std::size_t i = 1; i < deviation.size(); ++i)
      o.check(deviation[i] <= deviation[i - 1], "quantized deviation increased with bits");
  }
  if (o.pass)
    o.detail << fmt("cache vs recompute %.1e; mean |dlogit| 2/4/8/16-bit ", worst_cache)
             << fmt("%.2e / %.2e / ", deviation[0], deviation[1]) << fmt("%.2e / %.2e", deviation[2], deviation[3]);
}

struct Criterion {
  const char* name;
  std::function<void(Outcome&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"table1_kv_storage", table1_kv_storage},
      {"table1_total_memory", table1_total_memory},
      {"table1_decode_time", table1_decode_time},
      {"table1_ops", table1_ops},
      {"rope_properties", rope_properties},
      {"ntk_base", ntk_base_oracle},
      {"rearrangement", rearrangement},
      {"quantization", quantization},
      {"decoder_e2e", decoder_e2e},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--list") {
      for (const auto& c : criteria()) std::printf("%s\n", c.name);
      return 0;
    }
    if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--list] [--only NAME]\n", argv[0]);
      return 2;
    }
  }

  int ran = 0, failed = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s %-20s %8.1f ms  %s%s\n", o.pass ? "PASS" : "FAIL", c.name, ms, o.detail.str().c_str(),
                o.failures > 5 ? fmt(" (+%g more)", o.failures - 5.0).c_str() : "");
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion named '%s'\n", only.c_str());
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
