// intp: command-line front end for frame rearrangement, KV-cache
// quantization, RoPE-interpolated demo decoding and roofline cost analysis.
//
// Exit status: 0 success, 1 invalid argument, 2 I/O, 3 format violation,
// 4 divisibility violation, 5 context-window overflow, 6 non-finite data,
// 7 self-verification failure. Data goes to stdout, diagnostics to stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "intp/decoder.hpp"
#include "intp/error.hpp"
#include "intp/kv_quant.hpp"
#include "intp/profiles.hpp"
#include "intp/random.hpp"
#include "intp/rearrange.hpp"
#include "intp/roofline.hpp"
#include "intp/tensor_io.hpp"

namespace {

using nlohmann::json;
using namespace intp;

constexpr std::uint64_t kDefaultSeed = 42;
constexpr int kExitSelfVerify = 7;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::string serialize(const kv_quant::QuantizedCacheLayer& layer) {
  std::ostringstream os(std::ios::binary);
  io::write_quantized(os, layer);
  return os.str();
}

// ---------------------------------------------------------------------------

struct RearrangeArgs {
  std::string input, output;
  int capacity = 8;
};

int run_rearrange(const RearrangeArgs& a) {
  const auto grid = io::to_grid(io::load_tensor(a.input));
  const auto plan = rearrange::plan_subsequences(grid.frames(), a.capacity);
  // Input frames are the encoder outputs stacked subsequence by subsequence.
  std::vector<rearrange::TokenGrid> groups;
  for (int i = 0; i < plan.multiplier; ++i) {
    rearrange::TokenGrid g(plan.encoder_capacity, grid.tokens_per_frame(), grid.dim());
    for (int k = 0; k < plan.encoder_capacity; ++k) {
      const auto src = grid.frame(i * plan.encoder_capacity + k);
      std::copy(src.begin(), src.end(), g.frame(k).begin());
    }
    groups.push_back(std::move(g));
  }
  const auto out = rearrange::interleave_tokens(groups, plan);
  io::save_tensor(a.output, io::to_tensor(out));
  json j = {{"total_frames", plan.total_frames},
            {"encoder_capacity", plan.encoder_capacity},
            {"multiplier", plan.multiplier},
            {"subsequences", plan.subsequences}};
  std::cout << j.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string model, hardware, format = "table";
  std::vector<int> frames{8, 16, 32, 64, 128};
  std::vector<int> bits{16, 2};
  std::int64_t n_out = 1000;
};

int run_analyze(const AnalyzeArgs& a) {
  const auto model = a.model.empty() ? profiles::bundled_vicuna_7b() : profiles::load_model(a.model);
  const auto hw = a.hardware.empty() ? profiles::bundled_a100() : profiles::load_hardware(a.hardware);
  const auto rows = roofline::analyze(model, hw, a.frames, a.bits, a.n_out);
  if (a.format == "csv") {
    std::cout << roofline::to_csv(rows);
  } else if (a.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"frames", r.frames},
                     {"kv_bits", r.kv_bits},
                     {"seq_len", r.seq_len},
                     {"ops_total", r.ops_total},
                     {"compute_time_ms", r.compute_time_ms},
                     {"decode_time_ms", r.decode_time_ms},
                     {"total_memory_bytes", r.total_memory_bytes},
                     {"kv_bytes", r.kv_bytes}});
    }
    std::cout << arr.dump(2) << '\n';
  } else {
    std::cout << roofline::to_table(rows, model);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct QuantizeArgs {
  std::string input, output, axis = "per_channel";
  std::vector<std::string> calibration;
  int bits = 2;
  int group_size = 1;
  bool self_verify = false;
};

int run_quantize(const QuantizeArgs& a) {
  const kv_quant::QuantScheme scheme{a.bits, kv_quant::parse_axis(a.axis), a.group_size};
  scheme.validate();
  const Tensor input = io::load_tensor(a.input);
  std::vector<Tensor> samples;
  if (a.calibration.empty()) {
    samples.push_back(input);
  } else {
    for (const auto& p : a.calibration) samples.push_back(io::load_tensor(p));
  }
  const auto params = kv_quant::calibrate(samples, scheme);
  const auto layer = kv_quant::quantize(input, params, scheme);
  const Tensor restored = kv_quant::dequantize(layer);

  double max_err = 0.0, sum_err = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double e = std::abs(static_cast<double>(input.data[i]) - restored.data[i]);
    max_err = std::max(max_err, e);
    sum_err += e;
  }
  float max_scale = 0.0f;
  for (float s : params.scale) max_scale = std::max(max_scale, s);

  const std::string bytes = serialize(layer);
  io::save_quantized(a.output, layer);

  json report = {{"bits", scheme.bits},
                 {"axis", std::string(kv_quant::to_string(scheme.axis))},
                 {"group_size", scheme.group_size},
                 {"groups", params.groups()},
                 {"elements", input.size()},
                 {"max_abs_error", max_err},
                 {"mean_abs_error", input.size() ? sum_err / static_cast<double>(input.size()) : 0.0},
                 {"max_scale", max_scale},
                 {"code_bytes", kv_quant::packed_code_bytes(input.size(), scheme.bits)},
                 {"metadata_bytes", kv_quant::metadata_bytes(params)},
                 {"checksum", hex64(fnv1a(bytes))}};
  int status = 0;
  if (a.self_verify) {
    // Re-read what was written, dequantize, quantize again with the same
    // params and compare the serialized code files.
    const auto reread = io::load_quantized(a.output);
    const auto requant = kv_quant::quantize(kv_quant::dequantize(reread), reread.params, scheme);
    const std::string again = serialize(requant);
    const bool ok = again == bytes;
    report["self_verify"] = {{"idempotent", ok}, {"checksum", hex64(fnv1a(again))}};
    if (!ok) {
      std::cerr << "intp: self-verify failed, re-quantized codes differ\n";
      status = kExitSelfVerify;
    }
  }
  std::cout << report.dump() << '\n';
  return status;
}

struct DequantizeArgs {
  std::string input, output;
};

int run_dequantize(const DequantizeArgs& a) {
  const auto layer = io::load_quantized(a.input);
  io::save_tensor(a.output, kv_quant::dequantize(layer));
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthGridArgs {
  std::string output;
  int frames = 8, tokens = 4, dim = 64, in_dim = 16;
  std::uint64_t seed = kDefaultSeed;
};

int run_synth_grid(const SynthGridArgs& a) {
  // Raw per-frame features pushed through the mock encoder.
  rearrange::TokenGrid raw(a.frames, a.tokens, a.in_dim);
  const CounterRng rng(a.seed, 0xf4a3e5);
  auto data = raw.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(rng.symmetric(i));
  const rearrange::MockEncoder encoder(a.in_dim, a.dim, a.seed);
  io::save_tensor(a.output, io::to_tensor(encoder.encode(raw)));
  return 0;
}

// ---------------------------------------------------------------------------

struct DemoDecodeArgs {
  std::string grid;
  std::vector<int> prompt;
  int n_out = 16;
  std::string mode = "ntk";
  double base = 10000.0;
  std::int64_t pretrained_window = 64;
  std::int64_t target_window = 256;
  decoder::DecoderSpec spec;
  std::string cache = "fp";
  int kv_bits = 2;
  std::string key_axis = "per_channel";
  std::string value_axis = "per_token";
};

int run_demo_decode(const DemoDecodeArgs& a) {
  const decoder::Decoder model(a.spec);
  rope::RopeConfig rope;
  rope.base = a.base;
  rope.head_dim = a.spec.head_dim();
  rope.pretrained_window = a.pretrained_window;
  rope.target_window = a.target_window;
  rope.mode = rope::parse_scaling_mode(a.mode);
  rope.validate();

  std::vector<float> prefix;
  if (!a.grid.empty()) {
    const auto grid = io::to_grid(io::load_tensor(a.grid));
    require(grid.dim() == a.spec.hidden,
            "token grid dim " + std::to_string(grid.dim()) + " does not match --hidden " +
                std::to_string(a.spec.hidden));
    prefix.assign(grid.data().begin(), grid.data().end());
  }
  const std::int64_t prompt_len =
      static_cast<std::int64_t>(prefix.size()) / a.spec.hidden + static_cast<std::int64_t>(a.prompt.size());
  if (prompt_len + a.n_out > rope.target_window) {
    fail(ErrorKind::kWindowOverflow,
         "prompt of " + std::to_string(prompt_len) + " tokens plus " + std::to_string(a.n_out) +
             " generated tokens exceeds the target window limit of " +
             std::to_string(rope.target_window) + " (first offending position " +
             std::to_string(rope.target_window) + ")");
  }

  auto cache = decoder::KvCache::full_precision(a.spec);
  if (a.cache == "quantized") {
    const kv_quant::QuantScheme key_scheme{
        a.kv_bits, kv_quant::parse_axis(a.key_axis),
        kv_quant::parse_axis(a.key_axis) == kv_quant::QuantAxis::kPerChannel ? 1 : kv_quant::kWholeAxis};
    const kv_quant::QuantScheme value_scheme{
        a.kv_bits, kv_quant::parse_axis(a.value_axis),
        kv_quant::parse_axis(a.value_axis) == kv_quant::QuantAxis::kPerChannel ? 1 : kv_quant::kWholeAxis};
    // Calibrate on the run's own prompt.
    std::vector<float> calib = prefix;
    for (int id : a.prompt) {
      const auto e = model.embedding(id);
      calib.insert(calib.end(), e.begin(), e.end());
    }
    cache = decoder::KvCache::quantized(
        a.spec, decoder::calibrate_cache(model, calib, rope, key_scheme, value_scheme));
  } else if (a.cache != "fp") {
    fail(ErrorKind::kInvalidArgument, "--cache must be fp or quantized");
  }

  const auto result = decoder::decode(model, prefix, a.prompt, a.n_out, rope, cache);
  for (const auto& s : result.steps) {
    json rec = {{"step", s.step},
                {"position", s.position},
                {"effective_position", s.effective_position},
                {"token", s.token},
                {"max_logit", s.max_logit},
                {"finite", s.finite}};
    std::cout << rec.dump() << '\n';
  }
  json summary = {{"tokens", result.tokens},
                  {"prompt_length", prompt_len},
                  {"mode", std::string(rope::to_string(rope.mode))},
                  {"effective_base", rope::effective_base(rope)},
                  {"cache", a.cache},
                  {"kv_payload_bytes", cache.payload_bytes()},
                  {"kv_metadata_bytes", cache.metadata_bytes()},
                  {"weights_checksum", hex64(model.checksum())}};
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intp: training-free long-video interpolation toolkit"};
  app.require_subcommand(1);

  RearrangeArgs rearrange_args;
  auto* rearrange_cmd = app.add_subcommand(
      "rearrange", "Interleave per-subsequence encoder outputs into chronological order");
  rearrange_cmd->add_option("--input", rearrange_args.input,
                            "TokenGrid file: m groups of N frames stacked in subsequence order")
      ->required();
  rearrange_cmd->add_option("--capacity", rearrange_args.capacity, "Encoder frame capacity N")
      ->required();
  rearrange_cmd->add_option("--output", rearrange_args.output, "Interleaved TokenGrid file")->required();

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Roofline decode cost per frame count and KV width");
  analyze_cmd->add_option("--model", analyze_args.model, "Model profile JSON (default: bundled vicuna-7b)");
  analyze_cmd->add_option("--hardware", analyze_args.hardware, "Hardware profile JSON (default: bundled a100)");
  analyze_cmd->add_option("--frames", analyze_args.frames, "Frame counts")->delimiter(',')->capture_default_str();
  analyze_cmd->add_option("--bits", analyze_args.bits, "KV bit widths")->delimiter(',')->capture_default_str();
  analyze_cmd->add_option("--n-out", analyze_args.n_out, "Generated tokens")->capture_default_str();
  analyze_cmd->add_option("--format", analyze_args.format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "json"}))
      ->capture_default_str();

  QuantizeArgs quantize_args;
  auto* quantize_cmd = app.add_subcommand("quantize", "Calibrate and quantize a tensor to packed codes");
  quantize_cmd->add_option("--input", quantize_args.input, "f32 tensor file")->required();
  quantize_cmd->add_option("--output", quantize_args.output, "packed-code tensor file")->required();
  quantize_cmd->add_option("--bits", quantize_args.bits, "2, 4, 8 or 16")->capture_default_str();
  quantize_cmd->add_option("--axis", quantize_args.axis, "per_channel or per_token")->capture_default_str();
  quantize_cmd->add_option("--group-size", quantize_args.group_size,
                           "Channels per (S, Z) group; 0 = whole axis")
      ->capture_default_str();
  quantize_cmd->add_option("--calibration", quantize_args.calibration,
                           "Calibration tensor files (default: the input itself)");
  quantize_cmd->add_flag("--self-verify", quantize_args.self_verify,
                         "Check that re-quantizing the dequantized output reproduces the codes");

  DequantizeArgs dequantize_args;
  auto* dequantize_cmd = app.add_subcommand("dequantize", "Expand a packed-code file back to f32");
  dequantize_cmd->add_option("--input", dequantize_args.input)->required();
  dequantize_cmd->add_option("--output", dequantize_args.output)->required();

  SynthGridArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth-grid", "Write a TokenGrid produced by the mock encoder");
  synth_cmd->add_option("--output", synth_args.output)->required();
  synth_cmd->add_option("--frames", synth_args.frames)->capture_default_str();
  synth_cmd->add_option("--tokens", synth_args.tokens, "Tokens per frame")->capture_default_str();
  synth_cmd->add_option("--dim", synth_args.dim)->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed)->capture_default_str();

  DemoDecodeArgs demo_args;
  auto* demo_cmd = app.add_subcommand("demo-decode", "Greedy decode with the toy decoder");
  demo_cmd->add_option("--grid", demo_args.grid, "Visual TokenGrid prepended to the prompt");
  demo_cmd->add_option("--prompt", demo_args.prompt, "Text prompt token ids")->delimiter(',');
  demo_cmd->add_option("--n-out", demo_args.n_out)->capture_default_str();
  demo_cmd->add_option("--mode", demo_args.mode, "RoPE scaling: none, linear, ntk")
      ->check(CLI::IsMember({"none", "linear", "ntk"}))
      ->capture_default_str();
  demo_cmd->add_option("--base", demo_args.base)->capture_default_str();
  demo_cmd->add_option("--pretrained-window", demo_args.pretrained_window)->capture_default_str();
  demo_cmd->add_option("--target-window", demo_args.target_window)->capture_default_str();
  demo_cmd->add_option("--layers", demo_args.spec.layers)->capture_default_str();
  demo_cmd->add_option("--hidden", demo_args.spec.hidden)->capture_default_str();
  demo_cmd->add_option("--heads", demo_args.spec.heads)->capture_default_str();
  demo_cmd->add_option("--vocab", demo_args.spec.vocab)->capture_default_str();
  demo_cmd->add_option("--seed", demo_args.spec.seed)->capture_default_str();
  demo_cmd->add_option("--cache", demo_args.cache, "fp or quantized")
      ->check(CLI::IsMember({"fp", "quantized"}))
      ->capture_default_str();
  demo_cmd->add_option("--kv-bits", demo_args.kv_bits)->capture_default_str();
  demo_cmd->add_option("--key-axis", demo_args.key_axis)->capture_default_str();
  demo_cmd->add_option("--value-axis", demo_args.value_axis)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rearrange_cmd) return run_rearrange(rearrange_args);
    if (*analyze_cmd) return run_analyze(analyze_args);
    if (*quantize_cmd) return run_quantize(quantize_args);
    if (*dequantize_cmd) return run_dequantize(dequantize_args);
    if (*synth_cmd) return run_synth_grid(synth_args);
    if (*demo_cmd) return run_demo_decode(demo_args);
  } catch (const intp::Error& e) {
    std::cerr << "intp: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "intp: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
