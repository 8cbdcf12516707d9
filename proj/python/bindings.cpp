#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "intp/decoder.hpp"
#include "intp/error.hpp"
#include "intp/kv_quant.hpp"
#include "intp/profiles.hpp"
#include "intp/rearrange.hpp"
#include "intp/roofline.hpp"
#include "intp/rope.hpp"

namespace py = pybind11;
using namespace intp;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I32Array = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

rope::RopeConfig make_rope(int head_dim, double base, const std::string& mode, std::int64_t l,
                           std::int64_t l_prime) {
  rope::RopeConfig c;
  c.head_dim = head_dim;
  c.base = base;
  c.mode = rope::parse_scaling_mode(mode);
  c.pretrained_window = l;
  c.target_window = l_prime;
  c.validate();
  return c;
}

std::vector<std::size_t> shape_of(const py::array& a) {
  return {a.shape(), a.shape() + a.ndim()};
}

Tensor to_tensor(const F32Array& a) {
  require(a.ndim() >= 1, "expected an array with at least one axis");
  return Tensor(shape_of(a), std::vector<float>(a.data(), a.data() + a.size()));
}

template <typename T>
py::array_t<T> to_array(const std::vector<std::size_t>& shape, const std::vector<T>& values) {
  py::array_t<T> out(std::vector<py::ssize_t>(shape.begin(), shape.end()));
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

kv_quant::QuantScheme make_scheme(int bits, const std::string& axis, int group_size) {
  kv_quant::QuantScheme s{bits, kv_quant::parse_axis(axis), group_size};
  s.validate();
  return s;
}

kv_quant::QuantParams make_params(const F32Array& scale, const I32Array& zero) {
  return {{scale.data(), scale.data() + scale.size()}, {zero.data(), zero.data() + zero.size()}};
}

rearrange::TokenGrid to_grid(const F32Array& a) {
  require(a.ndim() == 3, "expected a [frames, tokens, dim] array");
  return {static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
          std::vector<float>(a.data(), a.data() + a.size())};
}

py::array_t<float> from_grid(const rearrange::TokenGrid& g) {
  const std::vector<std::size_t> shape{std::size_t(g.frames()), std::size_t(g.tokens_per_frame()),
                                       std::size_t(g.dim())};
  py::array_t<float> out(std::vector<py::ssize_t>(shape.begin(), shape.end()));
  std::copy(g.data().begin(), g.data().end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "RoPE interpolation, frame rearrangement, KV quantization and roofline analysis";
  py::register_exception<Error>(m, "IntpError", PyExc_ValueError);

  m.def(
      "ntk_base",
      [](double base, int head_dim, std::int64_t l, std::int64_t l_prime) {
        return rope::ntk_base(make_rope(head_dim, base, "ntk", l, l_prime));
      },
      py::arg("base") = 10000.0, py::arg("head_dim") = 128, py::arg("pretrained_window"),
      py::arg("target_window"));

  m.def(
      "frequencies",
      [](int head_dim, double base, const std::string& mode, std::int64_t l, std::int64_t l_prime) {
        const auto f = rope::compute_frequencies(make_rope(head_dim, base, mode, l, l_prime));
        return to_array<double>({f.theta.size()}, f.theta);
      },
      py::arg("head_dim") = 128, py::arg("base") = 10000.0, py::arg("mode") = "none",
      py::arg("pretrained_window") = 4096, py::arg("target_window") = 4096);

  m.def(
      "interpolate_position",
      [](std::int64_t pos, const std::string& mode, std::int64_t l, std::int64_t l_prime) {
        return rope::interpolate_position(pos, make_rope(128, 10000.0, mode, l, l_prime));
      },
      py::arg("position"), py::arg("mode"), py::arg("pretrained_window"), py::arg("target_window"));

  m.def(
      "rotate",
      [](const F64Array& x, double position, double base, const std::string& mode, std::int64_t l,
         std::int64_t l_prime) {
        require(x.ndim() == 1, "rotate expects a 1-D vector");
        const auto cfg = make_rope(static_cast<int>(x.size()), base, mode, l, l_prime);
        std::vector<double> v(x.data(), x.data() + x.size());
        rope::rotate_inplace<double>(v, position, rope::compute_frequencies(cfg));
        return to_array<double>({v.size()}, v);
      },
      py::arg("x"), py::arg("position"), py::arg("base") = 10000.0, py::arg("mode") = "none",
      py::arg("pretrained_window") = 4096, py::arg("target_window") = 4096,
      "Rotates adjacent pairs of x by position * theta. The position is used as given.");

  m.def(
      "plan_subsequences",
      [](int total, int capacity) { return rearrange::plan_subsequences(total, capacity).subsequences; },
      py::arg("total_frames"), py::arg("encoder_capacity"));

  m.def(
      "split",
      [](const F32Array& grid, int capacity) {
        const auto g = to_grid(grid);
        py::list out;
        for (const auto& part : rearrange::split_by_plan(g, rearrange::plan_subsequences(g.frames(), capacity)))
          out.append(from_grid(part));
        return out;
      },
      py::arg("grid"), py::arg("encoder_capacity"));

  m.def(
      "interleave",
      [](const std::vector<F32Array>& groups, int total, int capacity) {
        std::vector<rearrange::TokenGrid> parts;
        for (const auto& g : groups) parts.push_back(to_grid(g));
        return from_grid(rearrange::interleave_tokens(parts, rearrange::plan_subsequences(total, capacity)));
      },
      py::arg("groups"), py::arg("total_frames"), py::arg("encoder_capacity"));

  m.def("sample_frame_indices", &rearrange::sample_frame_indices, py::arg("video_length"),
        py::arg("count"));

  m.def(
      "calibrate",
      [](const std::vector<F32Array>& samples, int bits, const std::string& axis, int group_size) {
        std::vector<Tensor> ts;
        for (const auto& s : samples) ts.push_back(to_tensor(s));
        const auto p = kv_quant::calibrate(ts, make_scheme(bits, axis, group_size));
        return py::make_tuple(to_array<float>({p.scale.size()}, p.scale),
                              to_array<std::int32_t>({p.zero_point.size()}, p.zero_point));
      },
      py::arg("samples"), py::arg("bits") = 2, py::arg("axis") = "per_channel", py::arg("group_size") = 1,
      "Min-max calibration; returns (scale, zero_point) arrays, one entry per group.");

  m.def(
      "quantize",
      [](const F32Array& x, const F32Array& scale, const I32Array& zero, int bits, const std::string& axis,
         int group_size) {
        const auto layer =
            kv_quant::quantize(to_tensor(x), make_params(scale, zero), make_scheme(bits, axis, group_size));
        return to_array<std::int32_t>(layer.original_shape, layer.codes);
      },
      py::arg("x"), py::arg("scale"), py::arg("zero_point"), py::arg("bits") = 2,
      py::arg("axis") = "per_channel", py::arg("group_size") = 1);

  m.def(
      "dequantize",
      [](const I32Array& codes, const F32Array& scale, const I32Array& zero, int bits, const std::string& axis,
         int group_size) {
        kv_quant::QuantizedCacheLayer layer;
        layer.scheme = make_scheme(bits, axis, group_size);
        layer.params = make_params(scale, zero);
        layer.original_shape = shape_of(codes);
        layer.codes.assign(codes.data(), codes.data() + codes.size());
        const auto t = kv_quant::dequantize(layer);
        return to_array<float>(t.shape, t.data);
      },
      py::arg("codes"), py::arg("scale"), py::arg("zero_point"), py::arg("bits") = 2,
      py::arg("axis") = "per_channel", py::arg("group_size") = 1);

  m.def(
      "analyze",
      [](const std::vector<int>& frames, const std::vector<int>& bits, std::int64_t n_out) {
        const auto rows = roofline::analyze(profiles::bundled_vicuna_7b(), profiles::bundled_a100(), frames,
                                            bits, n_out);
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["frames"] = r.frames;
          d["kv_bits"] = r.kv_bits;
          d["seq_len"] = r.seq_len;
          d["ops_tera"] = r.ops_total / 1e12;
          d["decode_time_ms"] = r.decode_time_ms;
          d["total_memory_gb"] = r.total_memory_bytes / 1e9;
          d["kv_gb"] = r.kv_bytes / 1e9;
          out.append(d);
        }
        return out;
      },
      py::arg("frames") = std::vector<int>{8, 16, 32, 64, 128}, py::arg("bits") = std::vector<int>{16, 2},
      py::arg("n_out") = 1000, "Roofline rows for the bundled Vicuna-7B / A100 profiles.");

  m.def(
      "decode",
      [](const std::vector<int>& prompt, int n_out, const std::string& mode, std::int64_t l,
         std::int64_t l_prime, int layers, int hidden, int heads, int vocab, std::uint64_t seed,
         std::optional<int> kv_bits) {
        const decoder::DecoderSpec spec{layers, hidden, heads, vocab, seed};
        const decoder::Decoder model(spec);
        const auto cfg = make_rope(spec.head_dim(), 10000.0, mode, l, l_prime);
        auto cache = decoder::KvCache::full_precision(spec);
        if (kv_bits) {
          std::vector<float> emb;
          for (int id : prompt) {
            require(id >= 0 && id < vocab, "prompt id out of range");
            const auto e = model.embedding(id);
            emb.insert(emb.end(), e.begin(), e.end());
          }
          cache = decoder::KvCache::quantized(
              spec, decoder::calibrate_cache(model, emb, cfg, kv_quant::QuantScheme::keys(*kv_bits),
                                             kv_quant::QuantScheme::values(*kv_bits)));
        }
        py::gil_scoped_release release;
        return decoder::decode(model, {}, prompt, n_out, cfg, cache).tokens;
      },
      py::arg("prompt"), py::arg("n_out") = 16, py::arg("mode") = "ntk", py::arg("pretrained_window") = 64,
      py::arg("target_window") = 256, py::arg("layers") = 2, py::arg("hidden") = 64, py::arg("heads") = 4,
      py::arg("vocab") = 128, py::arg("seed") = 42, py::arg("kv_bits") = py::none(),
      "Greedy decode with the random toy decoder; kv_bits selects a quantized cache.");
}
