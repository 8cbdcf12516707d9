#include "intp/profiles.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "intp/error.hpp"
#include "intp_bundled_profiles.hpp"

namespace intp::profiles {

using nlohmann::json;

namespace {

json parse_object(std::string_view text, std::string_view what) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kFormat, std::string(what) + " profile is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::kFormat, std::string(what) + " profile must be a JSON object");
  return doc;
}

double number(const json& value, const std::string& key) {
  if (!value.is_number()) fail(ErrorKind::kFormat, "profile key '" + key + "' must be a number");
  return value.get<double>();
}

int integer(const json& value, const std::string& key) {
  if (!value.is_number_integer() &&
      !(value.is_number_float() && value.get<double>() == static_cast<int>(value.get<double>()))) {
    fail(ErrorKind::kFormat, "profile key '" + key + "' must be an integer");
  }
  return static_cast<int>(value.get<double>());
}

std::string text(const json& value, const std::string& key) {
  if (!value.is_string()) fail(ErrorKind::kFormat, "profile key '" + key + "' must be a string");
  return value.get<std::string>();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

roofline::ModelSpec parse_model(std::string_view json_text) {
  const json doc = parse_object(json_text, "model");
  roofline::ModelSpec m;
  bool seen_params = false, seen_layers = false, seen_hidden = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "name") m.name = text(value, key);
    else if (key == "n_params") { m.n_params = number(value, key); seen_params = true; }
    else if (key == "layers") { m.layers = integer(value, key); seen_layers = true; }
    else if (key == "hidden") { m.hidden = integer(value, key); seen_hidden = true; }
    else if (key == "weight_bytes_per_param") m.weight_bytes_per_param = number(value, key);
    else if (key == "tokens_per_frame") m.tokens_per_frame = integer(value, key);
    else if (key == "activation_overhead_bytes") m.activation_overhead_bytes = number(value, key);
    else fail(ErrorKind::kFormat, "unknown model profile key '" + key + "'");
  }
  if (!seen_params) fail(ErrorKind::kFormat, "model profile is missing 'n_params'");
  if (!seen_layers) fail(ErrorKind::kFormat, "model profile is missing 'layers'");
  if (!seen_hidden) fail(ErrorKind::kFormat, "model profile is missing 'hidden'");
  m.validate();
  return m;
}

roofline::HardwareSpec parse_hardware(std::string_view json_text) {
  const json doc = parse_object(json_text, "hardware");
  roofline::HardwareSpec h;
  bool seen_compute = false, seen_bw = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "name") h.name = text(value, key);
    else if (key == "peak_compute") { h.peak_compute = number(value, key); seen_compute = true; }
    else if (key == "peak_bandwidth") { h.peak_bandwidth = number(value, key); seen_bw = true; }
    else if (key == "bandwidth_efficiency") h.bandwidth_efficiency = number(value, key);
    else fail(ErrorKind::kFormat, "unknown hardware profile key '" + key + "'");
  }
  if (!seen_compute) fail(ErrorKind::kFormat, "hardware profile is missing 'peak_compute'");
  if (!seen_bw) fail(ErrorKind::kFormat, "hardware profile is missing 'peak_bandwidth'");
  h.validate();
  return h;
}

roofline::ModelSpec load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path));
}

roofline::HardwareSpec load_hardware(const std::filesystem::path& path) {
  return parse_hardware(read_file(path));
}

std::string_view bundled_vicuna_7b_json() { return detail::kVicuna7bJson; }
std::string_view bundled_a100_json() { return detail::kA100Json; }

roofline::ModelSpec bundled_vicuna_7b() { return parse_model(bundled_vicuna_7b_json()); }
roofline::HardwareSpec bundled_a100() { return parse_hardware(bundled_a100_json()); }

}  // namespace intp::profiles
