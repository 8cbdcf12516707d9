#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "intp/roofline.hpp"

namespace intp::profiles {

// Profiles are flat JSON objects keyed by the spec field names. Unknown keys
// and wrongly typed values are rejected with an error naming the key.
roofline::ModelSpec parse_model(std::string_view json_text);
roofline::HardwareSpec parse_hardware(std::string_view json_text);

roofline::ModelSpec load_model(const std::filesystem::path& path);
roofline::HardwareSpec load_hardware(const std::filesystem::path& path);

// Copies of profiles/vicuna-7b.json and profiles/a100.json compiled in.
roofline::ModelSpec bundled_vicuna_7b();
roofline::HardwareSpec bundled_a100();

std::string_view bundled_vicuna_7b_json();
std::string_view bundled_a100_json();

}  // namespace intp::profiles
