#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gwlimits/process_model.hpp"

namespace gwlimits {

/// Parses "0.25", "1/4", "-3/8" or "1e-3". Rationals are evaluated as a
/// single correctly rounded division of two exact integers.
double parse_probability(std::string_view text);

/// Process file schema:
///   { "types": V,
///     "rules": [ {"type": k, "offspring": [n_1..n_V], "prob": p}, ... ] }
/// with k 1-based and p a JSON number, decimal string or "a/b" string.
ProcessSpec parse_process_json(std::string_view text);
ProcessSpec load_process_file(const std::filesystem::path& path);

std::string process_to_json(const ProcessSpec& spec);

}  // namespace gwlimits
