#pragma once

#include "impulse/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace impulse {

inline constexpr int kValueFormatVersion = 1;

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& data);

std::string code_version();

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Value iterates under dir/values: header.json (format, version, backend,
/// grid or basis description, time grid) plus one k<K>.bin per iterate holding,
/// per time step, the value and continuation arrays (u64 length + doubles).
/// Reachable grids also store their point sets in support.bin.
void save_value_functions(const std::filesystem::path& dir, const std::vector<ValueFunction>& iterates);

/// Reloads iterates; the terminal slice is rebuilt from `spec`. Throws
/// ValidationError on a missing, malformed, or incompatible dump.
std::vector<ValueFunction> load_value_functions(const std::filesystem::path& dir,
                                                const ProblemSpec& spec);

}  // namespace impulse
