#pragma once

#include "ivope/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace ivope {

// CSV layout: header `episode,t,s_0,...,s_{d-1},z,a,r`, one row per (episode, t),
// with the terminal state row of each episode carrying empty z/a/r fields.
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// `discrete` overrides inference; otherwise a 1-d dataset whose states are all
/// non-negative integers is treated as tabular.
Dataset read_dataset_csv(std::istream& in, std::optional<bool> discrete = std::nullopt);
Dataset read_dataset_csv(const std::filesystem::path& path, std::optional<bool> discrete = std::nullopt);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace ivope
