#pragma once

#include <filesystem>
#include <string>

#include "cloudlead/core.hpp"

namespace cloudlead {

// Shortest round-trip decimal formatting; from_chars(format_double(x)) == x
// for every finite double, which is what makes persistence lossless.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

// Dataset directory layout:
//   sites.json       [{id, x_km, y_km, capacity_kw}]
//   irradiance.csv   timestamp,<id>,...  one row per step, ISO-8601 UTC
//   manifest.json    {granularity_minutes, normalized, site_max}
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Atomic text file write (temp + rename), staying inside the target dir.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace cloudlead
