#pragma once
// Minimal PLY reader/writer for xyz float32 vertex clouds (ASCII or
// binary_little_endian). Frame tags travel out-of-band in dataset manifests.

#include <filesystem>

#include "copse/geometry.hpp"

namespace copse::geom {

void write_ply(const std::filesystem::path& path, const Cloud& pts, bool binary = true);
Cloud read_ply(const std::filesystem::path& path);

}  // namespace copse::geom
