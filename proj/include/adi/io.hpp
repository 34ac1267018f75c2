#pragma once

#include "adi/array.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adi {

// All writes go through a temp file + rename so an interrupted run never
// leaves a half-written artifact under its final name.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
void atomic_write(const std::filesystem::path& path, const void* data, size_t size);

std::string read_file(const std::filesystem::path& path);

// Raw little-endian f64 blob (the corpus/sample image format).
void write_f64_blob(const std::filesystem::path& path, const Array& a);
std::vector<double> read_f64_blob(const std::filesystem::path& path);

// 8-bit binary PPM preview of a {3,H,W} image in [0,1].
void write_ppm(const std::filesystem::path& path, const Array& img);

}  // namespace adi
