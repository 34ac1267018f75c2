#pragma once

#include "adi/params.hpp"

#include <filesystem>

namespace adi {

// Checkpoint layout: magic "ADICKPT1", one version byte (0x01), a text
// manifest ("params N\n" then one "name dim0 dim1 ...\n" line per parameter,
// then "end\n"), then raw little-endian f64 data per parameter in manifest
// order.
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace adi
