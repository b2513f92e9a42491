#pragma once

// Checkpoint layout (one directory per model):
//
//   manifest.json  JSON object; always carries "format": "frgen-checkpoint-v1"
//                  and "tensors": [{"name", "rows", "cols"}...] plus whatever
//                  model metadata the caller supplies.
//   tensors.bin    "FRGT" magic, u32 version (1), u64 tensor count, then per
//                  tensor: u32 name length, name bytes, i64 rows, i64 cols,
//                  rows*cols float64 values in row-major order. Little-endian.
//
// Each file is written to a temporary sibling and renamed into place;
// tensors.bin is committed before manifest.json, so a manifest never refers
// to a partially written archive.

#include "frgen/nn/params.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace frgen::nn {

struct Checkpoint {
  nlohmann::json manifest;
  std::map<std::string, Matrix> tensors;
};

void save_checkpoint(const std::filesystem::path& dir, nlohmann::json manifest,
                     const ParameterCollection& params);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Writes `contents` to `path` via temp file + rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace frgen::nn
