// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "emodiff/nn/params.hpp"

namespace emodiff::nn {

using ConfigBlob = std::map<std::string, std::string>;

template <typename T>
struct Checkpoint {
  ConfigBlob config;
  ParamSet<T> params;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

// Shortest round-tripping decimal form of a double.
std::string format_real(double v);
// Throws ConfigError when the key is absent.
const std::string& blob_at(const ConfigBlob& blob, const std::string& key);
double blob_real(const ConfigBlob& blob, const std::string& key);
long blob_int(const ConfigBlob& blob, const std::string& key);

// "EDCK" container, little-endian:
//   magic[4] | u16 version | u32 blob bytes | blob ("key=value\n" lines)
//   | u32 tensor count | per tensor: u16 name bytes | name | u32 rows
//   | u32 cols | u8 element bytes (4 or 8) | payload, row-major
// Tensors are written at the precision of T.
template <typename T>
std::string encode_checkpoint(const ConfigBlob& config, const ParamSet<T>& params);
template <typename T>
Checkpoint<T> decode_checkpoint(const std::string& bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ConfigBlob& config,
                     const ParamSet<T>& params);
// Stored tensors are converted to T when the precisions differ.
template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace emodiff::nn
