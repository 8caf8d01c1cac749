// Copyright 2026 The sattn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "sattn/model.h"

namespace sattn {

// On-disk model: a JSON manifest
//   {"version":1, "config":{...}, "tensors":[{"name","shape","dtype":"f32","offset","nbytes"}...]}
// next to a blob of little-endian row-major f32 tensors, each starting at a
// 64-byte aligned offset. The blob shares the manifest's stem with a ".bin"
// extension (model.json <-> model.bin).

inline constexpr int kManifestVersion = 1;
inline constexpr std::size_t kTensorAlignment = 64;

struct LoadedModel {
  ModelConfig config;
  Weights weights;
};

std::filesystem::path blob_path_for(const std::filesystem::path& manifest);

nlohmann::json config_to_json(const ModelConfig& config);
/// Throws ConfigError on missing or mistyped fields.
ModelConfig config_from_json(const nlohmann::json& j);

/// Writes manifest and blob. Throws IoError (with the path) on failure.
void save_model(const std::filesystem::path& manifest, const ModelConfig& config,
                const Weights& weights);
/// Throws IoError for unreadable files, InputError for malformed manifests
/// and ShapeError for tensors that disagree with the config.
LoadedModel load_model(const std::filesystem::path& manifest);

/// One decimal token id per line; blank lines are skipped.
std::vector<TokenId> read_token_ids(const std::filesystem::path& path);
void write_token_ids(const std::filesystem::path& path, std::span<const TokenId> ids);

/// Regular files of a corpus directory in filename order; position in the
/// returned list is the sample id.
std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& dir);

}  // namespace sattn
