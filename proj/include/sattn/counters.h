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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace sattn {

enum class FlopCategory : std::size_t {
  kQProj,
  kKProj,
  kVProj,
  kScores,
  kSoftmax,
  kMix,
  kOProj,
  kMlp,
};
inline constexpr std::size_t kFlopCategoryCount = 8;

enum class KvCategory : std::size_t { kKeys, kValues };
inline constexpr std::size_t kKvCategoryCount = 2;

std::string_view name_of(FlopCategory c);
std::string_view name_of(KvCategory c);

inline constexpr std::array<FlopCategory, kFlopCategoryCount> kAllFlopCategories = {
    FlopCategory::kQProj,  FlopCategory::kKProj,   FlopCategory::kVProj, FlopCategory::kScores,
    FlopCategory::kSoftmax, FlopCategory::kMix,    FlopCategory::kOProj, FlopCategory::kMlp};
inline constexpr std::array<KvCategory, kKvCategoryCount> kAllKvCategories = {KvCategory::kKeys,
                                                                              KvCategory::kValues};

/// Per-layer flop tally, one counter per category.
struct LayerFlops {
  std::array<std::uint64_t, kFlopCategoryCount> counts{};

  std::uint64_t& operator[](FlopCategory c) { return counts[static_cast<std::size_t>(c)]; }
  std::uint64_t operator[](FlopCategory c) const { return counts[static_cast<std::size_t>(c)]; }
  std::uint64_t total() const noexcept;

  LayerFlops& operator+=(const LayerFlops& other) noexcept;
  bool operator==(const LayerFlops&) const = default;
};

/// Bytes resident in the KV cache for one layer.
struct LayerKvBytes {
  std::array<std::uint64_t, kKvCategoryCount> counts{};

  std::uint64_t& operator[](KvCategory c) { return counts[static_cast<std::size_t>(c)]; }
  std::uint64_t operator[](KvCategory c) const { return counts[static_cast<std::size_t>(c)]; }
  std::uint64_t total() const noexcept { return counts[0] + counts[1]; }

  bool operator==(const LayerKvBytes&) const = default;
};

/// What the engine observed while running: flops actually executed per
/// layer, and cache bytes held per layer when the run finished.
struct RuntimeCounters {
  std::vector<LayerFlops> flops;
  std::vector<LayerKvBytes> kv_bytes;

  explicit RuntimeCounters(std::size_t n_layers = 0) : flops(n_layers), kv_bytes(n_layers) {}
};

}  // namespace sattn
