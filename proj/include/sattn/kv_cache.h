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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sattn/core_math.h"
#include "sattn/sharing_plan.h"

namespace sattn {

/// Read-only token-major view: `tokens` rows of `width` floats.
struct TokenRows {
  std::span<const float> data;
  std::size_t tokens = 0;
  std::size_t width = 0;

  std::span<const float> row(std::size_t t) const { return data.subspan(t * width, width); }
};

inline TokenRows rows_of(const Matrix& m) { return {m.data(), m.rows(), m.cols()}; }

/// What a layer keeps in the cache.
enum class SlotKind {
  kKeysValues,  // Standard and Anchor layers
  kValuesOnly,  // SA members: keys are never stored
  kAliased,     // CLA children: read the parent's keys and values
};

struct CacheSlot {
  SlotKind kind = SlotKind::kKeysValues;
  std::size_t source = 0;  // layer that owns the entries; differs from self only when aliased
};

/// Slot layout for a model: roles from the sharing plan, aliasing from the
/// CLA map.
std::vector<CacheSlot> cache_layout(std::span<const LayerRole> roles, const ClaMap& cla);

/// Per-layer token-indexed K/V store. Each layer row holds n_kv_heads * d_head
/// floats per token. Anchor layers may also publish their attention weights
/// for the current step so member layers can consume them.
class KvCache {
 public:
  KvCache() = default;
  KvCache(std::vector<CacheSlot> slots, std::size_t n_kv_heads, std::size_t d_head);

  std::size_t n_layers() const noexcept { return layers_.size(); }
  std::size_t width() const noexcept { return width_; }
  const CacheSlot& slot(std::size_t layer) const { return layers_.at(layer).slot; }

  /// Appends n_tokens rows to `layer`. `keys` must be present exactly for
  /// kKeysValues slots and `values` for every non-aliased slot; supplying keys
  /// to a member (or anything to an alias) throws ContractError.
  void append(std::size_t layer, std::size_t n_tokens, std::optional<std::span<const float>> keys,
              std::optional<std::span<const float>> values);

  std::size_t tokens(std::size_t layer) const { return layers_.at(layer).tokens; }
  /// Token count shared by every layer; throws SequencingError if layers
  /// disagree (mid-step).
  std::size_t tokens() const;
  bool consistent() const noexcept;

  /// Keys visible to `layer` (the parent's for an alias). Throws
  /// ContractError for value-only layers.
  TokenRows keys(std::size_t layer) const;
  /// Values visible to `layer` (the parent's for an alias).
  TokenRows values(std::size_t layer) const;

  bool stores_keys(std::size_t layer) const;
  bool stores_values(std::size_t layer) const;

  /// Scalars physically stored, summed over layers.
  std::uint64_t key_entries() const noexcept;
  std::uint64_t value_entries() const noexcept;
  std::uint64_t key_bytes(std::size_t layer) const;
  std::uint64_t value_bytes(std::size_t layer) const;

  /// Current-step anchor weights, one matrix per query head.
  void publish_weights(std::size_t anchor, std::vector<RowStochasticMatrix> weights);
  /// nullptr if `anchor` has not published during this step.
  const std::vector<RowStochasticMatrix>* published_weights(std::size_t anchor) const;
  void clear_published() noexcept;

 private:
  struct Layer {
    CacheSlot slot;
    std::vector<float> keys;
    std::vector<float> values;
    std::size_t tokens = 0;
    std::optional<std::vector<RowStochasticMatrix>> published;
  };

  std::vector<Layer> layers_;
  std::size_t width_ = 0;
};

}  // namespace sattn
