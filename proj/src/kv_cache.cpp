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

#include "sattn/kv_cache.h"

#include <string>

#include "sattn/errors.h"

namespace sattn {

std::vector<CacheSlot> cache_layout(std::span<const LayerRole> roles, const ClaMap& cla) {
  std::vector<CacheSlot> slots(roles.size());
  for (std::size_t l = 0; l < roles.size(); ++l) {
    slots[l].source = l;
    slots[l].kind = roles[l].is_member() ? SlotKind::kValuesOnly : SlotKind::kKeysValues;
  }
  for (const auto& [child, parent] : cla) {
    if (child == parent) continue;
    if (child >= roles.size() || parent > child) {
      throw ConfigError("CLA entry " + std::to_string(child) + "->" + std::to_string(parent) +
                        " is out of order or range");
    }
    slots[child] = {SlotKind::kAliased, parent};
  }
  return slots;
}

KvCache::KvCache(std::vector<CacheSlot> slots, std::size_t n_kv_heads, std::size_t d_head)
    : width_(n_kv_heads * d_head) {
  layers_.resize(slots.size());
  for (std::size_t l = 0; l < slots.size(); ++l) {
    const CacheSlot& s = slots[l];
    if (s.kind == SlotKind::kAliased) {
      if (s.source >= l || slots[s.source].kind != SlotKind::kKeysValues) {
        throw ConfigError("layer " + std::to_string(l) + " aliases layer " +
                          std::to_string(s.source) + ", which does not own keys and values");
      }
    } else if (s.source != l) {
      throw ConfigError("non-aliased layer " + std::to_string(l) + " must be its own source");
    }
    layers_[l].slot = s;
  }
}

void KvCache::append(std::size_t layer, std::size_t n_tokens,
                     std::optional<std::span<const float>> keys,
                     std::optional<std::span<const float>> values) {
  Layer& L = layers_.at(layer);
  const std::string where = "layer " + std::to_string(layer);
  const std::size_t expect = n_tokens * width_;
  switch (L.slot.kind) {
    case SlotKind::kKeysValues:
      if (!keys || !values) throw ContractError(where + " requires both keys and values");
      break;
    case SlotKind::kValuesOnly:
      if (keys) throw ContractError(where + " is a shared-attention member and stores no keys");
      if (!values) throw ContractError(where + " requires values");
      break;
    case SlotKind::kAliased:
      if (keys || values) {
        throw ContractError(where + " aliases layer " + std::to_string(L.slot.source) +
                            " and stores no entries");
      }
      break;
  }
  if ((keys && keys->size() != expect) || (values && values->size() != expect)) {
    throw ShapeError(where + " append expects " + std::to_string(expect) + " floats");
  }
  if (keys) L.keys.insert(L.keys.end(), keys->begin(), keys->end());
  if (values) L.values.insert(L.values.end(), values->begin(), values->end());
  L.tokens += n_tokens;
}

std::size_t KvCache::tokens() const {
  if (!consistent()) throw SequencingError("cache layers hold different token counts");
  return layers_.empty() ? 0 : layers_.front().tokens;
}

bool KvCache::consistent() const noexcept {
  for (const auto& L : layers_) {
    if (L.tokens != layers_.front().tokens) return false;
  }
  return true;
}

TokenRows KvCache::keys(std::size_t layer) const {
  const Layer& L = layers_.at(layer);
  if (L.slot.kind == SlotKind::kValuesOnly) {
    throw ContractError("layer " + std::to_string(layer) + " holds no keys");
  }
  const Layer& src = layers_[L.slot.source];
  return {src.keys, src.tokens, width_};
}

TokenRows KvCache::values(std::size_t layer) const {
  const Layer& src = layers_[layers_.at(layer).slot.source];
  return {src.values, src.tokens, width_};
}

bool KvCache::stores_keys(std::size_t layer) const {
  return layers_.at(layer).slot.kind == SlotKind::kKeysValues;
}

bool KvCache::stores_values(std::size_t layer) const {
  return layers_.at(layer).slot.kind != SlotKind::kAliased;
}

std::uint64_t KvCache::key_entries() const noexcept {
  std::uint64_t n = 0;
  for (const auto& L : layers_) n += L.keys.size();
  return n;
}

std::uint64_t KvCache::value_entries() const noexcept {
  std::uint64_t n = 0;
  for (const auto& L : layers_) n += L.values.size();
  return n;
}

std::uint64_t KvCache::key_bytes(std::size_t layer) const {
  return layers_.at(layer).keys.size() * sizeof(float);
}

std::uint64_t KvCache::value_bytes(std::size_t layer) const {
  return layers_.at(layer).values.size() * sizeof(float);
}

void KvCache::publish_weights(std::size_t anchor, std::vector<RowStochasticMatrix> weights) {
  layers_.at(anchor).published = std::move(weights);
}

const std::vector<RowStochasticMatrix>* KvCache::published_weights(std::size_t anchor) const {
  const auto& p = layers_.at(anchor).published;
  return p ? &*p : nullptr;
}

void KvCache::clear_published() noexcept {
  for (auto& L : layers_) L.published.reset();
}

}  // namespace sattn
