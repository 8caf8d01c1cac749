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
#include <span>
#include <vector>

#include "sattn/core_math.h"
#include "sattn/counters.h"
#include "sattn/kv_cache.h"

namespace sattn {

/// Head geometry of one attention layer. Query head h reads KV head
/// h / (n_heads / n_kv_heads); n_kv_heads == n_heads is MHA, 1 is MQA.
struct HeadLayout {
  std::size_t n_heads = 0;
  std::size_t n_kv_heads = 0;
  std::size_t d_head = 0;

  std::size_t group() const noexcept { return n_heads / n_kv_heads; }
  std::size_t kv_head(std::size_t h) const noexcept { return h / group(); }
  std::size_t q_width() const noexcept { return n_heads * d_head; }
  std::size_t kv_width() const noexcept { return n_kv_heads * d_head; }

  /// Throws ConfigError for zero sizes or n_heads % n_kv_heads != 0.
  void validate() const;
};

struct AttentionOutput {
  /// [Tq x n_heads*d_head], heads concatenated; the caller applies wo.
  Matrix hidden;
  /// One matrix per query head when requested, otherwise empty.
  std::vector<RowStochasticMatrix> weights;
};

// Query rows are the last Tq positions of the key sequence: with Tk keys,
// query row i sits at absolute position i + (Tk - Tq). A full forward uses
// Tq == Tk; a decode step uses Tq == 1.

/// softmax(q k^T * scale) v per head. q is [Tq x n_heads*d_head], k and v
/// hold Tk >= Tq tokens of n_kv_heads*d_head floats. Adds the executed
/// scores/softmax/mix flops to `flops` when given.
AttentionOutput attend_standard(const Matrix& q, TokenRows k, TokenRows v, const HeadLayout& layout,
                                float scale, bool keep_weights = true, LayerFlops* flops = nullptr);

/// Mixes this layer's values with weights computed by the span anchor. No
/// scores or softmax are evaluated. Throws SequencingError if `weights` is
/// empty (member evaluated before its anchor).
AttentionOutput attend_shared(std::span<const RowStochasticMatrix> weights, TokenRows v,
                              const HeadLayout& layout, bool keep_weights = false,
                              LayerFlops* flops = nullptr);

/// attend_shared against the weights `anchor` published into `cache` during
/// the current step.
AttentionOutput attend_shared(const KvCache& cache, std::size_t layer, std::size_t anchor,
                              const HeadLayout& layout, bool keep_weights = false,
                              LayerFlops* flops = nullptr);

/// Standard attention with this layer's queries against the keys and values
/// cached by `parent`. Throws SequencingError if the parent has not cached
/// enough tokens yet.
AttentionOutput attend_cla(std::size_t layer, std::size_t parent, const Matrix& q,
                           const KvCache& cache, const HeadLayout& layout, float scale,
                           bool keep_weights = true, LayerFlops* flops = nullptr);

}  // namespace sattn
