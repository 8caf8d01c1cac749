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

#include "sattn/attention.h"

#include <string>

#include "sattn/errors.h"

namespace sattn {

namespace {

// out[i, h] = sum_j A_h(i, j) v[j, kv(h)] over the causal prefix, j ascending.
Matrix mix_values(std::span<const RowStochasticMatrix> weights, TokenRows v,
                  const HeadLayout& layout, LayerFlops* flops) {
  const std::size_t tq = weights.front().rows();
  const std::size_t dh = layout.d_head;
  Matrix out(tq, layout.q_width());
  std::uint64_t mix = 0;
  for (std::size_t h = 0; h < layout.n_heads; ++h) {
    const RowStochasticMatrix& a = weights[h];
    const std::size_t kvh = layout.kv_head(h);
    for (std::size_t i = 0; i < tq; ++i) {
      float* dst = out.row(i).data() + h * dh;
      const std::size_t visible = i + a.offset() + 1;
      for (std::size_t j = 0; j < visible; ++j) {
        const float w = a(i, j);
        const float* src = v.row(j).data() + kvh * dh;
        for (std::size_t d = 0; d < dh; ++d) dst[d] += w * src[d];
      }
      mix += 2 * dh * visible;
    }
  }
  if (flops) (*flops)[FlopCategory::kMix] += mix;
  return out;
}

void check_kv(TokenRows rows, const HeadLayout& layout, const char* what) {
  if (rows.width != layout.kv_width() || rows.data.size() < rows.tokens * rows.width) {
    throw ShapeError(std::string(what) + " rows have width " + std::to_string(rows.width) +
                     ", expected " + std::to_string(layout.kv_width()));
  }
}

}  // namespace

void HeadLayout::validate() const {
  if (n_heads == 0 || n_kv_heads == 0 || d_head == 0) {
    throw ConfigError("head layout sizes must be positive");
  }
  if (n_heads % n_kv_heads != 0) {
    throw ConfigError("n_heads " + std::to_string(n_heads) + " not divisible by n_kv_heads " +
                      std::to_string(n_kv_heads));
  }
}

AttentionOutput attend_standard(const Matrix& q, TokenRows k, TokenRows v, const HeadLayout& layout,
                                float scale, bool keep_weights, LayerFlops* flops) {
  layout.validate();
  check_kv(k, layout, "key");
  check_kv(v, layout, "value");
  if (q.cols() != layout.q_width()) {
    throw ShapeError("query width " + std::to_string(q.cols()) + ", expected " +
                     std::to_string(layout.q_width()));
  }
  if (k.tokens != v.tokens || q.rows() > k.tokens || q.rows() == 0) {
    throw ShapeError("attention with " + std::to_string(q.rows()) + " queries, " +
                     std::to_string(k.tokens) + " keys, " + std::to_string(v.tokens) + " values");
  }
  const std::size_t tq = q.rows();
  const std::size_t tk = k.tokens;
  const std::size_t offset = tk - tq;
  const std::size_t dh = layout.d_head;

  std::vector<RowStochasticMatrix> weights;
  weights.reserve(layout.n_heads);
  std::uint64_t causal_entries = 0;
  for (std::size_t h = 0; h < layout.n_heads; ++h) {
    const std::size_t kvh = layout.kv_head(h);
    Matrix scores(tq, tk);
    for (std::size_t i = 0; i < tq; ++i) {
      const auto qi = q.row(i).subspan(h * dh, dh);
      const std::size_t visible = i + offset + 1;
      for (std::size_t j = 0; j < visible; ++j) scores(i, j) = dot(qi, k.row(j).subspan(kvh * dh, dh));
      causal_entries += visible;
    }
    weights.push_back(causal_softmax(scores, scale));
  }
  if (flops) {
    (*flops)[FlopCategory::kScores] += 2 * dh * causal_entries;
    (*flops)[FlopCategory::kSoftmax] += 3 * causal_entries;
  }
  AttentionOutput out{mix_values(weights, v, layout, flops), {}};
  if (keep_weights) out.weights = std::move(weights);
  return out;
}

AttentionOutput attend_shared(std::span<const RowStochasticMatrix> weights, TokenRows v,
                              const HeadLayout& layout, bool keep_weights, LayerFlops* flops) {
  layout.validate();
  if (weights.empty()) throw SequencingError("shared attention weights absent");
  check_kv(v, layout, "value");
  if (weights.size() != layout.n_heads) {
    throw ShapeError("shared attention got " + std::to_string(weights.size()) +
                     " head matrices for " + std::to_string(layout.n_heads) + " heads");
  }
  for (const auto& a : weights) {
    if (a.cols() != v.tokens || a.rows() != weights.front().rows()) {
      throw ShapeError("anchor weights span " + std::to_string(a.cols()) + " tokens, layer has " +
                       std::to_string(v.tokens));
    }
  }
  AttentionOutput out{mix_values(weights, v, layout, flops), {}};
  if (keep_weights) out.weights.assign(weights.begin(), weights.end());
  return out;
}

AttentionOutput attend_shared(const KvCache& cache, std::size_t layer, std::size_t anchor,
                              const HeadLayout& layout, bool keep_weights, LayerFlops* flops) {
  const auto* published = cache.published_weights(anchor);
  if (!published) {
    throw SequencingError("member layer " + std::to_string(layer) + " evaluated before anchor " +
                          std::to_string(anchor) + " published its weights");
  }
  return attend_shared(*published, cache.values(layer), layout, keep_weights, flops);
}

AttentionOutput attend_cla(std::size_t layer, std::size_t parent, const Matrix& q,
                           const KvCache& cache, const HeadLayout& layout, float scale,
                           bool keep_weights, LayerFlops* flops) {
  if (parent > layer) {
    throw SequencingError("CLA parent " + std::to_string(parent) + " follows layer " +
                          std::to_string(layer));
  }
  if (parent >= cache.n_layers() || !cache.stores_keys(parent) ||
      cache.tokens(parent) < q.rows() || cache.tokens(parent) < cache.tokens(layer)) {
    throw SequencingError("CLA parent " + std::to_string(parent) + " has no cached entries for layer " +
                          std::to_string(layer));
  }
  return attend_standard(q, cache.keys(parent), cache.values(parent), layout, scale, keep_weights,
                         flops);
}

}  // namespace sattn
