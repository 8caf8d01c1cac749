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

#include "sattn/attention_record.h"
#include "sattn/core_math.h"
#include "sattn/model.h"

namespace sattn {

/// How per-head matrices of one layer collapse into one matrix.
struct HeadAggregation {
  bool per_head = false;
  std::size_t head = 0;

  static HeadAggregation mean() { return {}; }
  static HeadAggregation single(std::size_t h) { return {true, h}; }
};

enum class SampleAggregation {
  kMeanMatrices,      // average padded matrices over samples, then compare layers
  kMeanSimilarities,  // compare layers per sample, then average the cosines
};

/// n_layers x n_layers cosine similarities; symmetric with a unit diagonal.
struct SimilaritySurface {
  Matrix values;

  std::size_t n_layers() const noexcept { return values.rows(); }
  float operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

/// n_layers x n_heads non-negative entries.
struct VarianceSurface {
  Matrix values;

  std::size_t n_layers() const noexcept { return values.rows(); }
  std::size_t n_heads() const noexcept { return values.cols(); }
  float operator()(std::size_t l, std::size_t h) const { return values(l, h); }
};

struct LayerGroup {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  float mean_similarity = 0.0f;
};
using GroupSegmentation = std::vector<LayerGroup>;

/// Embeds a square matrix into the top-left of a zero maxlen x maxlen one.
/// Throws ShapeError if m is not square or larger than maxlen.
Matrix pad_to(const Matrix& m, std::size_t maxlen);

/// Layer-by-layer cosine similarity of attention over a corpus. Samples are
/// reduced in ascending sample_id order. Throws InputError for an empty or
/// inconsistent corpus.
SimilaritySurface similarity_surface(std::span<const AttentionRecord> records,
                                     HeadAggregation heads = HeadAggregation::mean(),
                                     SampleAggregation samples = SampleAggregation::kMeanMatrices);

/// Entry (l, h): population variance of every unmasked weight of layer l,
/// head h, pooled across samples.
VarianceSurface variance_surface(std::span<const AttentionRecord> records);

/// S(l, h) = sum of v(l', h) for l' >= l, divided by the mean of S(., h) over
/// layers. Throws NormalizationError naming every head whose column is all
/// zero.
VarianceSurface weighted_cumulative_variance(const VarianceSurface& vs);

/// Greedy contiguous segmentation: a layer joins the current group while its
/// mean similarity to the group's layers is at least tau.
GroupSegmentation segment_groups(const SimilaritySurface& surface, float tau = 0.8f);

/// Runs a capturing forward over every sample, optionally on several worker
/// threads. records[i] belongs to samples[i] and carries sample_id i.
std::vector<AttentionRecord> capture_corpus(const ModelConfig& config, const Weights& weights,
                                            std::span<const std::vector<TokenId>> samples,
                                            std::size_t workers = 1);

}  // namespace sattn
