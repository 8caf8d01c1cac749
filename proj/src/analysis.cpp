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

#include "sattn/analysis.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "sattn/errors.h"

namespace sattn {

namespace {

// Record pointers sorted by sample id, after checking that every record has
// the same layer/head geometry and square matrices.
std::vector<const AttentionRecord*> ordered(std::span<const AttentionRecord> records) {
  if (records.empty()) throw InputError("attention corpus is empty");
  const std::size_t n_layers = records.front().n_layers();
  const std::size_t n_heads = records.front().n_heads();
  if (n_layers == 0 || n_heads == 0) throw InputError("attention record has no layers or heads");
  std::vector<const AttentionRecord*> out;
  for (const auto& r : records) {
    if (r.n_layers() != n_layers) throw InputError("records disagree on layer count");
    for (const auto& layer : r.layers) {
      if (layer.size() != n_heads) throw InputError("records disagree on head count");
      for (const auto& m : layer) {
        if (!m.square() || m.rows() != r.seq_len()) {
          throw InputError("sample " + std::to_string(r.sample_id) +
                           " holds a non-square or mis-sized attention matrix");
        }
      }
    }
    out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto* a, const auto* b) { return a->sample_id < b->sample_id; });
  return out;
}

Matrix aggregate_heads(const std::vector<RowStochasticMatrix>& heads, HeadAggregation agg) {
  if (agg.per_head) {
    if (agg.head >= heads.size()) {
      throw InputError("head " + std::to_string(agg.head) + " out of range for " +
                       std::to_string(heads.size()) + " heads");
    }
    return heads[agg.head].matrix();
  }
  Matrix sum(heads.front().rows(), heads.front().cols());
  for (const auto& h : heads) {
    auto dst = sum.data();
    auto src = h.matrix().data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  const float n = static_cast<float>(heads.size());
  for (float& v : sum.data()) v /= n;
  return sum;
}

Matrix pairwise_cosines(const std::vector<Matrix>& per_layer) {
  const std::size_t n = per_layer.size();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const float c = cosine_similarity(per_layer[i].data(), per_layer[j].data());
      s(i, j) = c;
      s(j, i) = c;
    }
  }
  return s;
}

}  // namespace

Matrix pad_to(const Matrix& m, std::size_t maxlen) {
  if (m.rows() != m.cols()) throw ShapeError("pad_to needs a square matrix");
  if (m.rows() > maxlen) {
    throw ShapeError("matrix of size " + std::to_string(m.rows()) + " exceeds maxlen " +
                     std::to_string(maxlen));
  }
  Matrix out(maxlen, maxlen);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::copy(m.row(i).begin(), m.row(i).end(), out.row(i).begin());
  }
  return out;
}

SimilaritySurface similarity_surface(std::span<const AttentionRecord> records,
                                     HeadAggregation heads, SampleAggregation samples) {
  const auto recs = ordered(records);
  const std::size_t n_layers = recs.front()->n_layers();
  const float n_samples = static_cast<float>(recs.size());

  if (samples == SampleAggregation::kMeanMatrices) {
    std::size_t maxlen = 0;
    for (const auto* r : recs) maxlen = std::max(maxlen, r->seq_len());
    std::vector<Matrix> mean(n_layers, Matrix(maxlen, maxlen));
    for (const auto* r : recs) {
      for (std::size_t l = 0; l < n_layers; ++l) {
        const Matrix padded = pad_to(aggregate_heads(r->layers[l], heads), maxlen);
        auto dst = mean[l].data();
        auto src = padded.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
    for (auto& m : mean) {
      for (float& v : m.data()) v /= n_samples;
    }
    return {pairwise_cosines(mean)};
  }

  Matrix acc(n_layers, n_layers);
  for (const auto* r : recs) {
    std::vector<Matrix> per_layer;
    per_layer.reserve(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) per_layer.push_back(aggregate_heads(r->layers[l], heads));
    const Matrix s = pairwise_cosines(per_layer);
    auto dst = acc.data();
    auto src = s.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  for (float& v : acc.data()) v /= n_samples;
  return {std::move(acc)};
}

VarianceSurface variance_surface(std::span<const AttentionRecord> records) {
  const auto recs = ordered(records);
  const std::size_t n_layers = recs.front()->n_layers();
  const std::size_t n_heads = recs.front()->n_heads();
  Matrix out(n_layers, n_heads);
  std::vector<float> pooled;
  for (std::size_t l = 0; l < n_layers; ++l) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      pooled.clear();
      for (const auto* r : recs) {
        const RowStochasticMatrix& a = r->layers[l][h];
        for (std::size_t i = 0; i < a.rows(); ++i) {
          const auto row = a.row(i).first(i + 1);
          pooled.insert(pooled.end(), row.begin(), row.end());
        }
      }
      out(l, h) = variance(pooled);
    }
  }
  return {std::move(out)};
}

VarianceSurface weighted_cumulative_variance(const VarianceSurface& vs) {
  const std::size_t n_layers = vs.n_layers();
  const std::size_t n_heads = vs.n_heads();
  if (n_layers == 0 || n_heads == 0) throw InputError("empty variance surface");
  Matrix out(n_layers, n_heads);
  std::vector<std::size_t> degenerate;
  for (std::size_t h = 0; h < n_heads; ++h) {
    float suffix = 0.0f;
    for (std::size_t l = n_layers; l-- > 0;) {
      if (vs(l, h) < 0.0f) throw DomainError("negative variance at layer " + std::to_string(l));
      suffix += vs(l, h);
      out(l, h) = suffix;
    }
    float total = 0.0f;
    for (std::size_t l = 0; l < n_layers; ++l) total += out(l, h);
    const float mean = total / static_cast<float>(n_layers);
    if (mean == 0.0f) {
      degenerate.push_back(h);
      continue;
    }
    for (std::size_t l = 0; l < n_layers; ++l) out(l, h) /= mean;
  }
  if (!degenerate.empty()) {
    std::string list;
    for (auto h : degenerate) list += (list.empty() ? "" : ",") + std::to_string(h);
    throw NormalizationError("zero cumulative variance for heads " + list, std::move(degenerate));
  }
  return {std::move(out)};
}

GroupSegmentation segment_groups(const SimilaritySurface& surface, float tau) {
  if (!(tau > 0.0f && tau < 1.0f)) throw InputError("tau must lie in (0, 1)");
  const std::size_t n = surface.n_layers();
  GroupSegmentation groups;
  if (n == 0) return groups;

  const auto mean_within = [&](std::size_t start, std::size_t end) {
    if (start == end) return surface(start, start);
    float sum = 0.0f;
    std::size_t pairs = 0;
    for (std::size_t i = start; i <= end; ++i) {
      for (std::size_t j = i + 1; j <= end; ++j) {
        sum += surface(i, j);
        ++pairs;
      }
    }
    return sum / static_cast<float>(pairs);
  };

  std::size_t start = 0;
  for (std::size_t c = 1; c <= n; ++c) {
    bool joins = false;
    if (c < n) {
      float sum = 0.0f;
      for (std::size_t m = start; m < c; ++m) sum += surface(c, m);
      joins = sum / static_cast<float>(c - start) >= tau;
    }
    if (!joins) {
      groups.push_back({start, c - 1, mean_within(start, c - 1)});
      start = c;
    }
  }
  return groups;
}

std::vector<AttentionRecord> capture_corpus(const ModelConfig& config, const Weights& weights,
                                            std::span<const std::vector<TokenId>> samples,
                                            std::size_t workers) {
  std::vector<AttentionRecord> records(samples.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  const auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      try {
        auto result = forward_full(config, weights, samples[i], {.capture = true});
        records[i] = std::move(*result.record);
        records[i].sample_id = i;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(samples.size(), 1));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace sattn
