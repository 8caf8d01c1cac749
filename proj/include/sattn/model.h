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
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "sattn/attention.h"
#include "sattn/attention_record.h"
#include "sattn/core_math.h"
#include "sattn/counters.h"
#include "sattn/kv_cache.h"
#include "sattn/sharing_plan.h"

namespace sattn {

using TokenId = std::uint32_t;

struct ModelConfig {
  std::size_t n_layers = 8;
  std::size_t n_heads = 4;
  std::size_t n_kv_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  std::size_t vocab_size = 256;
  std::size_t max_seq = 64;
  float rope_theta = 10000.0f;
  float norm_eps = 1e-5f;
  SharingPlan sharing_plan;
  ClaMap cla_map;

  std::size_t d_head() const noexcept { return n_heads == 0 ? 0 : d_model / n_heads; }
  HeadLayout head_layout() const noexcept { return {n_heads, n_kv_heads, d_head()}; }

  /// Throws ConfigError / PlanError when the geometry or the sharing setup is
  /// inconsistent (including CLA and SA claiming the same layer).
  void validate() const;

  /// CLA parent of `layer`, or the layer itself when it owns its cache.
  std::size_t cla_parent(std::size_t layer) const;

  bool operator==(const ModelConfig&) const = default;
};

/// The documented toy configuration: 8 layers, 4 heads, d_model 64.
ModelConfig toy_config();

struct LayerWeights {
  Matrix wq;  // [d_model x n_heads*d_head]
  Matrix wk;  // [d_model x n_kv_heads*d_head]
  Matrix wv;  // [d_model x n_kv_heads*d_head]
  Matrix wo;  // [n_heads*d_head x d_model]
  Matrix w1;  // [d_model x d_ff]
  Matrix w2;  // [d_ff x d_model]
  Matrix w3;  // [d_model x d_ff]
  std::vector<float> norm1;
  std::vector<float> norm2;

  bool operator==(const LayerWeights&) const = default;
};

struct Weights {
  Matrix embed;  // [vocab x d_model]
  std::vector<LayerWeights> layers;
  std::vector<float> final_norm;
  Matrix lm_head;  // [d_model x vocab]

  /// Throws ShapeError if any tensor disagrees with `config`, DomainError if
  /// any entry is non-finite.
  void validate(const ModelConfig& config) const;

  bool operator==(const Weights&) const = default;
};

/// Deterministic init: matrices uniform with standard deviation `scale`,
/// norm gains 1. Uses mt19937_64 bits directly so the result does not
/// depend on the standard library's distribution implementations.
Weights random_weights(const ModelConfig& config, std::uint64_t seed, float scale = 0.02f);

struct ForwardOptions {
  bool capture = false;
};

struct ForwardResult {
  Matrix logits;  // [T x vocab]
  std::optional<AttentionRecord> record;
  RuntimeCounters counters;
  KvCache cache;
};

/// Full-sequence forward under config.sharing_plan and config.cla_map.
/// Throws InputError for empty input or ids >= vocab, CapacityError for
/// T > max_seq.
ForwardResult forward_full(const ModelConfig& config, const Weights& weights,
                           std::span<const TokenId> token_ids, ForwardOptions options = {});

/// Cached incremental decoding over shared, immutable weights. Not safe for
/// concurrent use; distinct sessions are independent.
class DecodeSession {
 public:
  DecodeSession(const ModelConfig& config, const Weights& weights, std::uint64_t rng_seed = 0);

  /// Feeds one token and returns next-token logits. Throws CapacityError once
  /// max_seq tokens have been seen.
  std::vector<float> decode_step(TokenId token);

  std::size_t tokens_seen() const noexcept { return tokens_seen_; }
  const KvCache& cache() const noexcept { return cache_; }
  const ModelConfig& config() const noexcept { return *config_; }
  /// Flops of the most recent step, with cache bytes as of its end.
  const RuntimeCounters& last_step_counters() const noexcept { return last_step_; }
  /// Flops summed over all steps, with current cache bytes.
  const RuntimeCounters& total_counters() const noexcept { return total_; }
  std::mt19937_64& rng() noexcept { return rng_; }

 private:
  const ModelConfig* config_;
  const Weights* weights_;
  std::vector<LayerRole> roles_;
  KvCache cache_;
  std::size_t tokens_seen_ = 0;
  std::mt19937_64 rng_;
  RuntimeCounters last_step_;
  RuntimeCounters total_;
};

struct Greedy {};
struct Temperature {
  float temperature = 1.0f;
  std::uint64_t seed = 0;
};
using SamplingMode = std::variant<Greedy, Temperature>;

/// Index of the largest logit; ties go to the lowest id.
TokenId argmax(std::span<const float> logits);

/// Feeds `prompt` then samples `n_steps` tokens. Throws InputError for an empty
/// prompt and CapacityError when the session would exceed max_seq.
std::vector<TokenId> generate(DecodeSession& session, std::span<const TokenId> prompt,
                              std::size_t n_steps, const SamplingMode& mode);

/// exp of the mean next-token negative log-likelihood over positions 1..T-1.
float perplexity_from_logits(const Matrix& logits, std::span<const TokenId> token_ids);
/// Throws InputError when T < 2.
float perplexity(const ModelConfig& config, const Weights& weights,
                 std::span<const TokenId> token_ids);

}  // namespace sattn
