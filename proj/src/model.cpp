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

#include "sattn/model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sattn/errors.h"

namespace sattn {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return "[" + std::to_string(r) + " x " + std::to_string(c) + "]";
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(name + " is " + shape_str(m.rows(), m.cols()) + ", expected " +
                     shape_str(rows, cols));
  }
  if (!m.all_finite()) throw DomainError(name + " has non-finite entries");
}

void expect_len(const std::vector<float>& v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    throw ShapeError(name + " has length " + std::to_string(v.size()) + ", expected " +
                     std::to_string(n));
  }
  for (float x : v) {
    if (!std::isfinite(x)) throw DomainError(name + " has non-finite entries");
  }
}

Matrix rms_norm_rows(const Matrix& x, std::span<const float> gain, float eps) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) rms_norm_into(x.row(i), gain, eps, out.row(i));
  return out;
}

void add_into(Matrix& x, const Matrix& delta) {
  auto dst = x.data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Rotates every head of every row; row i sits at first_position + i.
void rope_rows(Matrix& m, std::size_t d_head, std::size_t first_position, float theta) {
  const std::size_t heads = m.cols() / d_head;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t h = 0; h < heads; ++h) {
      rope_rotate_inplace(m.row(i).subspan(h * d_head, d_head), first_position + i, theta);
    }
  }
}

// Projection plus rotary flops: 2mkn for the matmul, 4 per rotated pair.
std::uint64_t projection_flops(std::size_t t, std::size_t d_in, std::size_t d_out, bool rotated) {
  std::uint64_t f = 2ull * t * d_in * d_out;
  if (rotated) f += 4ull * t * (d_out / 2);
  return f;
}

float silu(float v) { return v / (1.0f + std::exp(-v)); }

// Runs every transformer block over `x` (rows at absolute positions
// first_position..), appending to `cache` and publishing anchor weights.
void run_blocks(const ModelConfig& config, const Weights& weights,
                const std::vector<LayerRole>& roles, Matrix& x, std::size_t first_position,
                KvCache& cache, RuntimeCounters& counters, AttentionRecord* record) {
  const HeadLayout layout = config.head_layout();
  const std::size_t t = x.rows();
  const std::size_t d = config.d_model;
  const std::size_t dh = layout.d_head;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  cache.clear_published();

  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const LayerWeights& w = weights.layers[l];
    const LayerRole& role = roles[l];
    LayerFlops& flops = counters.flops[l];
    const std::size_t parent = config.cla_parent(l);
    const bool capture = record != nullptr;

    const Matrix h = rms_norm_rows(x, w.norm1, config.norm_eps);
    AttentionOutput attn;
    if (role.is_member()) {
      Matrix v = matmul(h, w.wv);
      flops[FlopCategory::kVProj] += projection_flops(t, d, layout.kv_width(), false);
      cache.append(l, t, std::nullopt, v.data());
      attn = attend_shared(cache, l, role.anchor, layout, capture, &flops);
    } else if (parent != l) {
      Matrix q = matmul(h, w.wq);
      rope_rows(q, dh, first_position, config.rope_theta);
      flops[FlopCategory::kQProj] += projection_flops(t, d, layout.q_width(), true);
      cache.append(l, t, std::nullopt, std::nullopt);
      attn = attend_cla(l, parent, q, cache, layout, scale, capture, &flops);
    } else {
      Matrix q = matmul(h, w.wq);
      Matrix k = matmul(h, w.wk);
      Matrix v = matmul(h, w.wv);
      rope_rows(q, dh, first_position, config.rope_theta);
      rope_rows(k, dh, first_position, config.rope_theta);
      flops[FlopCategory::kQProj] += projection_flops(t, d, layout.q_width(), true);
      flops[FlopCategory::kKProj] += projection_flops(t, d, layout.kv_width(), true);
      flops[FlopCategory::kVProj] += projection_flops(t, d, layout.kv_width(), false);
      cache.append(l, t, k.data(), v.data());
      attn = attend_standard(q, cache.keys(l), cache.values(l), layout, scale,
                             capture || role.is_anchor(), &flops);
      if (role.is_anchor()) {
        if (capture) {
          cache.publish_weights(l, attn.weights);
        } else {
          cache.publish_weights(l, std::move(attn.weights));
        }
      }
    }
    if (record) record->layers.push_back(std::move(attn.weights));

    add_into(x, matmul(attn.hidden, w.wo));
    flops[FlopCategory::kOProj] += projection_flops(t, layout.q_width(), d, false);

    const Matrix h2 = rms_norm_rows(x, w.norm2, config.norm_eps);
    Matrix gate = matmul(h2, w.w1);
    const Matrix up = matmul(h2, w.w3);
    auto g = gate.data();
    auto u = up.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = silu(g[i]) * u[i];
    add_into(x, matmul(gate, w.w2));
    flops[FlopCategory::kMlp] += 3 * projection_flops(t, d, config.d_ff, false);
  }

  for (std::size_t l = 0; l < config.n_layers; ++l) {
    counters.kv_bytes[l][KvCategory::kKeys] = cache.key_bytes(l);
    counters.kv_bytes[l][KvCategory::kValues] = cache.value_bytes(l);
  }
}

Matrix lm_logits(const ModelConfig& config, const Weights& weights, const Matrix& x) {
  Matrix logits = matmul(rms_norm_rows(x, weights.final_norm, config.norm_eps), weights.lm_head);
  if (!logits.all_finite()) throw DomainError("forward produced non-finite logits");
  return logits;
}

Matrix embed_tokens(const ModelConfig& config, const Weights& weights,
                    std::span<const TokenId> ids) {
  Matrix x(ids.size(), config.d_model);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= config.vocab_size) {
      throw InputError("token id " + std::to_string(ids[i]) + " at position " + std::to_string(i) +
                       " exceeds vocab size " + std::to_string(config.vocab_size));
    }
    const auto src = weights.embed.row(ids[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  return x;
}

KvCache make_cache(const ModelConfig& config, const std::vector<LayerRole>& roles) {
  return KvCache(cache_layout(roles, config.cla_map), config.n_kv_heads, config.d_head());
}

}  // namespace

void ModelConfig::validate() const {
  if (n_layers == 0 || n_heads == 0 || n_kv_heads == 0 || d_model == 0 || d_ff == 0 ||
      vocab_size == 0 || max_seq == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (d_head() % 2 != 0) throw ConfigError("d_head must be even for rotary embedding");
  head_layout().validate();
  if (!(rope_theta > 0.0f) || !(norm_eps >= 0.0f)) {
    throw ConfigError("rope_theta must be positive and norm_eps non-negative");
  }
  const auto roles = plan_roles(sharing_plan, n_layers);
  for (const auto& [child, parent] : cla_map) {
    if (child >= n_layers || parent > child) {
      throw ConfigError("CLA entry " + std::to_string(child) + "->" + std::to_string(parent) +
                        " must map a layer to itself or an earlier layer");
    }
    if (child == parent) continue;
    if (cla_map.count(parent) && cla_map.at(parent) != parent) {
      throw ConfigError("CLA parent " + std::to_string(parent) + " is itself a CLA child");
    }
    const auto in_span = [&](std::size_t layer) {
      for (const auto& s : sharing_plan.spans()) {
        if (s.contains(layer)) return true;
      }
      return false;
    };
    if (in_span(child)) {
      throw PlanError("layer " + std::to_string(child) +
                      " is both a CLA child and part of a sharing span");
    }
    if (roles[parent].is_member()) {
      throw PlanError("CLA parent " + std::to_string(parent) + " is a sharing member with no keys");
    }
  }
}

std::size_t ModelConfig::cla_parent(std::size_t layer) const {
  const auto it = cla_map.find(layer);
  return it == cla_map.end() ? layer : it->second;
}

ModelConfig toy_config() { return ModelConfig{}; }

void Weights::validate(const ModelConfig& config) const {
  const std::size_t d = config.d_model;
  const std::size_t qw = config.n_heads * config.d_head();
  const std::size_t kvw = config.n_kv_heads * config.d_head();
  expect_shape(embed, config.vocab_size, d, "embed");
  if (layers.size() != config.n_layers) {
    throw ShapeError("weights hold " + std::to_string(layers.size()) + " layers, config has " +
                     std::to_string(config.n_layers));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerWeights& w = layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    expect_shape(w.wq, d, qw, p + "wq");
    expect_shape(w.wk, d, kvw, p + "wk");
    expect_shape(w.wv, d, kvw, p + "wv");
    expect_shape(w.wo, qw, d, p + "wo");
    expect_shape(w.w1, d, config.d_ff, p + "w1");
    expect_shape(w.w2, config.d_ff, d, p + "w2");
    expect_shape(w.w3, d, config.d_ff, p + "w3");
    expect_len(w.norm1, d, p + "norm1");
    expect_len(w.norm2, d, p + "norm2");
  }
  expect_len(final_norm, d, "final_norm");
  expect_shape(lm_head, d, config.vocab_size, "lm_head");
}

Weights random_weights(const ModelConfig& config, std::uint64_t seed, float scale) {
  config.validate();
  std::mt19937_64 rng(seed);
  // Uniform on [-sqrt(3), sqrt(3)) has unit variance.
  const float amplitude = std::sqrt(3.0f) * scale;
  const auto fill = [&](std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (float& v : m.data()) {
      const float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
      v = (2.0f * u - 1.0f) * amplitude;
    }
    return m;
  };
  const std::size_t d = config.d_model;
  const std::size_t qw = config.n_heads * config.d_head();
  const std::size_t kvw = config.n_kv_heads * config.d_head();
  Weights w;
  w.embed = fill(config.vocab_size, d);
  w.layers.resize(config.n_layers);
  for (auto& L : w.layers) {
    L.wq = fill(d, qw);
    L.wk = fill(d, kvw);
    L.wv = fill(d, kvw);
    L.wo = fill(qw, d);
    L.w1 = fill(d, config.d_ff);
    L.w2 = fill(config.d_ff, d);
    L.w3 = fill(d, config.d_ff);
    L.norm1.assign(d, 1.0f);
    L.norm2.assign(d, 1.0f);
  }
  w.final_norm.assign(d, 1.0f);
  w.lm_head = fill(d, config.vocab_size);
  return w;
}

ForwardResult forward_full(const ModelConfig& config, const Weights& weights,
                           std::span<const TokenId> token_ids, ForwardOptions options) {
  config.validate();
  weights.validate(config);
  if (token_ids.empty()) throw InputError("forward needs at least one token");
  if (token_ids.size() > config.max_seq) {
    throw CapacityError(std::to_string(token_ids.size()) + " tokens exceed max_seq " +
                        std::to_string(config.max_seq));
  }
  const auto roles = plan_roles(config.sharing_plan, config.n_layers);
  ForwardResult result{{}, std::nullopt, RuntimeCounters(config.n_layers), make_cache(config, roles)};
  Matrix x = embed_tokens(config, weights, token_ids);
  AttentionRecord record;
  run_blocks(config, weights, roles, x, 0, result.cache, result.counters,
             options.capture ? &record : nullptr);
  result.logits = lm_logits(config, weights, x);
  if (options.capture) result.record = std::move(record);
  return result;
}

DecodeSession::DecodeSession(const ModelConfig& config, const Weights& weights,
                             std::uint64_t rng_seed)
    : config_(&config), weights_(&weights), rng_(rng_seed) {
  config.validate();
  weights.validate(config);
  roles_ = plan_roles(config.sharing_plan, config.n_layers);
  cache_ = make_cache(config, roles_);
  last_step_ = RuntimeCounters(config.n_layers);
  total_ = RuntimeCounters(config.n_layers);
}

std::vector<float> DecodeSession::decode_step(TokenId token) {
  if (tokens_seen_ >= config_->max_seq) {
    throw CapacityError("session already holds max_seq " + std::to_string(config_->max_seq) +
                        " tokens");
  }
  const TokenId ids[] = {token};
  Matrix x = embed_tokens(*config_, *weights_, ids);
  RuntimeCounters step(config_->n_layers);
  run_blocks(*config_, *weights_, roles_, x, tokens_seen_, cache_, step, nullptr);
  cache_.clear_published();
  ++tokens_seen_;
  for (std::size_t l = 0; l < config_->n_layers; ++l) total_.flops[l] += step.flops[l];
  total_.kv_bytes = step.kv_bytes;
  last_step_ = std::move(step);
  return std::move(lm_logits(*config_, *weights_, x)).release();
}

TokenId argmax(std::span<const float> logits) {
  if (logits.empty()) throw InputError("argmax of empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

namespace {

TokenId sample(std::span<const float> logits, float temperature, std::mt19937_64& rng) {
  if (!(temperature > 0.0f)) throw InputError("temperature must be positive");
  std::vector<float> probs(logits.size());
  softmax_into(logits, 1.0f / temperature, probs);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cumulative = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0f) continue;
    last_nonzero = i;
    cumulative += probs[i];
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_nonzero);
}

}  // namespace

std::vector<TokenId> generate(DecodeSession& session, std::span<const TokenId> prompt,
                              std::size_t n_steps, const SamplingMode& mode) {
  if (prompt.empty()) throw InputError("generate needs a non-empty prompt");
  const std::size_t needed = session.tokens_seen() + prompt.size() + n_steps;
  if (needed > session.config().max_seq) {
    throw CapacityError("prompt plus " + std::to_string(n_steps) + " steps needs " +
                        std::to_string(needed) + " positions, max_seq is " +
                        std::to_string(session.config().max_seq));
  }
  if (const auto* t = std::get_if<Temperature>(&mode)) session.rng().seed(t->seed);

  std::vector<float> logits;
  for (TokenId id : prompt) logits = session.decode_step(id);
  std::vector<TokenId> out;
  out.reserve(n_steps);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const TokenId next = std::holds_alternative<Greedy>(mode)
                             ? argmax(logits)
                             : sample(logits, std::get<Temperature>(mode).temperature, session.rng());
    out.push_back(next);
    if (s + 1 < n_steps) logits = session.decode_step(next);
  }
  return out;
}

float perplexity_from_logits(const Matrix& logits, std::span<const TokenId> token_ids) {
  if (token_ids.size() < 2) throw InputError("perplexity needs at least two tokens");
  if (logits.rows() < token_ids.size() - 1) {
    throw ShapeError("perplexity needs logits for " + std::to_string(token_ids.size() - 1) +
                     " positions");
  }
  float nll_sum = 0.0f;
  for (std::size_t t = 0; t + 1 < token_ids.size(); ++t) {
    const auto row = logits.row(t);
    const TokenId target = token_ids[t + 1];
    if (target >= row.size()) throw InputError("token id " + std::to_string(target) + " out of range");
    float row_max = row[0];
    for (float v : row) row_max = std::max(row_max, v);
    float sum = 0.0f;
    for (float v : row) sum += std::exp(v - row_max);
    nll_sum += row_max + std::log(sum) - row[target];
  }
  return std::exp(nll_sum / static_cast<float>(token_ids.size() - 1));
}

float perplexity(const ModelConfig& config, const Weights& weights,
                 std::span<const TokenId> token_ids) {
  if (token_ids.size() < 2) throw InputError("perplexity needs at least two tokens");
  return perplexity_from_logits(forward_full(config, weights, token_ids).logits, token_ids);
}

}  // namespace sattn
