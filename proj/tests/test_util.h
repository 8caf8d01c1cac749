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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sattn/model.h"

namespace sattn::testing {

inline constexpr std::uint64_t kToySeed = 42;

inline std::vector<TokenId> random_ids(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = static_cast<TokenId>(rng() % vocab);
  return ids;
}

inline float max_abs_diff(std::span<const float> a, std::span<const float> b) {
  float m = 0.0f;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

inline ModelConfig with_plan(ModelConfig c, const char* plan) {
  c.sharing_plan = SharingPlan::parse(plan);
  return c;
}

/// The strategy matrix used for parity and reconciliation: empty plan, SA 5:6,
/// SA 2:6, GQA with two KV heads, CLA adjacent pairs.
struct Strategy {
  const char* name;
  ModelConfig config;
};

inline std::vector<Strategy> strategy_matrix() {
  std::vector<Strategy> s;
  s.push_back({"mha", toy_config()});
  s.push_back({"sa_5_6", with_plan(toy_config(), "5:6")});
  s.push_back({"sa_2_6", with_plan(toy_config(), "2:6")});
  ModelConfig gqa = toy_config();
  gqa.n_kv_heads = 2;
  s.push_back({"gqa_hk2", gqa});
  ModelConfig cla = toy_config();
  cla.cla_map = default_cla_pairs(cla.n_layers);
  s.push_back({"cla_pairs", cla});
  return s;
}

}  // namespace sattn::testing
