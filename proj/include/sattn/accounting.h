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
#include <span>
#include <string>
#include <vector>

#include "sattn/counters.h"
#include "sattn/model.h"

namespace sattn {

// Counting conventions:
//   matmul (m x k)(k x n)       2mkn flops
//   rotary embedding            4 flops per rotated pair, booked under q_proj / k_proj
//   scores, mix                 2 * d_head per unmasked (query, key) pair per head
//   softmax                     3 flops per unmasked element
//   mlp                         the three d_model x d_ff projections only
//   KV bytes                    4 bytes per cached scalar
// Norms, embeddings and the LM head are outside the per-layer categories.

enum class CostMode {
  kFullForward,  // seq_len tokens processed at once
  kDecodeStep,   // one token appended, seq_len tokens cached afterwards
};

struct CostReport {
  std::size_t seq_len = 0;
  CostMode mode = CostMode::kFullForward;
  std::string plan;
  std::vector<LayerFlops> flops;
  std::vector<LayerKvBytes> kv_bytes;

  // Same config under the empty sharing plan.
  std::uint64_t baseline_flops = 0;
  std::uint64_t baseline_kv_bytes = 0;
  std::uint64_t baseline_key_bytes = 0;

  LayerFlops flops_by_category() const;
  LayerKvBytes kv_by_category() const;
  std::uint64_t total_flops() const;
  std::uint64_t total_kv_bytes() const;

  /// Percent change versus the baseline; negative means savings.
  double flops_delta_pct() const;
  double kv_bytes_delta_pct() const;
  double key_bytes_delta_pct() const;
};

/// Closed-form prediction. Throws ConfigError/PlanError for invalid configs
/// and CapacityError if seq_len is 0 or exceeds max_seq.
CostReport predict_costs(const ModelConfig& config, std::size_t seq_len, CostMode mode);

struct CostMismatch {
  std::size_t layer = 0;
  std::string category;
  std::uint64_t predicted = 0;
  std::uint64_t observed = 0;
};

struct Reconciliation {
  std::vector<CostMismatch> mismatches;
  bool ok() const noexcept { return mismatches.empty(); }
};

/// Exact per-layer, per-category comparison of a prediction with what the
/// engine counted.
Reconciliation reconcile(const CostReport& report, const RuntimeCounters& counters);

struct SavingsRow {
  std::size_t seq_len = 0;
  SharingPlan plan;
  std::uint64_t flops_total = 0;
  double flops_delta_pct = 0.0;
  std::uint64_t kv_bytes_total = 0;
  double kv_bytes_delta_pct = 0.0;
  std::uint64_t softmax_flops = 0;
  std::uint64_t key_bytes_total = 0;
  double key_bytes_delta_pct = 0.0;
};

/// Full-forward cost of each (seq_len, plan) pair, seq_len-major. The
/// config's own sharing plan is replaced by each entry of `plans`.
std::vector<SavingsRow> savings_table(const ModelConfig& config, std::span<const std::size_t> seq_lens,
                                      std::span<const SharingPlan> plans);

}  // namespace sattn
