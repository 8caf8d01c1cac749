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

#include "sattn/accounting.h"

#include <string>

#include "sattn/errors.h"

namespace sattn {

namespace {

struct Predicted {
  std::vector<LayerFlops> flops;
  std::vector<LayerKvBytes> kv;
};

Predicted predict_layers(const ModelConfig& config, std::size_t seq_len, CostMode mode) {
  const auto roles = plan_roles(config.sharing_plan, config.n_layers);
  const std::uint64_t d = config.d_model;
  const std::uint64_t dh = config.d_head();
  const std::uint64_t heads = config.n_heads;
  const std::uint64_t qw = heads * dh;
  const std::uint64_t kvw = config.n_kv_heads * dh;
  const std::uint64_t t = seq_len;
  const bool full = mode == CostMode::kFullForward;
  const std::uint64_t rows = full ? t : 1;
  // Unmasked (query, key) pairs per head: the causal triangle, or one row.
  const std::uint64_t pairs = full ? t * (t + 1) / 2 : t;

  Predicted p{std::vector<LayerFlops>(config.n_layers), std::vector<LayerKvBytes>(config.n_layers)};
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const bool member = roles[l].is_member();
    const bool cla_child = config.cla_parent(l) != l;
    LayerFlops& f = p.flops[l];
    if (!member) {
      f[FlopCategory::kQProj] = 2 * rows * d * qw + 4 * rows * (qw / 2);
      f[FlopCategory::kScores] = 2 * dh * heads * pairs;
      f[FlopCategory::kSoftmax] = 3 * heads * pairs;
    }
    if (!member && !cla_child) f[FlopCategory::kKProj] = 2 * rows * d * kvw + 4 * rows * (kvw / 2);
    if (!cla_child) f[FlopCategory::kVProj] = 2 * rows * d * kvw;
    f[FlopCategory::kMix] = 2 * dh * heads * pairs;
    f[FlopCategory::kOProj] = 2 * rows * qw * d;
    f[FlopCategory::kMlp] = 3 * (2 * rows * d * config.d_ff);

    const std::uint64_t layer_bytes = t * kvw * sizeof(float);
    p.kv[l][KvCategory::kKeys] = (member || cla_child) ? 0 : layer_bytes;
    p.kv[l][KvCategory::kValues] = cla_child ? 0 : layer_bytes;
  }
  return p;
}

double pct_change(std::uint64_t value, std::uint64_t baseline) {
  if (baseline == 0) return 0.0;
  return 100.0 * (static_cast<double>(value) - static_cast<double>(baseline)) /
         static_cast<double>(baseline);
}

}  // namespace

LayerFlops CostReport::flops_by_category() const {
  LayerFlops sum;
  for (const auto& f : flops) sum += f;
  return sum;
}

LayerKvBytes CostReport::kv_by_category() const {
  LayerKvBytes sum;
  for (const auto& b : kv_bytes) {
    sum[KvCategory::kKeys] += b[KvCategory::kKeys];
    sum[KvCategory::kValues] += b[KvCategory::kValues];
  }
  return sum;
}

std::uint64_t CostReport::total_flops() const { return flops_by_category().total(); }
std::uint64_t CostReport::total_kv_bytes() const { return kv_by_category().total(); }

double CostReport::flops_delta_pct() const { return pct_change(total_flops(), baseline_flops); }
double CostReport::kv_bytes_delta_pct() const { return pct_change(total_kv_bytes(), baseline_kv_bytes); }
double CostReport::key_bytes_delta_pct() const {
  return pct_change(kv_by_category()[KvCategory::kKeys], baseline_key_bytes);
}

CostReport predict_costs(const ModelConfig& config, std::size_t seq_len, CostMode mode) {
  config.validate();
  if (seq_len == 0 || seq_len > config.max_seq) {
    throw CapacityError("seq_len " + std::to_string(seq_len) + " outside 1.." +
                        std::to_string(config.max_seq));
  }
  Predicted p = predict_layers(config, seq_len, mode);
  CostReport report{seq_len, mode, config.sharing_plan.to_string(), std::move(p.flops),
                    std::move(p.kv), 0, 0, 0};

  ModelConfig plain = config;
  plain.sharing_plan = {};
  const Predicted base = predict_layers(plain, seq_len, mode);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    report.baseline_flops += base.flops[l].total();
    report.baseline_kv_bytes += base.kv[l].total();
    report.baseline_key_bytes += base.kv[l][KvCategory::kKeys];
  }
  return report;
}

Reconciliation reconcile(const CostReport& report, const RuntimeCounters& counters) {
  Reconciliation r;
  if (report.flops.size() != counters.flops.size() ||
      report.kv_bytes.size() != counters.kv_bytes.size()) {
    r.mismatches.push_back({0, "layers", report.flops.size(), counters.flops.size()});
    return r;
  }
  for (std::size_t l = 0; l < report.flops.size(); ++l) {
    for (FlopCategory c : kAllFlopCategories) {
      if (report.flops[l][c] != counters.flops[l][c]) {
        r.mismatches.push_back({l, std::string(name_of(c)), report.flops[l][c], counters.flops[l][c]});
      }
    }
    for (KvCategory c : kAllKvCategories) {
      if (report.kv_bytes[l][c] != counters.kv_bytes[l][c]) {
        r.mismatches.push_back(
            {l, std::string(name_of(c)), report.kv_bytes[l][c], counters.kv_bytes[l][c]});
      }
    }
  }
  return r;
}

std::vector<SavingsRow> savings_table(const ModelConfig& config, std::span<const std::size_t> seq_lens,
                                      std::span<const SharingPlan> plans) {
  std::vector<SavingsRow> rows;
  for (std::size_t seq_len : seq_lens) {
    for (const SharingPlan& plan : plans) {
      ModelConfig c = config;
      c.sharing_plan = plan;
      const CostReport rep = predict_costs(c, seq_len, CostMode::kFullForward);
      SavingsRow row;
      row.seq_len = seq_len;
      row.plan = plan;
      row.flops_total = rep.total_flops();
      row.flops_delta_pct = rep.flops_delta_pct();
      row.kv_bytes_total = rep.total_kv_bytes();
      row.kv_bytes_delta_pct = rep.kv_bytes_delta_pct();
      row.softmax_flops = rep.flops_by_category()[FlopCategory::kSoftmax];
      row.key_bytes_total = rep.kv_by_category()[KvCategory::kKeys];
      row.key_bytes_delta_pct = rep.key_bytes_delta_pct();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace sattn
