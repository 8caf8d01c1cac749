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

#include "sattn/report.h"

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>

#include "sattn/weights_io.h"

namespace sattn {

using nlohmann::json;

namespace {

template <typename T>
std::string shortest(T v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

json plan_json(const SharingPlan& plan) {
  json spans = json::array();
  for (const auto& s : plan.spans()) spans.push_back({s.start, s.end});
  return spans;
}

}  // namespace

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ModelConfig& config) { return config_hash(config_to_json(config)); }

json meta_json(const RunMeta& meta) {
  json m{{"tool", kToolName},
         {"version", kToolVersion},
         {"command", meta.command},
         {"config_hash", config_hash(meta.config)},
         {"config", meta.config},
         {"flags", meta.flags}};
  for (const auto& [k, v] : meta.extra.items()) m[k] = v;
  return m;
}

std::string csv_meta_line(const RunMeta& meta) { return "# meta " + meta_json(meta).dump() + "\n"; }

std::string format_number(float v) { return shortest(v); }
std::string format_number(double v) { return shortest(v); }

std::string similarity_csv(const SimilaritySurface& surface, const RunMeta& meta) {
  std::string out = csv_meta_line(meta);
  out += "layer_i,layer_j,similarity\n";
  for (std::size_t i = 0; i < surface.n_layers(); ++i) {
    for (std::size_t j = 0; j < surface.n_layers(); ++j) {
      out += std::to_string(i) + "," + std::to_string(j) + "," + format_number(surface(i, j)) + "\n";
    }
  }
  return out;
}

json similarity_json(const SimilaritySurface& surface, const GroupSegmentation& groups,
                     const RunMeta& meta) {
  json rows = json::array();
  for (std::size_t i = 0; i < surface.n_layers(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < surface.n_layers(); ++j) row.push_back(surface(i, j));
    rows.push_back(std::move(row));
  }
  json g = json::array();
  for (const auto& grp : groups) {
    g.push_back({{"start", grp.start}, {"end", grp.end}, {"mean_similarity", grp.mean_similarity}});
  }
  return json{{"meta", meta_json(meta)}, {"similarity", rows}, {"groups", g}};
}

std::string variance_csv(const VarianceSurface& variance, const VarianceSurface* wcv,
                         const RunMeta& meta) {
  std::string out = csv_meta_line(meta);
  out += "layer,head,variance,wcv\n";
  for (std::size_t l = 0; l < variance.n_layers(); ++l) {
    for (std::size_t h = 0; h < variance.n_heads(); ++h) {
      out += std::to_string(l) + "," + std::to_string(h) + "," + format_number(variance(l, h)) + "," +
             (wcv ? format_number((*wcv)(l, h)) : std::string()) + "\n";
    }
  }
  return out;
}

json variance_json(const VarianceSurface& variance, const VarianceSurface* wcv, const RunMeta& meta) {
  json v = json::array();
  json w = wcv ? json::array() : json(nullptr);
  for (std::size_t l = 0; l < variance.n_layers(); ++l) {
    json vr = json::array();
    json wr = json::array();
    for (std::size_t h = 0; h < variance.n_heads(); ++h) {
      vr.push_back(variance(l, h));
      if (wcv) wr.push_back((*wcv)(l, h));
    }
    v.push_back(std::move(vr));
    if (wcv) w.push_back(std::move(wr));
  }
  return json{{"meta", meta_json(meta)}, {"variance", v}, {"wcv", w}};
}

std::string savings_csv(std::span<const SavingsRow> rows, const RunMeta& meta) {
  std::string out = csv_meta_line(meta);
  out +=
      "seq_len,plan,flops_total,flops_delta_pct,kv_bytes_total,kv_bytes_delta_pct,softmax_flops,"
      "key_bytes_total,key_bytes_delta_pct\n";
  for (const auto& r : rows) {
    out += std::to_string(r.seq_len) + "," + r.plan.to_string() + "," + std::to_string(r.flops_total) +
           "," + format_number(r.flops_delta_pct) + "," + std::to_string(r.kv_bytes_total) + "," +
           format_number(r.kv_bytes_delta_pct) + "," + std::to_string(r.softmax_flops) + "," +
           std::to_string(r.key_bytes_total) + "," + format_number(r.key_bytes_delta_pct) + "\n";
  }
  return out;
}

json savings_json(std::span<const SavingsRow> rows, const RunMeta& meta) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"seq_len", r.seq_len},
                   {"plan", r.plan.to_string()},
                   {"spans", plan_json(r.plan)},
                   {"flops_total", r.flops_total},
                   {"flops_delta_pct", r.flops_delta_pct},
                   {"kv_bytes_total", r.kv_bytes_total},
                   {"kv_bytes_delta_pct", r.kv_bytes_delta_pct},
                   {"softmax_flops", r.softmax_flops},
                   {"key_bytes_total", r.key_bytes_total},
                   {"key_bytes_delta_pct", r.key_bytes_delta_pct}});
  }
  return json{{"meta", meta_json(meta)}, {"rows", out}};
}

json cost_report_json(const CostReport& report) {
  json layers = json::array();
  for (std::size_t l = 0; l < report.flops.size(); ++l) {
    json f = json::object();
    for (FlopCategory c : kAllFlopCategories) f[std::string(name_of(c))] = report.flops[l][c];
    json b = json::object();
    for (KvCategory c : kAllKvCategories) b[std::string(name_of(c))] = report.kv_bytes[l][c];
    layers.push_back({{"layer", l}, {"flops", f}, {"kv_bytes", b}});
  }
  return json{{"seq_len", report.seq_len},
              {"mode", report.mode == CostMode::kFullForward ? "full_forward" : "decode_step"},
              {"plan", report.plan},
              {"layers", layers},
              {"flops_total", report.total_flops()},
              {"kv_bytes_total", report.total_kv_bytes()},
              {"baseline",
               {{"flops_total", report.baseline_flops},
                {"kv_bytes_total", report.baseline_kv_bytes},
                {"key_bytes_total", report.baseline_key_bytes},
                {"flops_delta_pct", report.flops_delta_pct()},
                {"kv_bytes_delta_pct", report.kv_bytes_delta_pct()},
                {"key_bytes_delta_pct", report.key_bytes_delta_pct()}}}};
}

}  // namespace sattn
