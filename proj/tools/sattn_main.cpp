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

// Command-line front end: model fabrication, generation, perplexity,
// attention analyses, cost budgeting and parity checks.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sattn/accounting.h"
#include "sattn/analysis.h"
#include "sattn/errors.h"
#include "sattn/model.h"
#include "sattn/report.h"
#include "sattn/weights_io.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sattn;

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string model;
  std::string ids;
  std::string corpus;
  std::string out;
  std::vector<std::string> spans;
  std::vector<std::string> plans;
  bool cla_pairs = false;
  std::uint64_t seed = 42;

  // Config flags for make-toy and budget.
  ModelConfig config = toy_config();

  std::size_t steps = 16;
  float temperature = 0.0f;
  float tau = 0.8f;
  std::string head_agg = "mean";
  std::string sample_agg = "mean_matrices";
  std::size_t workers = 1;
  std::vector<std::size_t> seq_lens;
  std::size_t length = 32;
};

json flags_json(const Options& o) {
  json f{{"spans", o.spans}, {"cla_pairs", o.cla_pairs}};
  if (!o.model.empty()) f["model"] = o.model;
  if (!o.ids.empty()) f["ids"] = o.ids;
  if (!o.corpus.empty()) f["corpus"] = o.corpus;
  if (!o.out.empty()) f["out"] = o.out;
  return f;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_outputs(const Options& o, const std::string& csv, const json& doc) {
  write_text(o.out + ".csv", csv);
  write_text(o.out + ".json", doc.dump(2) + "\n");
}

SharingPlan plan_from_spans(const std::vector<std::string>& spans) {
  std::vector<LayerSpan> out;
  for (const auto& s : spans) out.push_back(SharingPlan::parse_span(s));
  return SharingPlan(std::move(out));
}

// Applies --span / --cla-pairs on top of a config and revalidates it.
ModelConfig apply_sharing(ModelConfig c, const Options& o) {
  if (!o.spans.empty()) c.sharing_plan = plan_from_spans(o.spans);
  if (o.cla_pairs) c.cla_map = default_cla_pairs(c.n_layers);
  c.validate();
  return c;
}

LoadedModel load(const Options& o) {
  LoadedModel m = load_model(o.model);
  m.config = apply_sharing(std::move(m.config), o);
  return m;
}

struct Sample {
  std::string name;
  std::vector<TokenId> ids;
};

std::vector<Sample> read_samples(const Options& o) {
  std::vector<Sample> samples;
  if (!o.ids.empty()) samples.push_back({fs::path(o.ids).filename().string(), read_token_ids(o.ids)});
  if (!o.corpus.empty()) {
    for (const auto& p : list_corpus(o.corpus)) samples.push_back({p.filename().string(), read_token_ids(p)});
  }
  if (samples.empty()) throw InputError("no input: pass --ids or --corpus");
  for (const auto& s : samples) {
    if (s.ids.empty()) throw InputError("sample " + s.name + " holds no tokens");
  }
  return samples;
}

RunMeta make_meta(const std::string& command, const ModelConfig& config, const Options& o) {
  return {command, config_to_json(config), flags_json(o), json::object()};
}

int cmd_make_toy(const Options& o) {
  const ModelConfig c = apply_sharing(o.config, o);
  save_model(o.out, c, random_weights(c, o.seed));
  return 0;
}

int cmd_run(const Options& o) {
  const LoadedModel m = load(o);
  const std::vector<TokenId> prompt = read_token_ids(o.ids);
  DecodeSession session(m.config, m.weights, o.seed);
  SamplingMode mode = Greedy{};
  if (o.temperature > 0.0f) mode = Temperature{o.temperature, o.seed};
  const auto generated = generate(session, prompt, o.steps, mode);

  RunMeta meta = make_meta("run", m.config, o);
  meta.flags["steps"] = o.steps;
  meta.flags["temperature"] = o.temperature;
  meta.flags["seed"] = o.seed;
  std::string csv = csv_meta_line(meta) + "position,token,source\n";
  std::size_t pos = 0;
  for (TokenId t : prompt) csv += std::to_string(pos++) + "," + std::to_string(t) + ",prompt\n";
  for (TokenId t : generated) csv += std::to_string(pos++) + "," + std::to_string(t) + ",generated\n";
  json doc{{"meta", meta_json(meta)}, {"prompt", prompt}, {"generated", generated}};
  write_outputs(o, csv, doc);
  return 0;
}

int cmd_ppl(const Options& o) {
  const LoadedModel m = load(o);
  const auto samples = read_samples(o);
  const RunMeta meta = make_meta("ppl", m.config, o);
  std::string csv = csv_meta_line(meta) + "sample,file,tokens,perplexity\n";
  json rows = json::array();
  double log_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const float p = perplexity(m.config, m.weights, samples[i].ids);
    log_sum += std::log(static_cast<double>(p));
    csv += std::to_string(i) + "," + samples[i].name + "," + std::to_string(samples[i].ids.size()) + "," +
           format_number(p) + "\n";
    rows.push_back({{"sample", i}, {"file", samples[i].name}, {"tokens", samples[i].ids.size()}, {"perplexity", p}});
  }
  const double geo_mean = std::exp(log_sum / static_cast<double>(samples.size()));
  write_outputs(o, csv, json{{"meta", meta_json(meta)}, {"samples", rows}, {"geometric_mean", geo_mean}});
  return 0;
}

HeadAggregation parse_head_agg(const std::string& s) {
  if (s == "mean") return HeadAggregation::mean();
  std::size_t h = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), h);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("--head-agg must be \"mean\" or a head index, got \"" + s + "\"");
  }
  return HeadAggregation::single(h);
}

SampleAggregation parse_sample_agg(const std::string& s) {
  if (s == "mean_matrices") return SampleAggregation::kMeanMatrices;
  if (s == "mean_similarities") return SampleAggregation::kMeanSimilarities;
  throw InputError("--sample-agg must be mean_matrices or mean_similarities, got \"" + s + "\"");
}

std::vector<AttentionRecord> capture(const LoadedModel& m, const Options& o) {
  std::vector<std::vector<TokenId>> ids;
  for (auto& s : read_samples(o)) ids.push_back(std::move(s.ids));
  return capture_corpus(m.config, m.weights, ids, o.workers);
}

int cmd_sim(const Options& o) {
  const LoadedModel m = load(o);
  const auto heads = parse_head_agg(o.head_agg);
  const auto samples = parse_sample_agg(o.sample_agg);
  const auto surface = similarity_surface(capture(m, o), heads, samples);
  const auto groups = segment_groups(surface, o.tau);
  RunMeta meta = make_meta("sim", m.config, o);
  meta.flags["workers"] = o.workers;
  meta.extra = {{"tau", o.tau}, {"head_agg", o.head_agg}, {"sample_agg", o.sample_agg}};
  write_outputs(o, similarity_csv(surface, meta), similarity_json(surface, groups, meta));
  return 0;
}

int cmd_var(const Options& o) {
  const LoadedModel m = load(o);
  const auto variance = variance_surface(capture(m, o));
  RunMeta meta = make_meta("var", m.config, o);
  meta.flags["workers"] = o.workers;
  std::optional<VarianceSurface> wcv;
  try {
    wcv = weighted_cumulative_variance(variance);
  } catch (const NormalizationError& e) {
    meta.extra["degenerate_heads"] = e.heads();
  }
  const VarianceSurface* w = wcv ? &*wcv : nullptr;
  write_outputs(o, variance_csv(variance, w, meta), variance_json(variance, w, meta));
  return 0;
}

int cmd_budget(const Options& o) {
  ModelConfig c = o.model.empty() ? o.config : load_model(o.model).config;
  c = apply_sharing(std::move(c), o);
  std::vector<SharingPlan> plans = {SharingPlan()};
  const auto add = [&](SharingPlan p) {
    p.validate(c.n_layers);
    if (std::find(plans.begin(), plans.end(), p) == plans.end()) plans.push_back(std::move(p));
  };
  if (!c.sharing_plan.empty()) add(c.sharing_plan);
  for (const auto& p : o.plans) add(SharingPlan::parse(p));
  std::vector<std::size_t> lens = o.seq_lens.empty() ? std::vector<std::size_t>{c.max_seq} : o.seq_lens;
  const auto rows = savings_table(c, lens, plans);
  RunMeta meta = make_meta("budget", c, o);
  meta.flags["seq_lens"] = lens;
  meta.flags["plans"] = o.plans;
  write_outputs(o, savings_csv(rows, meta), savings_json(rows, meta));
  return 0;
}

// Checks: singleton spans change nothing, decoding matches the full forward,
// and predicted costs equal counted costs.
int cmd_parity(const Options& o) {
  const LoadedModel m = load(o);
  const ModelConfig& c = m.config;
  std::vector<TokenId> ids;
  if (!o.ids.empty()) {
    ids = read_token_ids(o.ids);
  } else {
    std::mt19937_64 rng(o.seed);
    ids.resize(std::min(o.length, c.max_seq));
    for (auto& id : ids) id = static_cast<TokenId>(rng() % c.vocab_size);
  }

  json checks = json::array();
  bool all_pass = true;
  const auto record = [&](const std::string& name, bool passed, json value) {
    all_pass = all_pass && passed;
    checks.push_back({{"check", name}, {"passed", passed}, {"value", std::move(value)}});
  };

  ModelConfig plain = c;
  plain.sharing_plan = {};
  ModelConfig singletons = plain;
  std::vector<LayerSpan> spans;
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    if (c.cla_parent(l) == l) spans.push_back({l, l});
  }
  singletons.sharing_plan = SharingPlan(spans);
  const bool bitwise = forward_full(plain, m.weights, ids).logits == forward_full(singletons, m.weights, ids).logits;
  record("singleton_spans_bitwise", bitwise, bitwise);

  const auto full = forward_full(c, m.weights, ids);
  DecodeSession session(c, m.weights);
  float max_diff = 0.0f;
  bool steps_reconcile = true;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto logits = session.decode_step(ids[t]);
    const auto row = full.logits.row(t);
    for (std::size_t v = 0; v < logits.size(); ++v) max_diff = std::max(max_diff, std::fabs(logits[v] - row[v]));
    const auto rec = reconcile(predict_costs(c, t + 1, CostMode::kDecodeStep), session.last_step_counters());
    steps_reconcile = steps_reconcile && rec.ok();
  }
  record("incremental_vs_full_max_abs", max_diff <= 1e-4f, max_diff);

  const auto full_rec = reconcile(predict_costs(c, ids.size(), CostMode::kFullForward), full.counters);
  json mismatches = json::array();
  for (const auto& mm : full_rec.mismatches) {
    mismatches.push_back({{"layer", mm.layer}, {"category", mm.category}, {"predicted", mm.predicted},
                          {"observed", mm.observed}});
  }
  record("reconcile_full_forward", full_rec.ok(), mismatches);
  record("reconcile_decode_steps", steps_reconcile, steps_reconcile);

  RunMeta meta = make_meta("parity", c, o);
  meta.flags["seed"] = o.seed;
  meta.flags["length"] = ids.size();
  std::string csv = csv_meta_line(meta) + "check,passed\n";
  for (const auto& ch : checks) {
    csv += ch["check"].get<std::string>() + "," + (ch["passed"].get<bool>() ? "true" : "false") + "\n";
  }
  write_outputs(o, csv, json{{"meta", meta_json(meta)}, {"checks", checks}, {"passed", all_pass}});
  return all_pass ? 0 : kExitValidation;
}

void report_error(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

void add_config_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--n-layers", o.config.n_layers, "Transformer blocks")->capture_default_str();
  cmd->add_option("--n-heads", o.config.n_heads, "Query heads")->capture_default_str();
  cmd->add_option("--n-kv-heads", o.config.n_kv_heads, "Key/value heads")->capture_default_str();
  cmd->add_option("--d-model", o.config.d_model, "Hidden width")->capture_default_str();
  cmd->add_option("--d-ff", o.config.d_ff, "MLP width")->capture_default_str();
  cmd->add_option("--vocab-size", o.config.vocab_size, "Vocabulary size")->capture_default_str();
  cmd->add_option("--max-seq", o.config.max_seq, "Context length")->capture_default_str();
  cmd->add_option("--rope-theta", o.config.rope_theta, "Rotary base")->capture_default_str();
  cmd->add_option("--norm-eps", o.config.norm_eps, "RMSNorm epsilon")->capture_default_str();
}

void add_sharing_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--span", o.spans, "Shared-attention span a:b (inclusive), repeatable");
  cmd->add_flag("--cla-pairs", o.cla_pairs, "Odd layers reuse the KV cache of the layer below");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared attention inference engine"};
  app.require_subcommand(1);
  Options o;

  auto* make_toy = app.add_subcommand("make-toy", "Write a randomly initialized model");
  make_toy->add_option("--out", o.out, "Manifest path (blob goes next to it)")->required();
  make_toy->add_option("--seed", o.seed, "Init seed")->capture_default_str();
  add_config_flags(make_toy, o);
  add_sharing_flags(make_toy, o);

  auto* run = app.add_subcommand("run", "Generate tokens from a prompt");
  run->add_option("--model", o.model, "Model manifest")->required();
  run->add_option("--ids", o.ids, "Prompt token file")->required();
  run->add_option("--steps", o.steps, "Tokens to generate")->capture_default_str();
  run->add_option("--temperature", o.temperature, "0 means greedy")->capture_default_str();
  run->add_option("--seed", o.seed, "Sampling seed")->capture_default_str();

  auto* ppl = app.add_subcommand("ppl", "Perplexity per sample");
  auto* sim = app.add_subcommand("sim", "Layer-by-layer attention similarity");
  auto* var = app.add_subcommand("var", "Attention variance and its weighted cumulative form");
  for (auto* cmd : {ppl, sim, var}) {
    cmd->add_option("--model", o.model, "Model manifest")->required();
    cmd->add_option("--ids", o.ids, "Token file");
    cmd->add_option("--corpus", o.corpus, "Directory of token files");
  }
  for (auto* cmd : {sim, var}) cmd->add_option("--workers", o.workers, "Capture threads")->capture_default_str();
  sim->add_option("--tau", o.tau, "Grouping threshold")->capture_default_str();
  sim->add_option("--head-agg", o.head_agg, "mean or a head index")->capture_default_str();
  sim->add_option("--sample-agg", o.sample_agg, "mean_matrices or mean_similarities")->capture_default_str();

  auto* budget = app.add_subcommand("budget", "Closed-form flop and KV-cache budget");
  budget->add_option("--model", o.model, "Model manifest (config flags are used otherwise)");
  budget->add_option("--seq-len", o.seq_lens, "Sequence length, repeatable (default max_seq)");
  budget->add_option("--plan", o.plans, "Extra plan \"a:b,c:d\", repeatable");
  add_config_flags(budget, o);

  auto* parity = app.add_subcommand("parity", "Equivalence and accounting checks");
  parity->add_option("--model", o.model, "Model manifest")->required();
  parity->add_option("--ids", o.ids, "Token file (random ids otherwise)");
  parity->add_option("--seed", o.seed, "Seed for random ids")->capture_default_str();
  parity->add_option("--length", o.length, "Random sequence length")->capture_default_str();

  for (auto* cmd : {run, ppl, sim, var, budget, parity}) {
    cmd->add_option("--out", o.out, "Output prefix: writes <out>.csv and <out>.json")->required();
    add_sharing_flags(cmd, o);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (*make_toy) return cmd_make_toy(o);
    if (*run) return cmd_run(o);
    if (*ppl) return cmd_ppl(o);
    if (*sim) return cmd_sim(o);
    if (*var) return cmd_var(o);
    if (*budget) return cmd_budget(o);
    if (*parity) return cmd_parity(o);
  } catch (const IoError& e) {
    report_error(e.kind(), e.what());
    return kExitIo;
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
