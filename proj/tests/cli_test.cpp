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

#include <gtest/gtest.h>

#include "cli_runner.h"
#include "json.hpp"
#include "sattn/weights_io.h"

namespace sattn {
namespace {

using nlohmann::json;
using testing::CliRunner;

std::string test_tag() { return ::testing::UnitTest::GetInstance()->current_test_info()->name(); }

json error_of(const CliRunner& cli) { return json::parse(cli.last_stderr())["error"]; }

std::string ids_text(std::size_t n, std::size_t stride) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += std::to_string((i * stride + 3) % 256) + "\n";
  return s;
}

TEST(CliTest, MakeToyIsDeterministicAndUsesToyDefaults) {
  CliRunner cli(test_tag());
  ASSERT_EQ(cli.run("make-toy --out a.json --seed 9"), 0);
  ASSERT_EQ(cli.run("make-toy --out b.json --seed 9"), 0);
  EXPECT_EQ(cli.read("a.bin"), cli.read("b.bin"));
  EXPECT_EQ(load_model(cli.path("a.json")).config, toy_config());
  ASSERT_EQ(cli.run("make-toy --out c.json --seed 10"), 0);
  EXPECT_NE(cli.read("a.bin"), cli.read("c.bin"));
}

TEST(CliTest, MakeToyWithSpanRoundTrips) {
  CliRunner cli(test_tag());
  ASSERT_EQ(cli.run("make-toy --out big.json --n-layers 32 --span 23:30"), 0);
  const LoadedModel m = load_model(cli.path("big.json"));
  EXPECT_EQ(m.config.n_layers, 32u);
  EXPECT_EQ(m.config.sharing_plan.to_string(), "23:30");
}

TEST(CliTest, ParityPassesOnToyModel) {
  CliRunner cli(test_tag());
  ASSERT_EQ(cli.run("make-toy --out toy.json"), 0);
  ASSERT_EQ(cli.run("parity --model toy.json --span 5:6 --out parity"), 0) << cli.last_stderr();
  const json doc = json::parse(cli.read("parity.json"));
  EXPECT_TRUE(doc["passed"].get<bool>());
  EXPECT_EQ(doc["checks"].size(), 4u);
  ASSERT_EQ(cli.run("parity --model toy.json --cla-pairs --out cla"), 0) << cli.last_stderr();
}

TEST(CliTest, SimShowsSharedBlock) {
  CliRunner cli(test_tag());
  ASSERT_EQ(cli.run("make-toy --out toy.json"), 0);
  cli.write("corpus/a.txt", ids_text(12, 7));
  cli.write("corpus/b.txt", ids_text(9, 31));
  ASSERT_EQ(cli.run("sim --model toy.json --corpus corpus --span 2:6 --out sim --workers 2"), 0)
      << cli.last_stderr();
  const json doc = json::parse(cli.read("sim.json"));
  for (std::size_t i = 2; i <= 6; ++i)
    for (std::size_t j = 2; j <= 6; ++j) EXPECT_NEAR(doc["similarity"][i][j].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(doc["meta"]["tau"], 0.8f);
  EXPECT_EQ(cli.read("sim.csv").rfind("# meta {", 0), 0u);
}

TEST(CliTest, BudgetReportsKeyByteSavings) {
  CliRunner cli(test_tag());
  ASSERT_EQ(cli.run("budget --n-layers 32 --span 23:30 --seq-len 16 --seq-len 64 --out budget"), 0)
      << cli.last_stderr();
  const json doc = json::parse(cli.read("budget.json"));
  ASSERT_EQ(doc["rows"].size(), 4u);
  EXPECT_EQ(doc["rows"][1]["plan"], "23:30");
  EXPECT_EQ(doc["rows"][1]["key_bytes_delta_pct"], -21.875);
  EXPECT_EQ(doc["rows"][0]["key_bytes_delta_pct"], 0.0);
}

TEST(CliTest, RunPplVarWriteBothFormats) {
  CliRunner cli(test_tag());
  ASSERT_EQ(cli.run("make-toy --out toy.json"), 0);
  cli.write("p.txt", ids_text(6, 5));
  ASSERT_EQ(cli.run("run --model toy.json --ids p.txt --steps 4 --temperature 0.7 --out run"), 0);
  EXPECT_EQ(json::parse(cli.read("run.json"))["generated"].size(), 4u);
  ASSERT_EQ(cli.run("ppl --model toy.json --ids p.txt --span 1:3 --out ppl"), 0);
  EXPECT_GT(json::parse(cli.read("ppl.json"))["samples"][0]["perplexity"].get<double>(), 1.0);
  ASSERT_EQ(cli.run("var --model toy.json --ids p.txt --out var"), 0);
  EXPECT_NE(cli.read("var.csv").find("layer,head,variance,wcv\n"), std::string::npos);
}

TEST(CliTest, ErrorsAreStructured) {
  CliRunner cli(test_tag());
  ASSERT_EQ(cli.run("make-toy --out toy.json"), 0);
  EXPECT_EQ(cli.run("parity --model toy.json --span 7:9 --out x"), 1);
  EXPECT_EQ(error_of(cli)["kind"], "plan");
  EXPECT_EQ(cli.run("parity --model toy.json --span 3 --out x"), 1);
  EXPECT_EQ(error_of(cli)["kind"], "plan");
  EXPECT_EQ(cli.run("ppl --model missing.json --ids p.txt --out x"), 3);
  EXPECT_EQ(error_of(cli)["kind"], "io");
  EXPECT_EQ(cli.run("sim --model toy.json --out x"), 1);
  EXPECT_EQ(error_of(cli)["kind"], "input");
  EXPECT_EQ(cli.run("run --model toy.json"), 1);
  EXPECT_EQ(error_of(cli)["kind"], "usage");
  EXPECT_EQ(cli.run("frobnicate"), 1);
  EXPECT_EQ(cli.run("budget --n-layers 8 --plan 2:5,4:6 --out x"), 1);
  EXPECT_EQ(error_of(cli)["kind"], "plan");
  EXPECT_EQ(cli.run("budget --n-heads 3 --out x"), 1);
  EXPECT_EQ(error_of(cli)["kind"], "config");
}

}  // namespace
}  // namespace sattn
