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

#include <gtest/gtest.h>

#include <cmath>

#include "naive_oracle.h"
#include "sattn/errors.h"
#include "test_util.h"

namespace sattn {
namespace {

using testing::kToySeed;
using testing::max_abs_diff;
using testing::random_ids;
using testing::with_plan;

class ToyModelTest : public ::testing::Test {
 protected:
  ModelConfig config = toy_config();
  Weights weights = random_weights(config, kToySeed);
  std::vector<TokenId> ids = random_ids(16, config.vocab_size, 7);
};

double max_logit_diff(const Matrix& logits, const oracle::Mat& ref) {
  double m = 0;
  for (std::size_t t = 0; t < ref.size(); ++t)
    for (std::size_t v = 0; v < ref[t].size(); ++v) m = std::max(m, std::fabs(logits(t, v) - ref[t][v]));
  return m;
}

TEST_F(ToyModelTest, RandomWeightsAreDeterministic) {
  EXPECT_EQ(random_weights(config, kToySeed), weights);
  EXPECT_NE(random_weights(config, kToySeed + 1), weights);
  EXPECT_NO_THROW(weights.validate(config));
}

TEST_F(ToyModelTest, SingletonSpansMatchBaselineBitwise) {
  const Matrix base = forward_full(config, weights, ids).logits;
  for (const char* plan : {"5:5", "0:0", "0:0,3:3,7:7"}) {
    EXPECT_EQ(forward_full(with_plan(config, plan), weights, ids).logits, base) << plan;
  }
}

TEST_F(ToyModelTest, SingleTokenForward) {
  const std::vector<TokenId> one = {3};
  const auto r = forward_full(with_plan(config, "2:6"), weights, one, {.capture = true});
  EXPECT_EQ(r.logits.rows(), 1u);
  EXPECT_EQ(r.logits.cols(), config.vocab_size);
  for (const auto& layer : r.record->layers)
    for (const auto& a : layer) EXPECT_EQ(a(0, 0), 1.0f);
}

TEST_F(ToyModelTest, MatchesNaiveOracleAcrossStrategies) {
  for (const auto& s : testing::strategy_matrix()) {
    const Weights w = random_weights(s.config, kToySeed);
    const auto ref = oracle::forward(s.config, w, ids);
    const auto got = forward_full(s.config, w, ids);
    EXPECT_LT(max_logit_diff(got.logits, ref.logits), 1e-4) << s.name;
  }
}

TEST_F(ToyModelTest, MemberReusesAnchorWeightsExactly) {
  const ModelConfig c = with_plan(config, "5:6");
  const auto r = forward_full(c, weights, ids, {.capture = true});
  const auto ref = oracle::forward(c, weights, ids);
  ASSERT_TRUE(r.record.has_value());
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    EXPECT_EQ(r.record->layers[6][h], r.record->layers[5][h]);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < ids.size(); ++j) ASSERT_NEAR(r.record->layers[6][h](i, j), ref.a[6][h][i][j], 1e-5);
  }
}

TEST_F(ToyModelTest, SharingChangesOutput) {
  EXPECT_NE(forward_full(with_plan(config, "5:6"), weights, ids).logits, forward_full(config, weights, ids).logits);
}

TEST_F(ToyModelTest, CaptureIsCompleteAndRowStochastic) {
  const auto r = forward_full(config, weights, ids, {.capture = true});
  ASSERT_EQ(r.record->n_layers(), config.n_layers);
  EXPECT_EQ(r.record->n_heads(), config.n_heads);
  EXPECT_EQ(r.record->seq_len(), ids.size());
  for (const auto& layer : r.record->layers) {
    ASSERT_EQ(layer.size(), config.n_heads);
    for (const auto& a : layer) EXPECT_NO_THROW(RowStochasticMatrix::validated(a.matrix()));
  }
  EXPECT_FALSE(forward_full(config, weights, ids).record.has_value());
}

TEST_F(ToyModelTest, DecodeMatchesFullForwardForEveryStrategy) {
  for (const auto& s : testing::strategy_matrix()) {
    const Weights w = random_weights(s.config, kToySeed);
    const Matrix full = forward_full(s.config, w, ids).logits;
    DecodeSession session(s.config, w);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const auto step = session.decode_step(ids[t]);
      ASSERT_LT(max_abs_diff(step, full.row(t)), 1e-4f) << s.name << " position " << t;
    }
    EXPECT_EQ(session.tokens_seen(), ids.size());
    EXPECT_EQ(session.cache().tokens(), ids.size());
  }
}

TEST_F(ToyModelTest, MembersCacheNoKeysDuringDecode) {
  const ModelConfig c = with_plan(config, "2:6");
  DecodeSession session(c, weights);
  for (TokenId id : ids) session.decode_step(id);
  const auto& cache = session.cache();
  for (std::size_t l = 3; l <= 6; ++l) {
    EXPECT_EQ(cache.key_bytes(l), 0u);
    EXPECT_EQ(cache.value_bytes(l), 4u * ids.size() * c.n_kv_heads * c.d_head());
  }
  EXPECT_EQ(cache.key_entries(), 4u * ids.size() * c.n_kv_heads * c.d_head());
}

TEST_F(ToyModelTest, InputValidation) {
  const std::vector<TokenId> empty;
  const std::vector<TokenId> bad = {1, 256};
  EXPECT_THROW(forward_full(config, weights, empty), InputError);
  EXPECT_THROW(forward_full(config, weights, bad), InputError);
  EXPECT_THROW(forward_full(config, weights, random_ids(65, 256, 1)), CapacityError);

  DecodeSession session(config, weights);
  for (TokenId id : random_ids(64, 256, 2)) session.decode_step(id);
  EXPECT_THROW(session.decode_step(0), CapacityError);
}

TEST_F(ToyModelTest, ConfigRejectsOverlappingClaAndSharing) {
  ModelConfig c = with_plan(config, "2:5");
  c.cla_map = {{3, 2}};
  EXPECT_THROW(c.validate(), PlanError);
  c.cla_map = {{7, 4}};
  EXPECT_THROW(c.validate(), PlanError);
  c.cla_map = {{7, 2}};
  EXPECT_NO_THROW(c.validate());
  c.cla_map = {{7, 6}, {6, 1}};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(forward_full(with_plan(config, "6:9"), weights, ids), PlanError);
}

TEST_F(ToyModelTest, WeightShapeMismatch) {
  Weights w = weights;
  w.layers[3].wk = Matrix(64, 32);
  EXPECT_THROW(forward_full(config, w, ids), ShapeError);
  w = weights;
  w.layers.pop_back();
  EXPECT_THROW(DecodeSession(config, w), ShapeError);
}

TEST_F(ToyModelTest, GenerateZeroStepsAndDeterminism) {
  const std::vector<TokenId> prompt(ids.begin(), ids.begin() + 4);
  DecodeSession s0(config, weights);
  EXPECT_TRUE(generate(s0, prompt, 0, Greedy{}).empty());
  EXPECT_EQ(s0.tokens_seen(), prompt.size());

  DecodeSession a(config, weights), b(config, weights);
  const auto ga = generate(a, prompt, 10, Greedy{});
  EXPECT_EQ(ga, generate(b, prompt, 10, Greedy{}));
  EXPECT_EQ(ga.size(), 10u);
  EXPECT_EQ(a.tokens_seen(), prompt.size() + 9);

  DecodeSession c(config, weights, 1), d(config, weights, 2);
  const auto tc = generate(c, prompt, 10, Temperature{0.8f, 99});
  EXPECT_EQ(tc, generate(d, prompt, 10, Temperature{0.8f, 99}));
  for (TokenId t : tc) EXPECT_LT(t, config.vocab_size);

  DecodeSession e(config, weights);
  EXPECT_THROW(generate(e, prompt, 61, Greedy{}), CapacityError);
  EXPECT_THROW(generate(e, std::vector<TokenId>{}, 1, Greedy{}), InputError);
}

TEST(ArgmaxTest, TiesGoToLowestId) {
  EXPECT_EQ(argmax(std::vector<float>{1, 3, 3, 2}), 1u);
  EXPECT_EQ(argmax(std::vector<float>{-1}), 0u);
  EXPECT_THROW(argmax(std::vector<float>{}), InputError);
}

TEST_F(ToyModelTest, PerplexityOfUniformModelIsVocabSize) {
  Weights w = weights;
  w.lm_head = Matrix(config.d_model, config.vocab_size);
  EXPECT_NEAR(perplexity(config, w, ids), 256.0f, 1e-3f);
}

TEST(PerplexityTest, ConfidentCorrectLogitsApproachOne) {
  const std::vector<TokenId> ids = {0, 2, 1, 3};
  Matrix logits(4, 4);
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) logits(t, ids[t + 1]) = 40.0f;
  EXPECT_NEAR(perplexity_from_logits(logits, ids), 1.0f, 1e-6f);
  EXPECT_THROW(perplexity_from_logits(logits, std::vector<TokenId>{1}), InputError);
}

TEST_F(ToyModelTest, PerplexityMatchesOracle) {
  const ModelConfig c = with_plan(config, "2:5");
  const double ref = oracle::perplexity(oracle::forward(c, weights, ids).logits, ids);
  EXPECT_NEAR(perplexity(c, weights, ids), ref, 1e-3 * ref);
  EXPECT_THROW(perplexity(c, weights, std::vector<TokenId>{4}), InputError);
}

}  // namespace
}  // namespace sattn
