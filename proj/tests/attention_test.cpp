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

#include "sattn/attention.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sattn/errors.h"

namespace sattn {
namespace {

Matrix random_matrix(std::mt19937& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Matrix m(r, c);
  for (float& v : m.data()) v = dist(rng);
  return m;
}

TEST(AttendStandardTest, SingleTokenCopiesValue) {
  const HeadLayout layout{2, 2, 2};
  const Matrix q = Matrix::from_rows({{0.3f, -1.0f, 2.0f, 0.5f}});
  const Matrix k = Matrix::from_rows({{1.0f, 2.0f, -3.0f, 4.0f}});
  const Matrix v = Matrix::from_rows({{5.0f, 6.0f, 7.0f, 8.0f}});
  const auto out = attend_standard(q, rows_of(k), rows_of(v), layout, 0.5f);
  EXPECT_EQ(out.hidden, v);
  ASSERT_EQ(out.weights.size(), 2u);
  for (const auto& a : out.weights) EXPECT_EQ(a.matrix(), Matrix::from_rows({{1.0f}}));
}

TEST(AttendStandardTest, ZeroValuesGiveZeroOutput) {
  std::mt19937 rng(1);
  const HeadLayout layout{4, 2, 4};
  const Matrix q = random_matrix(rng, 5, 16);
  const Matrix k = random_matrix(rng, 5, 8);
  const Matrix v(5, 8);
  EXPECT_EQ(attend_standard(q, rows_of(k), rows_of(v), layout, 0.5f).hidden, Matrix(5, 16));
}

TEST(AttendStandardTest, TwoTokenHandComputed) {
  const HeadLayout layout{1, 1, 2};
  const Matrix q = Matrix::from_rows({{1, 0}, {0, 1}});
  const Matrix k = Matrix::from_rows({{1, 0}, {1, 1}});
  const Matrix v = Matrix::from_rows({{1, 2}, {3, 4}});
  const float scale = 1.0f / std::sqrt(2.0f);
  const auto out = attend_standard(q, rows_of(k), rows_of(v), layout, scale);

  // Row 1 scores: q1.k0 = 0, q1.k1 = 1, scaled by 1/sqrt(2).
  const double s1 = 1.0 / std::sqrt(2.0);
  const double w0 = 1.0 / (1.0 + std::exp(s1));
  const double w1 = std::exp(s1) / (1.0 + std::exp(s1));
  EXPECT_NEAR(out.weights[0](1, 0), w0, 1e-6);
  EXPECT_NEAR(out.weights[0](1, 1), w1, 1e-6);
  EXPECT_EQ(out.hidden(0, 0), 1.0f);
  EXPECT_EQ(out.hidden(0, 1), 2.0f);
  EXPECT_NEAR(out.hidden(1, 0), w0 * 1 + w1 * 3, 1e-6);
  EXPECT_NEAR(out.hidden(1, 1), w0 * 2 + w1 * 4, 1e-6);
}

TEST(AttendStandardTest, ShapeErrors) {
  const HeadLayout layout{2, 1, 2};
  EXPECT_THROW(attend_standard(Matrix(2, 3), rows_of(Matrix(2, 2)), rows_of(Matrix(2, 2)), layout, 1.0f),
               ShapeError);
  EXPECT_THROW(attend_standard(Matrix(3, 4), rows_of(Matrix(2, 2)), rows_of(Matrix(2, 2)), layout, 1.0f),
               ShapeError);
  EXPECT_THROW(attend_standard(Matrix(2, 4), rows_of(Matrix(2, 4)), rows_of(Matrix(2, 2)), layout, 1.0f),
               ShapeError);
  EXPECT_THROW(attend_standard(Matrix(1, 6), rows_of(Matrix(1, 4)), rows_of(Matrix(1, 4)), HeadLayout{3, 2, 2}, 1.0f),
               ConfigError);
}

TEST(AttendStandardTest, CountsCausalFlops) {
  std::mt19937 rng(2);
  const HeadLayout layout{4, 4, 16};
  const std::size_t t = 4;
  LayerFlops flops;
  const Matrix q = random_matrix(rng, t, 64), k = random_matrix(rng, t, 64), v = random_matrix(rng, t, 64);
  attend_standard(q, rows_of(k), rows_of(v), layout, 0.25f, false, &flops);
  EXPECT_EQ(flops[FlopCategory::kScores], 2u * 4 * 16 * 10);
  EXPECT_EQ(flops[FlopCategory::kSoftmax], 3u * 4 * 10);
  EXPECT_EQ(flops[FlopCategory::kMix], 2u * 4 * 16 * 10);
}

TEST(GqaTest, MqaEqualsMhaWithReplicatedKv) {
  std::mt19937 rng(3);
  const std::size_t t = 6, dh = 4, heads = 4;
  const Matrix q = random_matrix(rng, t, heads * dh);
  const Matrix k1 = random_matrix(rng, t, dh), v1 = random_matrix(rng, t, dh);
  Matrix k4(t, heads * dh), v4(t, heads * dh);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t d = 0; d < dh; ++d) {
        k4(i, h * dh + d) = k1(i, d);
        v4(i, h * dh + d) = v1(i, d);
      }
    }
  }
  const auto mqa = attend_standard(q, rows_of(k1), rows_of(v1), {heads, 1, dh}, 0.5f);
  const auto mha = attend_standard(q, rows_of(k4), rows_of(v4), {heads, heads, dh}, 0.5f);
  EXPECT_EQ(mqa.hidden, mha.hidden);
  EXPECT_EQ(mqa.weights, mha.weights);
}

TEST(AttendSharedTest, OneHotDiagonalWeightsReturnValues) {
  std::mt19937 rng(4);
  const HeadLayout layout{2, 2, 3};
  const Matrix v = random_matrix(rng, 4, 6);
  const auto eye = RowStochasticMatrix::validated(Matrix::identity(4));
  const std::vector<RowStochasticMatrix> weights(2, eye);
  EXPECT_EQ(attend_shared(weights, rows_of(v), layout).hidden, v);
}

TEST(AttendSharedTest, AnchorWeightsReproduceStandardBitwise) {
  std::mt19937 rng(5);
  const HeadLayout layout{4, 2, 8};
  const Matrix q = random_matrix(rng, 7, 32), k = random_matrix(rng, 7, 16), v = random_matrix(rng, 7, 16);
  const auto standard = attend_standard(q, rows_of(k), rows_of(v), layout, 0.35f);
  LayerFlops flops;
  const auto shared = attend_shared(standard.weights, rows_of(v), layout, false, &flops);
  EXPECT_EQ(shared.hidden, standard.hidden);
  EXPECT_EQ(flops[FlopCategory::kScores], 0u);
  EXPECT_EQ(flops[FlopCategory::kSoftmax], 0u);
  EXPECT_EQ(flops[FlopCategory::kMix], 2u * 4 * 8 * 28);
}

TEST(AttendSharedTest, ThreeTokenBruteForceProduct) {
  const auto a = RowStochasticMatrix::validated(
      Matrix::from_rows({{1, 0, 0}, {0.25f, 0.75f, 0}, {0.5f, 0.125f, 0.375f}}));
  const Matrix v = Matrix::from_rows({{1, -2}, {3, 0.5f}, {-4, 6}});
  const auto out = attend_shared(std::vector<RowStochasticMatrix>{a}, rows_of(v), {1, 1, 2});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t d = 0; d < 2; ++d) {
      double expect = 0;
      for (std::size_t j = 0; j < 3; ++j) expect += static_cast<double>(a(i, j)) * v(j, d);
      EXPECT_NEAR(out.hidden(i, d), expect, 1e-6);
    }
  }
}

TEST(AttendSharedTest, MissingAnchorWeightsIsSequencingError) {
  const HeadLayout layout{1, 1, 2};
  const Matrix v(2, 2);
  EXPECT_THROW(attend_shared(std::vector<RowStochasticMatrix>{}, rows_of(v), layout), SequencingError);

  KvCache cache(cache_layout(plan_roles(SharingPlan::parse("0:1"), 2), {}), 1, 2);
  cache.append(1, 2, std::nullopt, v.data());
  EXPECT_THROW(attend_shared(cache, 1, 0, layout), SequencingError);
}

TEST(AttendClaTest, SelfParentEqualsStandard) {
  std::mt19937 rng(6);
  const HeadLayout layout{2, 2, 4};
  const Matrix q = random_matrix(rng, 3, 8), k = random_matrix(rng, 3, 8), v = random_matrix(rng, 3, 8);
  KvCache cache(cache_layout(plan_roles({}, 1), {}), 2, 4);
  cache.append(0, 3, k.data(), v.data());
  const auto cla = attend_cla(0, 0, q, cache, layout, 0.5f);
  const auto std_out = attend_standard(q, rows_of(k), rows_of(v), layout, 0.5f);
  EXPECT_EQ(cla.hidden, std_out.hidden);
  EXPECT_EQ(cla.weights, std_out.weights);
}

TEST(AttendClaTest, ChildrenShareOneCacheEntry) {
  std::mt19937 rng(7);
  const HeadLayout layout{2, 2, 4};
  const Matrix k = random_matrix(rng, 3, 8), v = random_matrix(rng, 3, 8);
  const Matrix q_a = random_matrix(rng, 3, 8), q_b = random_matrix(rng, 3, 8);
  KvCache cache(cache_layout(plan_roles({}, 3), ClaMap{{1, 0}, {2, 0}}), 2, 4);
  cache.append(0, 3, k.data(), v.data());
  cache.append(1, 3, std::nullopt, std::nullopt);
  cache.append(2, 3, std::nullopt, std::nullopt);

  // Same query on two children: same weights.
  EXPECT_EQ(attend_cla(1, 0, q_a, cache, layout, 0.5f).weights,
            attend_cla(2, 0, q_a, cache, layout, 0.5f).weights);
  // Distinct queries: distinct outputs, while only one layer's K/V is stored.
  EXPECT_NE(attend_cla(1, 0, q_a, cache, layout, 0.5f).hidden,
            attend_cla(2, 0, q_b, cache, layout, 0.5f).hidden);
  EXPECT_EQ(cache.key_entries(), 3u * 8);
  EXPECT_EQ(cache.value_entries(), 3u * 8);
}

TEST(AttendClaTest, MissingParentEntriesIsSequencingError) {
  const HeadLayout layout{1, 1, 2};
  KvCache cache(cache_layout(plan_roles({}, 2), ClaMap{{1, 0}}), 1, 2);
  EXPECT_THROW(attend_cla(1, 0, Matrix(1, 2), cache, layout, 1.0f), SequencingError);
  EXPECT_THROW(attend_cla(0, 1, Matrix(1, 2), cache, layout, 1.0f), SequencingError);
}

}  // namespace
}  // namespace sattn
