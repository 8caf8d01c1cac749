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

#include "sattn/core_math.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sattn/errors.h"

namespace sattn {

namespace {

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix " + dims(rows_, cols_) + " given " + std::to_string(data_.size()) +
                     " entries");
  }
  if (!all_finite()) throw DomainError("matrix " + dims(rows_, cols_) + " has non-finite entries");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<float> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Matrix::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

RowStochasticMatrix RowStochasticMatrix::validated(Matrix m, float tolerance) {
  if (m.rows() > m.cols()) {
    throw DomainError("attention matrix " + dims(m.rows(), m.cols()) + " has more rows than columns");
  }
  const std::size_t offset = m.cols() - m.rows();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    float sum = 0.0f;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const float v = m(i, j);
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw DomainError("attention entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") outside [0, 1]");
      }
      if (j > i + offset && v != 0.0f) {
        throw DomainError("attention entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") violates causality");
      }
      sum += v;
    }
    if (std::fabs(sum - 1.0f) > tolerance) {
      throw DomainError("attention row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  return RowStochasticMatrix(std::move(m));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul " + dims(a.rows(), a.cols()) + " by " + dims(b.rows(), b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    float* out = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const float aik = a(i, k);
      const float* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

float dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot of lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void softmax_into(std::span<const float> scores, float scale, std::span<float> out) {
  if (out.size() < scores.size()) throw ShapeError("softmax output shorter than input");
  if (scores.empty()) return;
  float row_max = scores[0] * scale;
  for (std::size_t j = 1; j < scores.size(); ++j) row_max = std::max(row_max, scores[j] * scale);
  float sum = 0.0f;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out[j] = std::exp(scores[j] * scale - row_max);
    sum += out[j];
  }
  for (std::size_t j = 0; j < scores.size(); ++j) out[j] /= sum;
}

RowStochasticMatrix causal_softmax(const Matrix& scores, float scale) {
  if (scores.rows() > scores.cols()) {
    throw ShapeError("causal_softmax needs rows <= cols, got " + dims(scores.rows(), scores.cols()));
  }
  const std::size_t offset = scores.cols() - scores.rows();
  Matrix out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::size_t unmasked = i + offset + 1;
    softmax_into(scores.row(i).first(unmasked), scale, out.row(i));
  }
  return RowStochasticMatrix(std::move(out));
}

void rms_norm_into(std::span<const float> x, std::span<const float> gain, float eps,
                   std::span<float> out) {
  if (x.size() != gain.size() || out.size() != x.size()) {
    throw ShapeError("rms_norm length mismatch: x " + std::to_string(x.size()) + ", gain " +
                     std::to_string(gain.size()));
  }
  if (x.empty()) return;
  float sum_sq = 0.0f;
  for (float v : x) sum_sq += v * v;
  const float denom = std::sqrt(sum_sq / static_cast<float>(x.size()) + eps);
  if (denom == 0.0f) {
    std::fill(out.begin(), out.end(), 0.0f);
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gain[i] * (x[i] / denom);
}

std::vector<float> rms_norm(std::span<const float> x, std::span<const float> gain, float eps) {
  std::vector<float> out(x.size());
  rms_norm_into(x, gain, eps, out);
  return out;
}

void rope_rotate_inplace(std::span<float> x, std::size_t position, float theta_base) {
  const std::size_t d = x.size();
  if (d % 2 != 0) throw ConfigError("rope_rotate needs an even head size, got " + std::to_string(d));
  for (std::size_t k = 0; k < d / 2; ++k) {
    const double freq = std::pow(static_cast<double>(theta_base),
                                 -2.0 * static_cast<double>(k) / static_cast<double>(d));
    const double angle = static_cast<double>(position) * freq;
    const float c = static_cast<float>(std::cos(angle));
    const float s = static_cast<float>(std::sin(angle));
    const float x0 = x[2 * k];
    const float x1 = x[2 * k + 1];
    x[2 * k] = x0 * c - x1 * s;
    x[2 * k + 1] = x0 * s + x1 * c;
  }
}

std::vector<float> rope_rotate(std::span<const float> x, std::size_t position, float theta_base) {
  std::vector<float> out(x.begin(), x.end());
  rope_rotate_inplace(out, position, theta_base);
  return out;
}

float cosine_similarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine_similarity of lengths " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  }
  float uv = 0.0f;
  float uu = 0.0f;
  float vv = 0.0f;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0f || vv == 0.0f) throw SimilarityError("cosine similarity of a zero vector");
  const float c = uv / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0f, 1.0f);
}

float variance(std::span<const float> values) {
  if (values.empty()) throw DomainError("variance of an empty array");
  float sum = 0.0f;
  for (float v : values) sum += v;
  const float mean = sum / static_cast<float>(values.size());
  float sq = 0.0f;
  for (float v : values) sq += (v - mean) * (v - mean);
  return sq / static_cast<float>(values.size());
}

}  // namespace sattn
