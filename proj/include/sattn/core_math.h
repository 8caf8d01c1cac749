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
#include <initializer_list>
#include <span>
#include <vector>

namespace sattn {

/// Dense row-major f32 matrix.
class Matrix {
 public:
  Matrix() = default;
  /// Zero-filled rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of `data`; throws ShapeError if data.size() != rows*cols
  /// and DomainError if any entry is NaN or infinite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(data_).subspan(r * cols_, cols_);
  }
  std::span<float> row(std::size_t r) { return std::span<float>(data_).subspan(r * cols_, cols_); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }
  std::vector<float> release() && { return std::move(data_); }

  bool all_finite() const noexcept;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Causal attention weights. Row i holds the distribution of the query at
/// absolute position i + offset() over key positions 0..i + offset(), where
/// offset() = cols - rows. A full-sequence matrix is square (offset 0); a
/// single decode step is one row over every cached position.
class RowStochasticMatrix {
 public:
  RowStochasticMatrix() = default;

  /// Validates the causal row-stochastic invariants (rows sum to 1 within
  /// `tolerance`, entries in [0, 1], zero above the causal boundary) and
  /// throws DomainError on violation.
  static RowStochasticMatrix validated(Matrix m, float tolerance = 1e-5f);

  const Matrix& matrix() const noexcept { return inner_; }
  std::size_t rows() const noexcept { return inner_.rows(); }
  std::size_t cols() const noexcept { return inner_.cols(); }
  std::size_t offset() const noexcept { return inner_.cols() - inner_.rows(); }
  bool square() const noexcept { return inner_.rows() == inner_.cols(); }
  float operator()(std::size_t r, std::size_t c) const { return inner_(r, c); }
  std::span<const float> row(std::size_t r) const { return inner_.row(r); }

  bool operator==(const RowStochasticMatrix&) const = default;

 private:
  friend RowStochasticMatrix causal_softmax(const Matrix& scores, float scale);
  explicit RowStochasticMatrix(Matrix m) : inner_(std::move(m)) {}

  Matrix inner_;
};

/// c = a * b, each output element accumulated left to right over k in f32.
Matrix matmul(const Matrix& a, const Matrix& b);

/// f32 dot product accumulated left to right.
float dot(std::span<const float> a, std::span<const float> b);

/// Softmax of scale*scores over all entries of `scores`, written to `out`.
/// Row max is subtracted before exponentiation.
void softmax_into(std::span<const float> scores, float scale, std::span<float> out);

/// Row-wise causal softmax. Requires rows <= cols (square in the
/// full-sequence case); entries beyond the causal boundary are excluded from
/// normalization and set to exactly 0.
RowStochasticMatrix causal_softmax(const Matrix& scores, float scale);

/// y_i = gain_i * x_i / sqrt(mean(x^2) + eps). A zero denominator (all-zero x
/// with eps = 0) yields zeros.
std::vector<float> rms_norm(std::span<const float> x, std::span<const float> gain, float eps);
void rms_norm_into(std::span<const float> x, std::span<const float> gain, float eps,
                   std::span<float> out);

/// Rotary embedding: pair (x[2k], x[2k+1]) rotated by
/// position * theta_base^(-2k/d). Throws ConfigError for odd lengths.
std::vector<float> rope_rotate(std::span<const float> x, std::size_t position, float theta_base);
void rope_rotate_inplace(std::span<float> x, std::size_t position, float theta_base);

/// u.v / (|u||v|), clamped to [-1, 1]. Throws SimilarityError if either
/// vector is all zeros and ShapeError on length mismatch.
float cosine_similarity(std::span<const float> u, std::span<const float> v);

/// Population variance (mean of squared deviations). Throws DomainError when
/// empty.
float variance(std::span<const float> values);

}  // namespace sattn
