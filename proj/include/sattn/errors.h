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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sattn {

// Every failure raised by the library derives from Error and carries a short
// machine-readable kind ("shape", "plan", ...) used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  std::string_view kind() const noexcept { return kind_; }

 private:
  std::string_view kind_;
};

#define SATTN_DEFINE_ERROR(Name, kind_name)                                    \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& message) : Error(kind_name, message) {}  \
  }

SATTN_DEFINE_ERROR(ShapeError, "shape");
SATTN_DEFINE_ERROR(ConfigError, "config");
SATTN_DEFINE_ERROR(PlanError, "plan");
SATTN_DEFINE_ERROR(DomainError, "domain");
SATTN_DEFINE_ERROR(SimilarityError, "undefined_similarity");
SATTN_DEFINE_ERROR(SequencingError, "sequencing");
SATTN_DEFINE_ERROR(ContractError, "contract");
SATTN_DEFINE_ERROR(InputError, "input");
SATTN_DEFINE_ERROR(CapacityError, "capacity");
SATTN_DEFINE_ERROR(IoError, "io");

#undef SATTN_DEFINE_ERROR

/// Raised by weighted_cumulative_variance when one or more head columns sum to
/// zero; heads() lists every offending head.
class NormalizationError : public Error {
 public:
  NormalizationError(const std::string& message, std::vector<std::size_t> heads)
      : Error("normalization", message), heads_(std::move(heads)) {}

  const std::vector<std::size_t>& heads() const noexcept { return heads_; }

 private:
  std::vector<std::size_t> heads_;
};

}  // namespace sattn
