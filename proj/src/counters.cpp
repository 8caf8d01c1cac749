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

#include "sattn/counters.h"

namespace sattn {

std::string_view name_of(FlopCategory c) {
  switch (c) {
    case FlopCategory::kQProj: return "q_proj";
    case FlopCategory::kKProj: return "k_proj";
    case FlopCategory::kVProj: return "v_proj";
    case FlopCategory::kScores: return "scores";
    case FlopCategory::kSoftmax: return "softmax";
    case FlopCategory::kMix: return "mix";
    case FlopCategory::kOProj: return "o_proj";
    case FlopCategory::kMlp: return "mlp";
  }
  return "unknown";
}

std::string_view name_of(KvCategory c) {
  return c == KvCategory::kKeys ? "keys" : "values";
}

std::uint64_t LayerFlops::total() const noexcept {
  std::uint64_t t = 0;
  for (auto v : counts) t += v;
  return t;
}

LayerFlops& LayerFlops::operator+=(const LayerFlops& other) noexcept {
  for (std::size_t i = 0; i < kFlopCategoryCount; ++i) counts[i] += other.counts[i];
  return *this;
}

}  // namespace sattn
