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
#include <vector>

#include "sattn/core_math.h"

namespace sattn {

/// Captured attention of one forward pass: layers[l][h] is the T x T causal
/// weight matrix of head h in layer l.
struct AttentionRecord {
  std::size_t sample_id = 0;
  std::vector<std::vector<RowStochasticMatrix>> layers;

  std::size_t n_layers() const noexcept { return layers.size(); }
  std::size_t n_heads() const noexcept { return layers.empty() ? 0 : layers.front().size(); }
  std::size_t seq_len() const noexcept {
    return n_heads() == 0 ? 0 : layers.front().front().rows();
  }
};

}  // namespace sattn
