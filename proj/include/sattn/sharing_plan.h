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

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sattn {

/// Inclusive layer range [start, end] sharing one set of attention weights.
/// The anchor is always `start`.
struct LayerSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start + 1; }
  bool contains(std::size_t layer) const noexcept { return layer >= start && layer <= end; }

  auto operator<=>(const LayerSpan&) const = default;
};

/// Ordered, disjoint attention-sharing spans. Spans are sorted by start on
/// construction; validate() checks range and disjointness for a layer count.
class SharingPlan {
 public:
  SharingPlan() = default;
  explicit SharingPlan(std::vector<LayerSpan> spans);

  const std::vector<LayerSpan>& spans() const noexcept { return spans_; }
  bool empty() const noexcept { return spans_.empty(); }

  /// Throws PlanError if a span is inverted, out of range or overlaps another.
  void validate(std::size_t n_layers) const;

  /// Number of layers that reuse another layer's weights: sum of (len - 1).
  std::size_t member_layer_count() const noexcept;

  /// "a:b,c:d", or "none" for the empty plan.
  std::string to_string() const;

  /// Parses one "a:b" span (inclusive). Throws PlanError on malformed text.
  static LayerSpan parse_span(std::string_view text);
  /// Parses a comma-separated list of spans; "" and "none" give the empty plan.
  static SharingPlan parse(std::string_view text);

  bool operator==(const SharingPlan&) const = default;

 private:
  std::vector<LayerSpan> spans_;
};

/// Cross-layer KV sharing map: child layer -> parent layer whose cached K and
/// V it reads. Entries with child == parent are inert.
using ClaMap = std::map<std::size_t, std::size_t>;

/// Pairs adjacent layers: every odd layer reads the cache of the even layer
/// just below it.
ClaMap default_cla_pairs(std::size_t n_layers);

struct LayerRole {
  enum class Kind { kStandard, kAnchor, kMember };

  Kind kind = Kind::kStandard;
  std::size_t span_id = 0;
  std::size_t anchor = 0;

  static LayerRole standard() { return {}; }
  static LayerRole anchor_of(std::size_t span_id, std::size_t layer) {
    return {Kind::kAnchor, span_id, layer};
  }
  static LayerRole member_of(std::size_t span_id, std::size_t anchor_layer) {
    return {Kind::kMember, span_id, anchor_layer};
  }

  bool is_member() const noexcept { return kind == Kind::kMember; }
  bool is_anchor() const noexcept { return kind == Kind::kAnchor; }

  bool operator==(const LayerRole&) const = default;
};

/// Anchors at span starts, members for the rest of each span, Standard
/// elsewhere. Throws PlanError if the plan is invalid for n_layers.
std::vector<LayerRole> plan_roles(const SharingPlan& plan, std::size_t n_layers);

}  // namespace sattn
