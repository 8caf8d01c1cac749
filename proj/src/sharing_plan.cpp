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

#include "sattn/sharing_plan.h"

#include <algorithm>
#include <charconv>

#include "sattn/errors.h"

namespace sattn {

namespace {

std::size_t parse_index(std::string_view text, std::string_view whole) {
  std::size_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw PlanError("malformed span \"" + std::string(whole) + "\", expected a:b");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

SharingPlan::SharingPlan(std::vector<LayerSpan> spans) : spans_(std::move(spans)) {
  std::sort(spans_.begin(), spans_.end());
}

void SharingPlan::validate(std::size_t n_layers) const {
  for (std::size_t i = 0; i < spans_.size(); ++i) {
    const LayerSpan& s = spans_[i];
    if (s.start > s.end) {
      throw PlanError("span " + std::to_string(s.start) + ":" + std::to_string(s.end) +
                      " is inverted");
    }
    if (s.end >= n_layers) {
      throw PlanError("span " + std::to_string(s.start) + ":" + std::to_string(s.end) +
                      " exceeds " + std::to_string(n_layers) + " layers");
    }
    if (i > 0 && s.start <= spans_[i - 1].end) {
      throw PlanError("spans " + std::to_string(spans_[i - 1].start) + ":" +
                      std::to_string(spans_[i - 1].end) + " and " + std::to_string(s.start) + ":" +
                      std::to_string(s.end) + " overlap");
    }
  }
}

std::size_t SharingPlan::member_layer_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : spans_) n += s.end >= s.start ? s.end - s.start : 0;
  return n;
}

std::string SharingPlan::to_string() const {
  if (spans_.empty()) return "none";
  std::string out;
  for (const auto& s : spans_) {
    if (!out.empty()) out += ',';
    out += std::to_string(s.start) + ":" + std::to_string(s.end);
  }
  return out;
}

LayerSpan SharingPlan::parse_span(std::string_view text) {
  const std::string_view t = trim(text);
  const auto colon = t.find(':');
  if (colon == std::string_view::npos) {
    throw PlanError("malformed span \"" + std::string(text) + "\", expected a:b");
  }
  return {parse_index(trim(t.substr(0, colon)), text), parse_index(trim(t.substr(colon + 1)), text)};
}

SharingPlan SharingPlan::parse(std::string_view text) {
  const std::string_view t = trim(text);
  if (t.empty() || t == "none") return {};
  std::vector<LayerSpan> spans;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    const auto comma = t.find(',', pos);
    const auto piece = t.substr(pos, comma == std::string_view::npos ? t.size() - pos : comma - pos);
    spans.push_back(parse_span(piece));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return SharingPlan(std::move(spans));
}

ClaMap default_cla_pairs(std::size_t n_layers) {
  ClaMap map;
  for (std::size_t l = 1; l < n_layers; l += 2) map[l] = l - 1;
  return map;
}

std::vector<LayerRole> plan_roles(const SharingPlan& plan, std::size_t n_layers) {
  plan.validate(n_layers);
  std::vector<LayerRole> roles(n_layers, LayerRole::standard());
  for (std::size_t id = 0; id < plan.spans().size(); ++id) {
    const LayerSpan& s = plan.spans()[id];
    roles[s.start] = LayerRole::anchor_of(id, s.start);
    for (std::size_t l = s.start + 1; l <= s.end; ++l) roles[l] = LayerRole::member_of(id, s.start);
  }
  return roles;
}

}  // namespace sattn
