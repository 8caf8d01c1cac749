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

#include <span>
#include <string>

#include "json.hpp"
#include "sattn/accounting.h"
#include "sattn/analysis.h"
#include "sattn/model.h"

namespace sattn {

inline constexpr const char* kToolName = "sattn";
inline constexpr const char* kToolVersion = "0.1.0";

/// Everything needed to reproduce an output file. No wall-clock fields, so
/// identical runs produce identical bytes.
struct RunMeta {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json flags = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();  // e.g. tau, aggregation modes
};

/// FNV-1a 64 of the canonical config JSON, as 16 hex digits.
std::string config_hash(const ModelConfig& config);
std::string config_hash(const nlohmann::json& config);

nlohmann::json meta_json(const RunMeta& meta);
/// "# meta {...}" line that starts every CSV file.
std::string csv_meta_line(const RunMeta& meta);

/// Shortest round-trip decimal form.
std::string format_number(float v);
std::string format_number(double v);

std::string similarity_csv(const SimilaritySurface& surface, const RunMeta& meta);
nlohmann::json similarity_json(const SimilaritySurface& surface, const GroupSegmentation& groups,
                               const RunMeta& meta);

/// `wcv` may be null when the weighted variant could not be normalized; the
/// column is then left empty.
std::string variance_csv(const VarianceSurface& variance, const VarianceSurface* wcv,
                         const RunMeta& meta);
nlohmann::json variance_json(const VarianceSurface& variance, const VarianceSurface* wcv,
                             const RunMeta& meta);

std::string savings_csv(std::span<const SavingsRow> rows, const RunMeta& meta);
nlohmann::json savings_json(std::span<const SavingsRow> rows, const RunMeta& meta);

nlohmann::json cost_report_json(const CostReport& report);

}  // namespace sattn
