// Copyright 2026 The canvasbug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Metrics report model and its CSV, JSON, and terminal renderings.

#ifndef CANVASBUG_REPORT_H_
#define CANVASBUG_REPORT_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canvasbug/metrics.h"
#include "canvasbug/prompting.h"

namespace canvasbug {

struct SliceMetrics {
  ConfusionCounts counts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;

  static SliceMetrics From(const ConfusionCounts& counts);
};

struct PassAtKSummary {
  std::optional<double> mean;
  std::optional<double> std;  // population standard deviation
  int screenshots = 0;
};

struct MetricsReport {
  std::string run_id;
  PromptStrategy strategy = PromptStrategy::kNoContext;
  int repetitions = 0;
  std::vector<int> k_values;

  // Injected bug types only; element r is repetition r, pooled over apps.
  std::map<BugLabel, std::vector<SliceMetrics>> per_bug_type;
  // Bug-free screenshots, per repetition.
  std::vector<SliceMetrics> bug_free;
  // Element r is the app's five screenshots at repetition r.
  std::map<std::string, std::vector<SliceMetrics>> per_app;
  // All screenshots, all repetitions.
  SliceMetrics overall;

  std::map<int, PassAtKSummary> pass_at_k;
  // screenshot id -> k -> pass@k
  std::map<std::string, std::map<int, double>> per_screenshot_pass_at_k;
  // screenshot id -> correct responses out of `repetitions`
  std::map<std::string, int> per_screenshot_correct;

  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json ToJson(const MetricsReport& report);
MetricsReport MetricsReportFromJson(const nlohmann::json& j);
void WriteReport(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport ReadReport(const std::filesystem::path& path);

enum class CsvKind { kPerBugType, kPerApp, kOverall };

// RFC 4180 CSV with a header row. Metric values are printed at full
// precision; undefined values print as "n/a".
std::string EmitCsv(const MetricsReport& report, CsvKind kind);
void WriteCsv(const MetricsReport& report, CsvKind kind,
              const std::filesystem::path& path);

struct PassAtKRow {
  PromptStrategy strategy = PromptStrategy::kNoContext;
  std::string run_id;
  std::map<int, PassAtKSummary> values;
};

struct PassAtKTable {
  std::vector<int> k_values;
  std::vector<PassAtKRow> rows;

  // Whitespace-aligned table with integer percentages.
  std::string ToText() const;
  std::string ToCsv() const;
  nlohmann::json ToJson() const;
};

// One row per report, in input order. Throws ConfigError when the reports
// disagree on k_values.
PassAtKTable EmitPassAtKTable(const std::vector<MetricsReport>& reports);

// Integer percentage for display, or "n/a".
std::string DisplayPercent(std::optional<double> fraction);

}  // namespace canvasbug

#endif  // CANVASBUG_REPORT_H_
