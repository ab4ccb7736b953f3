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

#include "canvasbug/evaluation.h"

#include <cmath>
#include <set>

#include "canvasbug/errors.h"

namespace canvasbug {

MetricsReport Aggregate(const RunInfo& info, const RunArchive& archive,
                        const VerdictStore& verdicts) {
  const int n = info.config.repetitions;
  MetricsReport report;
  report.run_id = info.run_id;
  report.strategy = info.strategy;
  report.repetitions = n;
  report.k_values = info.config.k_values;

  const auto extractions = archive.extractions();

  std::vector<std::string> pending;
  for (const auto& e : extractions) {
    if (NeedsVerdict(e.answer.bool_did_detect_visual_bug, e.label) &&
        verdicts.Find(info.run_id, e.screenshot_id, e.repetition,
                      e.analysis_digest) == nullptr) {
      pending.push_back(info.run_id + "/" + e.screenshot_id + "#" +
                        std::to_string(e.repetition));
    }
  }
  if (!pending.empty()) {
    std::string what =
        std::to_string(pending.size()) + " detection(s) await adjudication";
    throw PendingAdjudicationError(std::move(what), std::move(pending));
  }

  for (BugLabel label : kInjectedBugLabels) {
    report.per_bug_type[label].resize(static_cast<size_t>(n));
  }
  std::vector<ConfusionCounts> bug_free(static_cast<size_t>(n));
  std::map<BugLabel, std::vector<ConfusionCounts>> per_type;
  for (BugLabel label : kInjectedBugLabels) {
    per_type[label].resize(static_cast<size_t>(n));
  }
  std::map<std::string, std::vector<ConfusionCounts>> per_app;
  ConfusionCounts overall;
  std::map<std::string, std::set<int>> seen;
  std::map<std::string, int> correct;
  int normalized = 0;
  int verdicts_used = 0;

  for (const auto& e : extractions) {
    if (e.repetition < 0 || e.repetition >= n) {
      throw DataError("answer for " + e.screenshot_id + " has repetition " +
                      std::to_string(e.repetition) + " outside [0, " +
                      std::to_string(n) + ")");
    }
    if (!seen[e.screenshot_id].insert(e.repetition).second) {
      throw DataError("duplicate answer for " + e.screenshot_id + "#" +
                      std::to_string(e.repetition));
    }
    std::optional<Verdict> verdict;
    if (const auto* v = verdicts.Find(info.run_id, e.screenshot_id,
                                      e.repetition, e.analysis_digest)) {
      verdict = v->verdict;
      verdicts_used += NeedsVerdict(e.answer.bool_did_detect_visual_bug, e.label);
    }
    const Outcome outcome = Classify(e.answer, e.label, verdict);
    const auto rep = static_cast<size_t>(e.repetition);
    if (e.label == BugLabel::kBugFree) {
      bug_free[rep].Add(outcome);
    } else {
      per_type[e.label][rep].Add(outcome);
    }
    auto& app = per_app[e.app_id];
    app.resize(static_cast<size_t>(n));
    app[rep].Add(outcome);
    overall.Add(outcome);
    correct[e.screenshot_id] += IsCorrect(outcome);
    normalized += e.answer.normalized;
  }

  for (const auto& [sid, reps] : seen) {
    if (static_cast<int>(reps.size()) != n) {
      throw DataError("screenshot " + sid + " has " +
                      std::to_string(reps.size()) + " of " + std::to_string(n) +
                      " repetitions archived; resume the run first");
    }
  }

  for (auto& [label, slices] : report.per_bug_type) {
    for (size_t rep = 0; rep < slices.size(); ++rep) {
      slices[rep] = SliceMetrics::From(per_type[label][rep]);
    }
  }
  for (const auto& counts : bug_free) {
    report.bug_free.push_back(SliceMetrics::From(counts));
  }
  for (const auto& [app, reps] : per_app) {
    auto& out = report.per_app[app];
    for (const auto& counts : reps) out.push_back(SliceMetrics::From(counts));
  }
  report.overall = SliceMetrics::From(overall);

  for (int k : report.k_values) {
    std::vector<double> values;
    for (const auto& [sid, c] : correct) {
      const double v = PassAtK({n, c, k});
      report.per_screenshot_pass_at_k[sid][k] = v;
      values.push_back(v);
    }
    PassAtKSummary summary;
    summary.screenshots = static_cast<int>(values.size());
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      summary.mean = mean;
      summary.std = std::sqrt(sq / static_cast<double>(values.size()));
    }
    report.pass_at_k[k] = summary;
  }
  report.per_screenshot_correct = correct;

  report.metadata = {
      {"config", info.config.ToJson()},
      {"screenshots", correct.size()},
      {"answers", extractions.size()},
      {"skipped_screenshots", archive.skips().size()},
      {"normalized_answers", normalized},
      {"verdicts_used", verdicts_used},
      {"decisions",
       {{"pass_at_k_std", "population standard deviation over screenshots"},
        {"per_app_accuracy",
         "computed over each application's own screenshots for each "
         "repetition; a whole-corpus reading is also plausible and is not "
         "used"},
        {"undefined_metrics",
         "zero denominators are reported as null and excluded from means"},
        {"correct_response", "TP or TN"}}}};
  return report;
}

}  // namespace canvasbug
