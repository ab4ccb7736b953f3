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

// Outcome classification and the detection metrics computed from it.

#ifndef CANVASBUG_METRICS_H_
#define CANVASBUG_METRICS_H_

#include <cstdint>
#include <optional>
#include <string_view>

#include "canvasbug/dataset.h"
#include "canvasbug/vlm_client.h"

namespace canvasbug {

enum class Outcome { kTruePositive, kFalsePositive, kTrueNegative, kFalseNegative };
std::string_view OutcomeName(Outcome outcome);  // "TP", "FP", "TN", "FN"

// Human judgement of whether a bug description matches the injected bug.
enum class Verdict { kCorrect, kIncorrect };
std::string_view VerdictName(Verdict verdict);  // "correct", "incorrect"
std::optional<Verdict> ParseVerdict(std::string_view name);

// True when classifying this answer needs a human verdict: a detection on a
// bug-injected screenshot.
bool NeedsVerdict(bool detected, BugLabel label);

//   detect=false, bug-free  -> TN
//   detect=false, injected  -> FN
//   detect=true,  bug-free  -> FP
//   detect=true,  injected  -> TP if the verdict is Correct, else FP
// Throws PendingAdjudicationError when a required verdict is missing. A
// verdict supplied where none is needed is ignored.
Outcome Classify(const ExtractedAnswer& answer, BugLabel label,
                 std::optional<Verdict> verdict);

// A correct response for pass@k purposes: TP or TN.
inline bool IsCorrect(Outcome outcome) {
  return outcome == Outcome::kTruePositive || outcome == Outcome::kTrueNegative;
}

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  void Add(Outcome outcome);
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

// Each returns nullopt, the undefined sentinel, on a zero denominator.
std::optional<double> Accuracy(const ConfusionCounts& c);
std::optional<double> Precision(const ConfusionCounts& c);
std::optional<double> Recall(const ConfusionCounts& c);

struct PassAtKInput {
  int n = 0;  // responses generated
  int c = 0;  // correct responses
  int k = 0;  // responses considered
};

// Unbiased pass@k estimator:
//   1                                   if c > 0 and n - c < k
//   1 - prod_{i=n-c+1}^{n} (1 - k / i)  if c > 0 and n - c >= k
//   0                                   if c = 0
// Throws std::invalid_argument unless 0 <= c <= n and 1 <= k <= n.
double PassAtK(const PassAtKInput& input);

}  // namespace canvasbug

#endif  // CANVASBUG_METRICS_H_
