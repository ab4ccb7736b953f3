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

#include "canvasbug/metrics.h"

#include <stdexcept>
#include <string>

#include "canvasbug/errors.h"

namespace canvasbug {

std::string_view OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kTruePositive:
      return "TP";
    case Outcome::kFalsePositive:
      return "FP";
    case Outcome::kTrueNegative:
      return "TN";
    case Outcome::kFalseNegative:
      return "FN";
  }
  return "?";
}

std::string_view VerdictName(Verdict verdict) {
  return verdict == Verdict::kCorrect ? "correct" : "incorrect";
}

std::optional<Verdict> ParseVerdict(std::string_view name) {
  if (name == "correct") return Verdict::kCorrect;
  if (name == "incorrect") return Verdict::kIncorrect;
  return std::nullopt;
}

bool NeedsVerdict(bool detected, BugLabel label) {
  return detected && label != BugLabel::kBugFree;
}

Outcome Classify(const ExtractedAnswer& answer, BugLabel label,
                 std::optional<Verdict> verdict) {
  const bool detected = answer.bool_did_detect_visual_bug;
  const bool injected = label != BugLabel::kBugFree;
  if (!detected) return injected ? Outcome::kFalseNegative : Outcome::kTrueNegative;
  if (!injected) return Outcome::kFalsePositive;
  if (!verdict) {
    throw PendingAdjudicationError(
        "pending adjudication: detection on a " +
            std::string(LabelToken(label)) + " screenshot has no verdict",
        {});
  }
  return *verdict == Verdict::kCorrect ? Outcome::kTruePositive
                                       : Outcome::kFalsePositive;
}

void ConfusionCounts::Add(Outcome outcome) {
  switch (outcome) {
    case Outcome::kTruePositive:
      ++tp;
      break;
    case Outcome::kFalsePositive:
      ++fp;
      break;
    case Outcome::kTrueNegative:
      ++tn;
      break;
    case Outcome::kFalseNegative:
      ++fn;
      break;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

namespace {
std::optional<double> Ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

std::optional<double> Accuracy(const ConfusionCounts& c) {
  return Ratio(c.tn + c.tp, c.total());
}

std::optional<double> Precision(const ConfusionCounts& c) {
  return Ratio(c.tp, c.tp + c.fp);
}

std::optional<double> Recall(const ConfusionCounts& c) {
  return Ratio(c.tp, c.tp + c.fn);
}

double PassAtK(const PassAtKInput& in) {
  if (in.n < 1 || in.c < 0 || in.c > in.n || in.k < 1 || in.k > in.n) {
    throw std::invalid_argument(
        "pass@k requires 0 <= c <= n and 1 <= k <= n (n=" +
        std::to_string(in.n) + ", c=" + std::to_string(in.c) +
        ", k=" + std::to_string(in.k) + ")");
  }
  if (in.c == 0) return 0.0;
  if (in.n - in.c < in.k) return 1.0;
  double all_wrong = 1.0;
  for (int i = in.n - in.c + 1; i <= in.n; ++i) {
    all_wrong *= 1.0 - static_cast<double>(in.k) / static_cast<double>(i);
  }
  return 1.0 - all_wrong;
}

}  // namespace canvasbug
