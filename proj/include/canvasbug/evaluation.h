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

#ifndef CANVASBUG_EVALUATION_H_
#define CANVASBUG_EVALUATION_H_

#include "canvasbug/adjudication.h"
#include "canvasbug/experiment.h"
#include "canvasbug/report.h"

namespace canvasbug {

// Classifies every archived answer and aggregates it into a report:
// per-bug-type and bug-free metrics per repetition (pooled over apps),
// per-app accuracy per repetition, overall accuracy over all screenshots and
// repetitions, and per-screenshot pass@k with its mean and population
// standard deviation.
//
// Throws PendingAdjudicationError listing every detection on a bug-injected
// screenshot that lacks a verdict, and DataError when a screenshot does not
// have exactly one answer per repetition.
MetricsReport Aggregate(const RunInfo& info, const RunArchive& archive,
                        const VerdictStore& verdicts);

}  // namespace canvasbug

#endif  // CANVASBUG_EVALUATION_H_
