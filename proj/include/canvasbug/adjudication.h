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

// Human review of positive predictions on bug-injected screenshots.
//
// Verdicts live in a newline-delimited JSON store, one AdjudicationRecord per
// line. Each verdict is bound to the SHA-256 of the analysis text it judged,
// so a re-run that produced different output does not inherit it.

#ifndef CANVASBUG_ADJUDICATION_H_
#define CANVASBUG_ADJUDICATION_H_

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canvasbug/experiment.h"
#include "canvasbug/metrics.h"

namespace canvasbug {

struct AdjudicationRecord {
  std::string run_id;
  std::string screenshot_id;
  int repetition_index = 0;
  std::string analysis_digest;
  Verdict verdict = Verdict::kIncorrect;
  std::optional<std::string> note;
  std::string reviewer;
  std::string decided_at;

  nlohmann::json ToJson() const;
  static AdjudicationRecord FromJson(const nlohmann::json& j);
  bool operator==(const AdjudicationRecord&) const = default;
};

// One detection awaiting (or having received) a verdict.
struct ReviewItem {
  std::string run_id;
  std::string app_id;
  std::string screenshot_id;
  BugLabel label = BugLabel::kBugFree;
  int repetition = 0;
  std::string image_path;
  std::string description;
  std::string analysis_digest;

  // "<run_id>/<screenshot_id>#<repetition>"
  std::string key() const;
};

class VerdictStore {
 public:
  // A missing file is an empty store; it is created on first append.
  explicit VerdictStore(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  const std::vector<AdjudicationRecord>& records() const { return records_; }

  // The verdict for this detection, matching the analysis digest too.
  const AdjudicationRecord* Find(const std::string& run_id,
                                 const std::string& screenshot_id,
                                 int repetition,
                                 const std::string& analysis_digest) const;

  // Appends and flushes. Throws DataError if a verdict for the same
  // detection (including digest) is already stored.
  void Append(const AdjudicationRecord& record);

 private:
  std::filesystem::path path_;
  std::vector<AdjudicationRecord> records_;
};

// Every detection on a bug-injected screenshot, in archive order.
std::vector<ReviewItem> ReviewCandidates(const RunArchive& archive,
                                         const std::string& run_id);

// Candidates that have no stored verdict. Detections on bug-free screenshots
// are false positives by rule and never appear.
std::vector<ReviewItem> PendingQueue(const RunArchive& archive,
                                     const std::string& run_id,
                                     const VerdictStore& store);

// Stores a verdict for a pending detection. Throws DataError for an unknown
// item or a duplicate verdict; the store is unchanged in both cases.
AdjudicationRecord RecordVerdict(VerdictStore& store, const RunArchive& archive,
                                 const std::string& run_id,
                                 const std::string& screenshot_id,
                                 int repetition, Verdict verdict,
                                 std::optional<std::string> note,
                                 const std::string& reviewer);

}  // namespace canvasbug

#endif  // CANVASBUG_ADJUDICATION_H_
