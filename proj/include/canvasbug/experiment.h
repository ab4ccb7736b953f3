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

// Experiment runner and its append-only run archive.
//
// A run directory holds:
//   run.json       run id, strategy, and the configuration echo
//   archive.jsonl  one JSON record per stage event, in append order:
//     {"type":"analysis",   strategy, app_id, screenshot_id, label, image_path,
//      repetition, bundle_id, bundle_digest, raw_text, model_id, created_at,
//      usage, attempts}
//     {"type":"extraction", strategy, app_id, screenshot_id, label, repetition,
//      analysis_digest, bool_did_detect_visual_bug,
//      string_description_of_visual_bug, normalized}
//     {"type":"skip",       strategy, app_id, screenshot_id, reason}

#ifndef CANVASBUG_EXPERIMENT_H_
#define CANVASBUG_EXPERIMENT_H_

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canvasbug/dataset.h"
#include "canvasbug/prompting.h"
#include "canvasbug/vlm_client.h"

namespace canvasbug {

struct AnalysisRecord {
  PromptStrategy strategy = PromptStrategy::kNoContext;
  std::string app_id;
  std::string screenshot_id;
  BugLabel label = BugLabel::kBugFree;
  std::string image_path;
  AnalysisResult result;

  std::string digest() const;  // SHA-256 of result.raw_text
};

struct ExtractionRecord {
  PromptStrategy strategy = PromptStrategy::kNoContext;
  std::string app_id;
  std::string screenshot_id;
  BugLabel label = BugLabel::kBugFree;
  int repetition = 0;
  std::string analysis_digest;
  ExtractedAnswer answer;
};

struct SkipRecord {
  PromptStrategy strategy = PromptStrategy::kNoContext;
  std::string app_id;
  std::string screenshot_id;
  std::string reason;
};

nlohmann::json ToJson(const AnalysisRecord& record);
nlohmann::json ToJson(const ExtractionRecord& record);
nlohmann::json ToJson(const SkipRecord& record);

class RunArchive {
 public:
  // Creates the directory if needed and loads any existing archive.jsonl. A
  // torn final line left by an interrupted writer is dropped; any other
  // malformed line is a DataError.
  explicit RunArchive(const std::filesystem::path& dir);
  RunArchive(const RunArchive&) = delete;
  RunArchive& operator=(const RunArchive&) = delete;

  static std::filesystem::path ArchivePath(const std::filesystem::path& dir);

  // Appends are serialized and flushed line by line.
  void Append(const AnalysisRecord& record);
  void Append(const ExtractionRecord& record);
  void Append(const SkipRecord& record);

  std::optional<AnalysisRecord> FindAnalysis(PromptStrategy strategy,
                                             const std::string& screenshot_id,
                                             int repetition) const;
  bool HasExtraction(PromptStrategy strategy, const std::string& screenshot_id,
                     int repetition) const;
  bool HasSkip(PromptStrategy strategy, const std::string& screenshot_id) const;

  std::vector<AnalysisRecord> analyses() const;
  std::vector<ExtractionRecord> extractions() const;
  std::vector<SkipRecord> skips() const;
  size_t line_count() const;

 private:
  void Load();
  void WriteLine(const nlohmann::json& record);

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::vector<AnalysisRecord> analyses_;
  std::vector<ExtractionRecord> extractions_;
  std::vector<SkipRecord> skips_;
};

struct RunInfo {
  std::string run_id;
  PromptStrategy strategy = PromptStrategy::kNoContext;
  RunConfig config;
  std::string manifest;
  std::string provider;

  nlohmann::json ToJson() const;
  static RunInfo FromJson(const nlohmann::json& j);
  static std::filesystem::path PathIn(const std::filesystem::path& dir);
  // Throws DataError when run.json is absent or malformed.
  static RunInfo Read(const std::filesystem::path& dir);
  void Write(const std::filesystem::path& dir) const;
};

struct RunSummary {
  int analyses_written = 0;
  int extractions_written = 0;
  int units_already_done = 0;
  int skip_notices_written = 0;
  int units_total = 0;
};

// Runs both stages for every applicable screenshot and repetition, appending
// to `out_dir`'s archive. Units whose extraction is already archived are
// skipped, and an archived analysis without its extraction is reused, so
// re-running resumes an interrupted run and leaves a finished one unchanged.
// Screenshots of apps the strategy cannot apply to get one skip notice each.
// `info.strategy` and `info.config` drive the run; run.json is written on the
// first call and must match on later ones.
RunSummary RunExperiment(const Dataset& dataset, const RunInfo& info,
                         ChatProvider& provider,
                         const std::filesystem::path& out_dir);

}  // namespace canvasbug

#endif  // CANVASBUG_EXPERIMENT_H_
