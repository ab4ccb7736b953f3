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

#include "canvasbug/experiment.h"

#include <spdlog/spdlog.h>

#include <atomic>
#include <exception>
#include <thread>

#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"

namespace canvasbug {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

PromptStrategy StrategyField(const json& j) {
  const std::string name = j.at("strategy").get<std::string>();
  if (auto s = ParseStrategy(name)) return *s;
  throw DataError("unknown strategy '" + name + "'");
}

BugLabel LabelField(const json& j) {
  const std::string token = j.at("label").get<std::string>();
  if (auto l = ParseLabelToken(token)) return *l;
  throw DataError("unknown label '" + token + "'");
}

AnalysisRecord AnalysisFromJson(const json& j) {
  AnalysisRecord r;
  r.strategy = StrategyField(j);
  r.app_id = j.at("app_id").get<std::string>();
  r.screenshot_id = j.at("screenshot_id").get<std::string>();
  r.label = LabelField(j);
  r.image_path = j.value("image_path", "");
  r.result.repetition_index = j.at("repetition").get<int>();
  r.result.bundle_id = j.at("bundle_id").get<std::string>();
  r.result.bundle_digest = j.at("bundle_digest").get<std::string>();
  r.result.raw_text = j.at("raw_text").get<std::string>();
  r.result.model_id = j.value("model_id", "");
  r.result.created_at = j.value("created_at", "");
  r.result.attempts = j.value("attempts", 1);
  if (j.contains("usage") && j["usage"].is_object()) {
    const json& u = j["usage"];
    r.result.usage = TokenUsage{u.value("prompt_tokens", std::int64_t{0}),
                                u.value("completion_tokens", std::int64_t{0}),
                                u.value("total_tokens", std::int64_t{0})};
  }
  return r;
}

ExtractionRecord ExtractionFromJson(const json& j) {
  ExtractionRecord r;
  r.strategy = StrategyField(j);
  r.app_id = j.at("app_id").get<std::string>();
  r.screenshot_id = j.at("screenshot_id").get<std::string>();
  r.label = LabelField(j);
  r.repetition = j.at("repetition").get<int>();
  r.analysis_digest = j.at("analysis_digest").get<std::string>();
  r.answer.bool_did_detect_visual_bug =
      j.at("bool_did_detect_visual_bug").get<bool>();
  r.answer.string_description_of_visual_bug =
      j.at("string_description_of_visual_bug").get<std::string>();
  r.answer.normalized = j.value("normalized", false);
  return r;
}

SkipRecord SkipFromJson(const json& j) {
  return SkipRecord{StrategyField(j), j.at("app_id").get<std::string>(),
                    j.at("screenshot_id").get<std::string>(),
                    j.value("reason", "")};
}

struct WorkUnit {
  const PromptBundle* bundle;
  const ScreenshotRecord* shot;
  int repetition;
};

}  // namespace

std::string AnalysisRecord::digest() const { return Sha256Hex(result.raw_text); }

json ToJson(const AnalysisRecord& r) {
  json j = {{"type", "analysis"},
            {"strategy", StrategyName(r.strategy)},
            {"app_id", r.app_id},
            {"screenshot_id", r.screenshot_id},
            {"label", LabelToken(r.label)},
            {"image_path", r.image_path},
            {"repetition", r.result.repetition_index},
            {"bundle_id", r.result.bundle_id},
            {"bundle_digest", r.result.bundle_digest},
            {"raw_text", r.result.raw_text},
            {"model_id", r.result.model_id},
            {"created_at", r.result.created_at},
            {"attempts", r.result.attempts},
            {"usage", nullptr}};
  if (r.result.usage) {
    j["usage"] = {{"prompt_tokens", r.result.usage->prompt_tokens},
                  {"completion_tokens", r.result.usage->completion_tokens},
                  {"total_tokens", r.result.usage->total_tokens}};
  }
  return j;
}

json ToJson(const ExtractionRecord& r) {
  return {{"type", "extraction"},
          {"strategy", StrategyName(r.strategy)},
          {"app_id", r.app_id},
          {"screenshot_id", r.screenshot_id},
          {"label", LabelToken(r.label)},
          {"repetition", r.repetition},
          {"analysis_digest", r.analysis_digest},
          {"bool_did_detect_visual_bug", r.answer.bool_did_detect_visual_bug},
          {"string_description_of_visual_bug",
           r.answer.string_description_of_visual_bug},
          {"normalized", r.answer.normalized}};
}

json ToJson(const SkipRecord& r) {
  return {{"type", "skip"},
          {"strategy", StrategyName(r.strategy)},
          {"app_id", r.app_id},
          {"screenshot_id", r.screenshot_id},
          {"reason", r.reason}};
}

// --- RunArchive ------------------------------------------------------------

fs::path RunArchive::ArchivePath(const fs::path& dir) {
  return dir / "archive.jsonl";
}

RunArchive::RunArchive(const fs::path& dir) : path_(ArchivePath(dir)) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create run directory " + dir.string());
  Load();
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw DataError("cannot open archive " + path_.string());
}

void RunArchive::Load() {
  if (!fs::exists(path_)) return;
  const std::string bytes = ReadFileBytes(path_);
  size_t pos = 0;
  int line_no = 0;
  while (pos < bytes.size()) {
    ++line_no;
    const size_t end = bytes.find('\n', pos);
    const bool terminated = end != std::string::npos;
    const std::string line =
        bytes.substr(pos, terminated ? end - pos : std::string::npos);
    const size_t line_start = pos;
    pos = terminated ? end + 1 : bytes.size();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      if (!terminated) {
        spdlog::warn("{}: dropping torn final line {}", path_.string(), line_no);
        fs::resize_file(path_, line_start);
        break;
      }
      throw DataError(path_.string() + ":" + std::to_string(line_no) +
                      ": malformed archive record");
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "analysis") {
        analyses_.push_back(AnalysisFromJson(j));
      } else if (type == "extraction") {
        extractions_.push_back(ExtractionFromJson(j));
      } else if (type == "skip") {
        skips_.push_back(SkipFromJson(j));
      } else {
        throw DataError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw DataError(path_.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    } catch (const DataError& e) {
      throw DataError(path_.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
}

void RunArchive::WriteLine(const json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw DataError("write failure on " + path_.string());
}

void RunArchive::Append(const AnalysisRecord& record) {
  std::lock_guard lock(mu_);
  WriteLine(ToJson(record));
  analyses_.push_back(record);
}

void RunArchive::Append(const ExtractionRecord& record) {
  std::lock_guard lock(mu_);
  WriteLine(ToJson(record));
  extractions_.push_back(record);
}

void RunArchive::Append(const SkipRecord& record) {
  std::lock_guard lock(mu_);
  WriteLine(ToJson(record));
  skips_.push_back(record);
}

std::optional<AnalysisRecord> RunArchive::FindAnalysis(
    PromptStrategy strategy, const std::string& screenshot_id,
    int repetition) const {
  std::lock_guard lock(mu_);
  for (const auto& r : analyses_) {
    if (r.strategy == strategy && r.screenshot_id == screenshot_id &&
        r.result.repetition_index == repetition) {
      return r;
    }
  }
  return std::nullopt;
}

bool RunArchive::HasExtraction(PromptStrategy strategy,
                               const std::string& screenshot_id,
                               int repetition) const {
  std::lock_guard lock(mu_);
  for (const auto& r : extractions_) {
    if (r.strategy == strategy && r.screenshot_id == screenshot_id &&
        r.repetition == repetition) {
      return true;
    }
  }
  return false;
}

bool RunArchive::HasSkip(PromptStrategy strategy,
                         const std::string& screenshot_id) const {
  std::lock_guard lock(mu_);
  for (const auto& r : skips_) {
    if (r.strategy == strategy && r.screenshot_id == screenshot_id) return true;
  }
  return false;
}

std::vector<AnalysisRecord> RunArchive::analyses() const {
  std::lock_guard lock(mu_);
  return analyses_;
}

std::vector<ExtractionRecord> RunArchive::extractions() const {
  std::lock_guard lock(mu_);
  return extractions_;
}

std::vector<SkipRecord> RunArchive::skips() const {
  std::lock_guard lock(mu_);
  return skips_;
}

size_t RunArchive::line_count() const {
  std::lock_guard lock(mu_);
  return analyses_.size() + extractions_.size() + skips_.size();
}

// --- RunInfo ---------------------------------------------------------------

json RunInfo::ToJson() const {
  return {{"run_id", run_id},
          {"strategy", StrategyName(strategy)},
          {"config", config.ToJson()},
          {"manifest", manifest},
          {"provider", provider}};
}

RunInfo RunInfo::FromJson(const json& j) {
  RunInfo info;
  try {
    info.run_id = j.at("run_id").get<std::string>();
    info.strategy = StrategyField(j);
    info.config = RunConfig::FromJson(j.at("config"));
    info.manifest = j.value("manifest", "");
    info.provider = j.value("provider", "");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed run.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed run.json: ") + e.what());
  }
  return info;
}

fs::path RunInfo::PathIn(const fs::path& dir) { return dir / "run.json"; }

RunInfo RunInfo::Read(const fs::path& dir) {
  const fs::path path = PathIn(dir);
  if (!fs::exists(path)) throw DataError("not a run directory: " + dir.string());
  json j = json::parse(ReadFileBytes(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw DataError("malformed " + path.string());
  return FromJson(j);
}

void RunInfo::Write(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(PathIn(dir), std::ios::binary | std::ios::trunc);
  out << ToJson().dump(2) << '\n';
  if (!out) throw DataError("cannot write " + PathIn(dir).string());
}

// --- Runner ----------------------------------------------------------------

RunSummary RunExperiment(const Dataset& dataset, const RunInfo& info,
                         ChatProvider& provider, const fs::path& out_dir) {
  const RunConfig& config = info.config;
  config.Validate();
  const PromptStrategy strategy = info.strategy;

  if (fs::exists(RunInfo::PathIn(out_dir))) {
    const RunInfo existing = RunInfo::Read(out_dir);
    if (existing.strategy != strategy || existing.run_id != info.run_id ||
        existing.config.repetitions != config.repetitions ||
        existing.config.model_id != config.model_id) {
      throw DataError("run directory " + out_dir.string() +
                      " holds a different run (" + existing.run_id + ", " +
                      std::string(StrategyName(existing.strategy)) + ")");
    }
  } else {
    info.Write(out_dir);
  }

  RunArchive archive(out_dir);
  RunSummary summary;

  // Bundles are built up front so that prompt errors surface before any
  // provider call.
  std::vector<PromptBundle> bundles;
  std::vector<const ScreenshotRecord*> bundle_shots;
  bundles.reserve(dataset.screenshots.size());
  for (const auto& shot : dataset.screenshots) {
    const AppRecord* app = dataset.FindApp(shot.app_id);
    if (app == nullptr) {
      throw DataError("screenshot '" + shot.id() + "' has unknown app '" +
                      shot.app_id + "'");
    }
    std::optional<std::string> reason = Inapplicability(strategy, *app);
    const ScreenshotRecord* bug_free =
        dataset.FindScreenshot(shot.app_id, BugLabel::kBugFree);
    if (!reason && ContextFor(strategy).bug_free_screenshot && !bug_free) {
      reason = "no bug-free reference screenshot for app '" + shot.app_id + "'";
    }
    if (reason) {
      if (!archive.HasSkip(strategy, shot.id())) {
        archive.Append(SkipRecord{strategy, shot.app_id, shot.id(), *reason});
        ++summary.skip_notices_written;
      }
      continue;
    }
    bundles.push_back(BuildMessages(strategy, *app, shot, bug_free));
    bundle_shots.push_back(&shot);
  }

  // Repetition-major order: repetition r of the whole experiment finishes
  // before repetition r+1 starts (when sequential).
  std::vector<WorkUnit> units;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    for (size_t i = 0; i < bundles.size(); ++i) {
      units.push_back({&bundles[i], bundle_shots[i], rep});
    }
  }
  summary.units_total = static_cast<int>(units.size());

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::atomic<int> analyses_written{0}, extractions_written{0}, done{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    while (!failed) {
      const size_t index = next++;
      if (index >= units.size()) return;
      const WorkUnit& unit = units[index];
      const std::string sid = unit.shot->id();
      try {
        if (archive.HasExtraction(strategy, sid, unit.repetition)) {
          ++done;
          continue;
        }
        std::optional<AnalysisRecord> analysis =
            archive.FindAnalysis(strategy, sid, unit.repetition);
        if (!analysis) {
          AnalysisRecord record;
          record.strategy = strategy;
          record.app_id = unit.shot->app_id;
          record.screenshot_id = sid;
          record.label = unit.shot->label;
          record.image_path = unit.shot->image_path.string();
          record.result =
              CompleteAnalysis(provider, *unit.bundle, unit.repetition, config);
          archive.Append(record);
          ++analyses_written;
          analysis = std::move(record);
        }
        const RequestKey key{strategy, sid, unit.repetition, Stage::kExtraction};
        ExtractedAnswer answer =
            ExtractAnswer(provider, analysis->result, key, config);
        archive.Append(ExtractionRecord{strategy, unit.shot->app_id, sid,
                                        unit.shot->label, unit.repetition,
                                        analysis->digest(), std::move(answer)});
        ++extractions_written;
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };

  const int threads =
      std::min<int>(config.parallelism, std::max<size_t>(units.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  summary.analyses_written = analyses_written;
  summary.extractions_written = extractions_written;
  summary.units_already_done = done;
  if (first_error) std::rethrow_exception(first_error);
  spdlog::info("{}: {} units, {} new extractions, {} already archived, {} skip notices",
               info.run_id, summary.units_total, summary.extractions_written,
               summary.units_already_done, summary.skip_notices_written);
  return summary;
}

}  // namespace canvasbug
