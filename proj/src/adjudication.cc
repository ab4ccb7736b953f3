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

#include "canvasbug/adjudication.h"

#include <map>

#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"

namespace canvasbug {

using nlohmann::json;

json AdjudicationRecord::ToJson() const {
  return {{"run_id", run_id},
          {"screenshot_id", screenshot_id},
          {"repetition_index", repetition_index},
          {"analysis_digest", analysis_digest},
          {"verdict", VerdictName(verdict)},
          {"note", note ? json(*note) : json(nullptr)},
          {"reviewer", reviewer},
          {"decided_at", decided_at}};
}

AdjudicationRecord AdjudicationRecord::FromJson(const json& j) {
  AdjudicationRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.screenshot_id = j.at("screenshot_id").get<std::string>();
    r.repetition_index = j.at("repetition_index").get<int>();
    r.analysis_digest = j.at("analysis_digest").get<std::string>();
    const std::string v = j.at("verdict").get<std::string>();
    auto verdict = ParseVerdict(v);
    if (!verdict) throw DataError("unknown verdict '" + v + "'");
    r.verdict = *verdict;
    if (j.contains("note") && j["note"].is_string()) {
      r.note = j["note"].get<std::string>();
    }
    r.reviewer = j.value("reviewer", "");
    r.decided_at = j.value("decided_at", "");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed verdict record: ") + e.what());
  }
  return r;
}

std::string ReviewItem::key() const {
  return run_id + "/" + screenshot_id + "#" + std::to_string(repetition);
}

VerdictStore::VerdictStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  if (!in) throw DataError("cannot open verdict store " + path_.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      throw DataError(path_.string() + ":" + std::to_string(line_no) +
                      ": malformed verdict record");
    }
    records_.push_back(AdjudicationRecord::FromJson(j));
  }
}

const AdjudicationRecord* VerdictStore::Find(
    const std::string& run_id, const std::string& screenshot_id, int repetition,
    const std::string& analysis_digest) const {
  for (const auto& r : records_) {
    if (r.run_id == run_id && r.screenshot_id == screenshot_id &&
        r.repetition_index == repetition && r.analysis_digest == analysis_digest) {
      return &r;
    }
  }
  return nullptr;
}

void VerdictStore::Append(const AdjudicationRecord& record) {
  if (Find(record.run_id, record.screenshot_id, record.repetition_index,
           record.analysis_digest) != nullptr) {
    throw DataError("duplicate verdict for " + record.run_id + "/" +
                    record.screenshot_id + "#" +
                    std::to_string(record.repetition_index));
  }
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << record.ToJson().dump() << '\n';
  out.flush();
  if (!out) throw DataError("write failure on " + path_.string());
  records_.push_back(record);
}

std::vector<ReviewItem> ReviewCandidates(const RunArchive& archive,
                                         const std::string& run_id) {
  std::map<std::pair<std::string, int>, std::string> image_paths;
  for (const auto& a : archive.analyses()) {
    image_paths[{a.screenshot_id, a.result.repetition_index}] = a.image_path;
  }
  std::vector<ReviewItem> out;
  for (const auto& e : archive.extractions()) {
    if (!NeedsVerdict(e.answer.bool_did_detect_visual_bug, e.label)) continue;
    ReviewItem item;
    item.run_id = run_id;
    item.app_id = e.app_id;
    item.screenshot_id = e.screenshot_id;
    item.label = e.label;
    item.repetition = e.repetition;
    item.description = e.answer.string_description_of_visual_bug;
    item.analysis_digest = e.analysis_digest;
    if (auto it = image_paths.find({e.screenshot_id, e.repetition});
        it != image_paths.end()) {
      item.image_path = it->second;
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<ReviewItem> PendingQueue(const RunArchive& archive,
                                     const std::string& run_id,
                                     const VerdictStore& store) {
  std::vector<ReviewItem> out;
  for (auto& item : ReviewCandidates(archive, run_id)) {
    if (store.Find(run_id, item.screenshot_id, item.repetition,
                   item.analysis_digest) == nullptr) {
      out.push_back(std::move(item));
    }
  }
  return out;
}

AdjudicationRecord RecordVerdict(VerdictStore& store, const RunArchive& archive,
                                 const std::string& run_id,
                                 const std::string& screenshot_id,
                                 int repetition, Verdict verdict,
                                 std::optional<std::string> note,
                                 const std::string& reviewer) {
  const std::string key =
      run_id + "/" + screenshot_id + "#" + std::to_string(repetition);
  for (const auto& item : ReviewCandidates(archive, run_id)) {
    if (item.screenshot_id != screenshot_id || item.repetition != repetition) {
      continue;
    }
    AdjudicationRecord record;
    record.run_id = run_id;
    record.screenshot_id = screenshot_id;
    record.repetition_index = repetition;
    record.analysis_digest = item.analysis_digest;
    record.verdict = verdict;
    record.note = std::move(note);
    record.reviewer = reviewer;
    record.decided_at = FormatUtcTimestamp(UnixNow());
    store.Append(record);
    return record;
  }
  throw DataError("unknown review item " + key +
                  " (not a detection on a bug-injected screenshot)");
}

}  // namespace canvasbug
