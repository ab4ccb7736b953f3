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

#include "canvasbug/report.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"

namespace canvasbug {
namespace {

using nlohmann::json;

constexpr std::string_view kCrlf = "\r\n";

json OptionalNumber(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> NumberOrNull(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

json CountsJson(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

ConfusionCounts CountsFromJson(const json& j) {
  return {j.at("tp").get<std::int64_t>(), j.at("fp").get<std::int64_t>(),
          j.at("tn").get<std::int64_t>(), j.at("fn").get<std::int64_t>()};
}

json SliceJson(const SliceMetrics& s) {
  return {{"counts", CountsJson(s.counts)},
          {"accuracy", OptionalNumber(s.accuracy)},
          {"precision", OptionalNumber(s.precision)},
          {"recall", OptionalNumber(s.recall)}};
}

SliceMetrics SliceFromJson(const json& j) {
  SliceMetrics s;
  s.counts = CountsFromJson(j.at("counts"));
  s.accuracy = NumberOrNull(j, "accuracy");
  s.precision = NumberOrNull(j, "precision");
  s.recall = NumberOrNull(j, "recall");
  return s;
}

json SliceListJson(const std::vector<SliceMetrics>& v) {
  json out = json::array();
  for (const auto& s : v) out.push_back(SliceJson(s));
  return out;
}

std::vector<SliceMetrics> SliceListFromJson(const json& j) {
  std::vector<SliceMetrics> out;
  for (const auto& s : j) out.push_back(SliceFromJson(s));
  return out;
}

json PassJson(const PassAtKSummary& p) {
  return {{"mean", OptionalNumber(p.mean)},
          {"std", OptionalNumber(p.std)},
          {"screenshots", p.screenshots}};
}

PassAtKSummary PassFromJson(const json& j) {
  return {NumberOrNull(j, "mean"), NumberOrNull(j, "std"),
          j.value("screenshots", 0)};
}

std::string FullPrecision(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string CsvNumber(const std::optional<double>& v) {
  return v ? FullPrecision(*v) : "n/a";
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void CsvRow(std::string& out, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += CsvField(fields[i]);
  }
  out += kCrlf;
}

std::vector<std::string> CountFields(const ConfusionCounts& c) {
  return {std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.tn),
          std::to_string(c.fn)};
}

void WriteText(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw DataError("write failure on " + path.string());
}

}  // namespace

SliceMetrics SliceMetrics::From(const ConfusionCounts& counts) {
  return {counts, Accuracy(counts), Precision(counts), Recall(counts)};
}

json ToJson(const MetricsReport& r) {
  json per_bug_type = json::object();
  for (const auto& [label, slices] : r.per_bug_type) {
    per_bug_type[std::string(LabelToken(label))] = SliceListJson(slices);
  }
  json per_app = json::object();
  for (const auto& [app, slices] : r.per_app) per_app[app] = SliceListJson(slices);
  json pass = json::object();
  for (const auto& [k, p] : r.pass_at_k) pass[std::to_string(k)] = PassJson(p);
  json per_shot = json::object();
  for (const auto& [sid, values] : r.per_screenshot_pass_at_k) {
    json v = json::object();
    for (const auto& [k, x] : values) v[std::to_string(k)] = x;
    per_shot[sid] = {{"correct", r.per_screenshot_correct.count(sid)
                                     ? r.per_screenshot_correct.at(sid)
                                     : 0},
                     {"pass_at_k", v}};
  }
  return {{"run_id", r.run_id},
          {"strategy", StrategyName(r.strategy)},
          {"repetitions", r.repetitions},
          {"k_values", r.k_values},
          {"per_bug_type", per_bug_type},
          {"bug_free", SliceListJson(r.bug_free)},
          {"per_app", per_app},
          {"overall", SliceJson(r.overall)},
          {"pass_at_k", pass},
          {"per_screenshot", per_shot},
          {"metadata", r.metadata}};
}

MetricsReport MetricsReportFromJson(const json& j) {
  MetricsReport r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    const std::string strategy = j.at("strategy").get<std::string>();
    auto parsed = ParseStrategy(strategy);
    if (!parsed) throw DataError("unknown strategy '" + strategy + "'");
    r.strategy = *parsed;
    r.repetitions = j.at("repetitions").get<int>();
    r.k_values = j.at("k_values").get<std::vector<int>>();
    for (const auto& [token, slices] : j.at("per_bug_type").items()) {
      auto label = ParseLabelToken(token);
      if (!label) throw DataError("unknown label '" + token + "'");
      r.per_bug_type[*label] = SliceListFromJson(slices);
    }
    r.bug_free = SliceListFromJson(j.at("bug_free"));
    for (const auto& [app, slices] : j.at("per_app").items()) {
      r.per_app[app] = SliceListFromJson(slices);
    }
    r.overall = SliceFromJson(j.at("overall"));
    for (const auto& [k, p] : j.at("pass_at_k").items()) {
      r.pass_at_k[std::stoi(k)] = PassFromJson(p);
    }
    const json per_shot = j.value("per_screenshot", json::object());
    for (const auto& [sid, v] : per_shot.items()) {
      r.per_screenshot_correct[sid] = v.value("correct", 0);
      for (const auto& [k, x] : v.at("pass_at_k").items()) {
        r.per_screenshot_pass_at_k[sid][std::stoi(k)] = x.get<double>();
      }
    }
    r.metadata = j.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

void WriteReport(const MetricsReport& report, const std::filesystem::path& path) {
  WriteText(ToJson(report).dump(2) + "\n", path);
}

MetricsReport ReadReport(const std::filesystem::path& path) {
  json j = json::parse(ReadFileBytes(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw DataError("malformed report " + path.string());
  return MetricsReportFromJson(j);
}

std::string EmitCsv(const MetricsReport& r, CsvKind kind) {
  const std::string strategy(StrategyName(r.strategy));
  std::string out;
  switch (kind) {
    case CsvKind::kPerBugType:
      CsvRow(out, {"strategy", "bug_type", "repetition", "tp", "fp", "tn", "fn",
                   "accuracy", "precision", "recall"});
      for (BugLabel label : kInjectedBugLabels) {
        auto it = r.per_bug_type.find(label);
        if (it == r.per_bug_type.end()) continue;
        for (size_t rep = 0; rep < it->second.size(); ++rep) {
          const SliceMetrics& s = it->second[rep];
          std::vector<std::string> row = {strategy, std::string(LabelToken(label)),
                                          std::to_string(rep)};
          for (auto& f : CountFields(s.counts)) row.push_back(std::move(f));
          row.push_back(CsvNumber(s.accuracy));
          row.push_back(CsvNumber(s.precision));
          row.push_back(CsvNumber(s.recall));
          CsvRow(out, row);
        }
      }
      break;
    case CsvKind::kPerApp:
      CsvRow(out, {"strategy", "app_id", "repetition", "tp", "fp", "tn", "fn",
                   "accuracy"});
      for (const auto& [app, slices] : r.per_app) {
        for (size_t rep = 0; rep < slices.size(); ++rep) {
          std::vector<std::string> row = {strategy, app, std::to_string(rep)};
          for (auto& f : CountFields(slices[rep].counts)) row.push_back(std::move(f));
          row.push_back(CsvNumber(slices[rep].accuracy));
          CsvRow(out, row);
        }
      }
      break;
    case CsvKind::kOverall: {
      std::vector<std::string> header = {"strategy", "repetitions", "tp", "fp",
                                         "tn", "fn", "accuracy"};
      for (int k : r.k_values) {
        header.push_back("pass@" + std::to_string(k) + "_mean");
        header.push_back("pass@" + std::to_string(k) + "_std");
      }
      CsvRow(out, header);
      std::vector<std::string> row = {strategy, std::to_string(r.repetitions)};
      for (auto& f : CountFields(r.overall.counts)) row.push_back(std::move(f));
      row.push_back(CsvNumber(r.overall.accuracy));
      for (int k : r.k_values) {
        auto it = r.pass_at_k.find(k);
        row.push_back(CsvNumber(it == r.pass_at_k.end() ? std::nullopt : it->second.mean));
        row.push_back(CsvNumber(it == r.pass_at_k.end() ? std::nullopt : it->second.std));
      }
      CsvRow(out, row);
      break;
    }
  }
  return out;
}

void WriteCsv(const MetricsReport& report, CsvKind kind,
              const std::filesystem::path& path) {
  WriteText(EmitCsv(report, kind), path);
}

std::string DisplayPercent(std::optional<double> fraction) {
  if (!fraction) return "n/a";
  return std::to_string(std::lround(*fraction * 100.0));
}

PassAtKTable EmitPassAtKTable(const std::vector<MetricsReport>& reports) {
  PassAtKTable table;
  for (size_t i = 0; i < reports.size(); ++i) {
    const MetricsReport& r = reports[i];
    if (i == 0) {
      table.k_values = r.k_values;
    } else if (r.k_values != table.k_values) {
      throw ConfigError("report '" + r.run_id +
                        "' uses different k values from '" +
                        reports.front().run_id + "'");
    }
    table.rows.push_back({r.strategy, r.run_id, r.pass_at_k});
  }
  return table;
}

std::string PassAtKTable::ToText() const {
  constexpr int kNameWidth = 26;
  constexpr int kCellWidth = 6;
  std::ostringstream out;
  out << std::left << std::setw(kNameWidth) << "";
  for (int k : k_values) {
    out << std::setw(2 * kCellWidth) << ("Pass@" + std::to_string(k));
  }
  out << '\n' << std::setw(kNameWidth) << "Prompting strategy";
  for (size_t i = 0; i < k_values.size(); ++i) {
    out << std::setw(kCellWidth) << "Avg." << std::setw(kCellWidth) << "Std.";
  }
  out << '\n';
  for (const auto& row : rows) {
    out << std::setw(kNameWidth) << StrategyDisplayName(row.strategy);
    for (int k : k_values) {
      auto it = row.values.find(k);
      const PassAtKSummary p = it == row.values.end() ? PassAtKSummary{} : it->second;
      out << std::setw(kCellWidth) << DisplayPercent(p.mean)
          << std::setw(kCellWidth) << DisplayPercent(p.std);
    }
    out << '\n';
  }
  std::string text = out.str();
  // Drop trailing padding on each line.
  std::string trimmed;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    line.erase(line.find_last_not_of(' ') + 1);
    trimmed += line + '\n';
  }
  return trimmed;
}

std::string PassAtKTable::ToCsv() const {
  std::string out;
  std::vector<std::string> header = {"strategy", "run_id"};
  for (int k : k_values) {
    header.push_back("pass@" + std::to_string(k) + "_mean");
    header.push_back("pass@" + std::to_string(k) + "_std");
  }
  CsvRow(out, header);
  for (const auto& row : rows) {
    std::vector<std::string> fields = {std::string(StrategyName(row.strategy)),
                                       row.run_id};
    for (int k : k_values) {
      auto it = row.values.find(k);
      const PassAtKSummary p = it == row.values.end() ? PassAtKSummary{} : it->second;
      fields.push_back(CsvNumber(p.mean));
      fields.push_back(CsvNumber(p.std));
    }
    CsvRow(out, fields);
  }
  return out;
}

json PassAtKTable::ToJson() const {
  json rows_json = json::array();
  for (const auto& row : rows) {
    json values = json::object();
    for (int k : k_values) {
      auto it = row.values.find(k);
      values[std::to_string(k)] =
          PassJson(it == row.values.end() ? PassAtKSummary{} : it->second);
    }
    rows_json.push_back({{"strategy", StrategyName(row.strategy)},
                         {"run_id", row.run_id},
                         {"pass_at_k", values}});
  }
  return {{"k_values", k_values}, {"rows", rows_json}};
}

}  // namespace canvasbug
