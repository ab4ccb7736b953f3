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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "canvasbug/adjudication.h"
#include "canvasbug/dataset.h"
#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"
#include "canvasbug/evaluation.h"
#include "canvasbug/experiment.h"
#include "canvasbug/metrics.h"
#include "canvasbug/prompting.h"
#include "canvasbug/report.h"
#include "canvasbug/vlm_client.h"
#include "cli.h"
#include "test_util.h"

namespace canvasbug {
namespace {

using nlohmann::json;
using ::canvasbug::testing::FixtureDir;
using ::canvasbug::testing::MiniManifest;
using ::canvasbug::testing::TempDir;

// Collects failures for one criterion.
class Check {
 public:
  void That(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void Near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      std::ostringstream s;
      s.precision(17);
      s << what << ": got " << got << ", want " << want;
      failures_.push_back(s.str());
    }
  }
  void Equal(const std::string& got, const std::string& want, const std::string& what) {
    if (got != want) failures_.push_back(what + ": got '" + got + "', want '" + want + "'");
  }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

std::vector<std::string> SplitCrlf(const std::string& text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find("\r\n", pos);
    if (end == std::string::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 2;
  }
  return lines;
}

double BruteForcePassAtK(int n, int c, int k) {
  long subsets = 0, hits = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    ++subsets;
    hits += (mask & ((1u << c) - 1)) != 0;
  }
  return static_cast<double>(hits) / static_cast<double>(subsets);
}

ExtractedAnswer Answer(bool detect) {
  ExtractedAnswer a;
  a.bool_did_detect_visual_bug = detect;
  a.string_description_of_visual_bug = detect ? "something" : "";
  return a;
}

// --- criteria ---------------------------------------------------------------

void PassAtKOracle(Check& check) {
  const auto start = std::chrono::steady_clock::now();
  int cases = 0;
  for (int n = 1; n <= 8; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k) {
        ++cases;
        const double got = PassAtK({n, c, k});
        const double want = BruteForcePassAtK(n, c, k);
        check.Near(got, want, 1e-9,
                   "pass@k(" + std::to_string(n) + "," + std::to_string(c) + "," +
                       std::to_string(k) + ")");
      }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.That(cases == 240, "expected 240 cases, got " + std::to_string(cases));
  check.That(secs < 1.0, "took " + std::to_string(secs) + " s");
}

void FormulaSpotValues(Check& check) {
  for (int k = 1; k <= 4; ++k) check.Near(PassAtK({4, 0, k}), 0.0, 0.0, "pass@k(4,0,k)");
  check.Near(PassAtK({4, 4, 1}), 1.0, 1e-15, "pass@k(4,4,1)");
  check.Near(PassAtK({4, 1, 1}), 0.25, 1e-15, "pass@k(4,1,1)");
  check.Near(PassAtK({4, 2, 2}), 5.0 / 6.0, 1e-12, "pass@k(4,2,2)");

  struct Row {
    ConfusionCounts c;
    double acc, prec, rec;  // NaN marks undefined
  };
  const double na = std::nan("");
  const std::vector<Row> rows = {
      {{1, 0, 1, 0}, 1.0, 1.0, 1.0},     {{0, 1, 0, 1}, 0.0, 0.0, 0.0},
      {{2, 1, 1, 1}, 0.6, 2.0 / 3, 2.0 / 3}, {{3, 1, 0, 0}, 0.75, 0.75, 1.0},
      {{0, 4, 0, 0}, 0.0, 0.0, na},      {{1, 0, 0, 3}, 0.25, 1.0, 0.25},
      {{4, 0, 0, 0}, 1.0, 1.0, 1.0},     {{0, 0, 5, 0}, 1.0, na, na},
      {{0, 0, 0, 7}, 0.0, na, 0.0},      {{13, 5, 7, 15}, 0.5, 13.0 / 18, 13.0 / 28},
  };
  auto compare = [&](std::optional<double> got, double want, const std::string& what) {
    if (std::isnan(want)) {
      check.That(!got.has_value(), what + " should be undefined");
    } else if (!got) {
      check.That(false, what + " unexpectedly undefined");
    } else {
      check.Near(*got, want, 1e-12, what);
    }
  };
  for (size_t i = 0; i < rows.size(); ++i) {
    const std::string tag = "matrix " + std::to_string(i);
    compare(Accuracy(rows[i].c), rows[i].acc, tag + " accuracy");
    compare(Precision(rows[i].c), rows[i].prec, tag + " precision");
    compare(Recall(rows[i].c), rows[i].rec, tag + " recall");
  }
  const ConfusionCounts empty;
  check.That(!Accuracy(empty) && !Precision(empty) && !Recall(empty),
             "empty slice sentinels");
}

void ClassificationTable(Check& check) {
  check.That(Classify(Answer(false), BugLabel::kBugFree, std::nullopt) ==
                 Outcome::kTrueNegative, "bug-free, no detection -> TN");
  check.That(Classify(Answer(false), BugLabel::kLayout, std::nullopt) ==
                 Outcome::kFalseNegative, "injected, no detection -> FN");
  check.That(Classify(Answer(true), BugLabel::kBugFree, std::nullopt) ==
                 Outcome::kFalsePositive, "bug-free, detection -> FP");
  check.That(Classify(Answer(true), BugLabel::kState, Verdict::kCorrect) ==
                 Outcome::kTruePositive, "injected, correct description -> TP");
  check.That(Classify(Answer(true), BugLabel::kState, Verdict::kIncorrect) ==
                 Outcome::kFalsePositive, "injected, wrong description -> FP");

  int total = 0, pending = 0;
  const std::vector<std::optional<Verdict>> verdicts = {std::nullopt, Verdict::kCorrect,
                                                        Verdict::kIncorrect};
  for (bool detect : {false, true})
    for (BugLabel label : kAllBugLabels)
      for (const auto& v : verdicts) {
        ++total;
        const bool injected = label != BugLabel::kBugFree;
        const bool needs = detect && injected;
        try {
          const Outcome o = Classify(Answer(detect), label, v);
          Outcome want;
          if (!detect) {
            want = injected ? Outcome::kFalseNegative : Outcome::kTrueNegative;
          } else if (!injected) {
            want = Outcome::kFalsePositive;
          } else {
            want = *v == Verdict::kCorrect ? Outcome::kTruePositive : Outcome::kFalsePositive;
          }
          check.That(!needs || v.has_value(), "classified without a required verdict");
          check.That(o == want, "unexpected outcome " + std::string(OutcomeName(o)));
        } catch (const PendingAdjudicationError&) {
          ++pending;
          check.That(needs && !v.has_value(), "spurious pending adjudication");
        }
      }
  check.That(total == 30, "enumerated " + std::to_string(total) + " combinations");
  check.That(pending == 4, "expected 4 pending combinations, got " + std::to_string(pending));
}

void PromptByteExactness(Check& check) {
  const std::map<PromptStrategy, std::string> digests = {
      {PromptStrategy::kNoContext,
       "ece0871e5a496d8fb1a1ffb5270b9c6553a925c48d02d7bf754a9c0a26cb416d"},
      {PromptStrategy::kReadme,
       "a16d26742343a30a98168c928c3a4d725ad8d78f3db08fb48fa5e1d394911a82"},
      {PromptStrategy::kReadmeGood,
       "a16d26742343a30a98168c928c3a4d725ad8d78f3db08fb48fa5e1d394911a82"},
      {PromptStrategy::kReadmeBad,
       "a16d26742343a30a98168c928c3a4d725ad8d78f3db08fb48fa5e1d394911a82"},
      {PromptStrategy::kReadmePlusBugDescriptions,
       "fd5525bc141314b30834444337d5481fbcfff15ff6d3017579f02c810fd89aaf"},
      {PromptStrategy::kAllContextExceptAssets,
       "fd5525bc141314b30834444337d5481fbcfff15ff6d3017579f02c810fd89aaf"},
      {PromptStrategy::kAllContext,
       "0d3700d825abf1587dd27481fb50ea85fd5c117cb9bf82fa6bf47cbd5bcd3cbd"},
  };
  const std::string kBugLines =
      "Rendering - Objects appear blurry, distorted, or contain artifacts.\n"
      "Layout - Objects have incorrect positioning, layering, or size.\n"
      "State - Objects displayed in the wrong state, e.g. visible vs. invisible.\n"
      "Appearance - Objects have incorrect aesthetics, e.g. wrong colour.\n";
  const std::string kMocked =
      "This screenshot is free of any visual bugs as defined in the provided set of "
      "categories.";
  const std::string kFollowUp =
      "Here is another screenshot from the same application. Is there is a visual bug "
      "in this screenshot?";
  check.Equal(std::string(MockedAssistantResponse()), kMocked, "mocked assistant text");
  check.Equal(std::string(FollowUpQuestion()), kFollowUp, "follow-up text");

  const Dataset d = LoadManifest(MiniManifest());
  const AppRecord& paddle = *d.FindApp("paddle");
  const ScreenshotRecord& test = *d.FindScreenshot("paddle", BugLabel::kRendering);
  const ScreenshotRecord& ref = *d.FindScreenshot("paddle", BugLabel::kBugFree);
  for (PromptStrategy s : kAllStrategies) {
    const std::string name(StrategyName(s));
    const std::string tmpl(TemplateFor(s));
    check.Equal(Sha256Hex(tmpl), digests.at(s), name + " template digest");
    const std::string readme = ReadmeFor(s, paddle);
    std::string expected = tmpl;
    if (const auto pos = expected.find("{README}"); pos != std::string::npos) {
      expected.replace(pos, 8, readme);
    }
    const PromptBundle b = BuildMessages(s, paddle, test, &ref);
    const std::string& first = std::get<TextPart>(b.messages[0].parts[0]).text;
    check.Equal(Sha256Hex(first), Sha256Hex(expected), name + " rendered text");
    check.That(first.find("{README}") == std::string::npos, name + " placeholder left");
    check.That((first.find(kBugLines) != std::string::npos) ==
                   ContextFor(s).bug_descriptions,
               name + " bug-description lines");
    const bool three = s == PromptStrategy::kAllContext ||
                       s == PromptStrategy::kAllContextExceptAssets;
    check.That(b.messages.size() == (three ? 3u : 1u), name + " message count");
    if (three && b.messages.size() == 3) {
      check.That(b.messages[0].role == Role::kUser && b.messages[1].role == Role::kAssistant &&
                     b.messages[2].role == Role::kUser,
                 name + " roles");
      check.Equal(std::get<TextPart>(b.messages[1].parts[0]).text, kMocked, name + " turn 2");
      check.Equal(std::get<TextPart>(b.messages[2].parts[0]).text, kFollowUp, name + " turn 3");
      check.That(b.messages[0].ImageCount() ==
                     (s == PromptStrategy::kAllContext ? 1 + paddle.asset_image_paths.size() : 1u),
                 name + " context images");
      check.That(b.messages[2].ImageCount() == 1, name + " test image");
    } else if (!three) {
      check.That(b.messages[0].ImageCount() == 1, name + " test image");
    }
  }
}

void ExtractionSchema(Check& check) {
  const json expected = json::parse(R"({
    "type": "json_schema",
    "json_schema": {
      "name": "answer_extraction_response",
      "strict": true,
      "schema": {
        "type": "object",
        "properties": {
          "bool_did_detect_visual_bug": {"type": "boolean"},
          "string_description_of_visual_bug": {"type": "string"}
        },
        "required": ["bool_did_detect_visual_bug", "string_description_of_visual_bug"],
        "additionalProperties": false
      }
    }
  })");
  check.That(AnswerExtractionResponseFormat() == expected, "response_format object");
  const ChatRequest req = BuildExtractionRequest("analysis", RunConfig{});
  check.That(req.messages.size() == 1 && req.response_format == expected,
             "extraction request shape");

  // The scripted fixture answers plotter__bugfree repetition 2 with
  // detect=false and a nonempty description.
  TempDir tmp;
  const Dataset d = LoadManifest(MiniManifest());
  auto mock = MockChatProvider::FromFile(FixtureDir() / "mock_scripted.json");
  RunInfo info;
  info.run_id = "x";
  info.strategy = PromptStrategy::kNoContext;
  info.config.backoff_base = std::chrono::milliseconds(0);
  RunExperiment(d, info, *mock, tmp.path());
  RunArchive archive(tmp.path());
  int normalized = 0;
  for (const auto& e : archive.extractions()) {
    if (!e.answer.bool_did_detect_visual_bug) {
      check.That(e.answer.string_description_of_visual_bug.empty(),
                 e.screenshot_id + " kept a description with detect=false");
    }
    if (e.answer.normalized) {
      ++normalized;
      check.That(e.screenshot_id == "plotter__bugfree" && e.repetition == 2,
                 "unexpected normalization on " + e.screenshot_id);
    }
  }
  check.That(normalized == 1, "expected 1 normalized answer, got " + std::to_string(normalized));
  bool rejected = false;
  try {
    ParseExtractedAnswer(R"({"bool_did_detect_visual_bug": true, "extra": 1})");
  } catch (const ProviderError&) {
    rejected = true;
  }
  check.That(rejected, "schema-invalid payload accepted");
}

int Cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::istringstream in;
  std::ostringstream out, err;
  const int code = cli::RunCli(args, in, out, err);
  if (out_text) *out_text = out.str();
  if (code != 0 && code != cli::kPendingAdjudication) std::cerr << err.str();
  return code;
}

void EndToEnd(Check& check) {
  const auto start = std::chrono::steady_clock::now();
  TempDir tmp;
  const std::string run = (tmp / "run").string();
  const std::string report = (tmp / "report.json").string();
  check.That(Cli({"run", "--manifest", MiniManifest().string(), "--strategy", "no-context",
                  "--out", run, "--provider", "mock", "--mock-fixture",
                  (FixtureDir() / "mock_scripted.json").string(), "--repetitions", "4"}) == 0,
             "run");
  check.That(Cli({"evaluate", "--run", run, "--out", report}) == cli::kPendingAdjudication,
             "evaluate before adjudication must report pending");
  check.That(Cli({"adjudicate", "--run", run, "--import",
                  (FixtureDir() / "verdicts_scripted.jsonl").string()}) == 0,
             "adjudicate");
  check.That(Cli({"evaluate", "--run", run, "--out", report}) == 0, "evaluate");
  check.That(Cli({"report", "--reports", report, "--out", (tmp / "tables").string()}) == 0,
             "report");
  if (!check.failures().empty()) return;

  const std::vector<std::string> per_bug_type = {
      "strategy,bug_type,repetition,tp,fp,tn,fn,accuracy,precision,recall",
      "no-context,state,0,1,0,0,1,0.5,1,0.5",
      "no-context,state,1,2,0,0,0,1,1,1",
      "no-context,state,2,1,0,0,1,0.5,1,0.5",
      "no-context,state,3,1,0,0,1,0.5,1,0.5",
      "no-context,rendering,0,1,0,0,1,0.5,1,0.5",
      "no-context,rendering,1,0,1,0,1,0,0,0",
      "no-context,rendering,2,1,0,0,1,0.5,1,0.5",
      "no-context,rendering,3,0,1,0,1,0,0,0",
      "no-context,layout,0,1,0,0,1,0.5,1,0.5",
      "no-context,layout,1,0,1,0,1,0,0,0",
      "no-context,layout,2,0,0,0,2,0,n/a,0",
      "no-context,layout,3,1,0,0,1,0.5,1,0.5",
      "no-context,appearance,0,1,1,0,0,0.5,0.5,1",
      "no-context,appearance,1,1,0,0,1,0.5,1,0.5",
      "no-context,appearance,2,1,0,0,1,0.5,1,0.5",
      "no-context,appearance,3,1,0,0,1,0.5,1,0.5",
  };
  const std::vector<std::string> per_app = {
      "strategy,app_id,repetition,tp,fp,tn,fn,accuracy",
      "no-context,paddle,0,2,1,1,1,0.6",
      "no-context,paddle,1,1,1,1,2,0.4",
      "no-context,paddle,2,2,1,0,2,0.4",
      "no-context,paddle,3,2,0,1,2,0.6",
      "no-context,plotter,0,2,0,1,2,0.6",
      "no-context,plotter,1,2,1,1,1,0.6",
      "no-context,plotter,2,1,0,1,3,0.4",
      "no-context,plotter,3,1,1,1,2,0.4",
  };
  const auto got_bug_type =
      SplitCrlf(ReadFileBytes(tmp / "tables/no-context.per_bug_type.csv"));
  const auto got_app = SplitCrlf(ReadFileBytes(tmp / "tables/no-context.per_app.csv"));
  check.That(got_bug_type.size() == 17, "per-bug-type rows: " + std::to_string(got_bug_type.size()));
  check.That(got_app.size() == 9, "per-app rows: " + std::to_string(got_app.size()));
  for (size_t i = 0; i < per_bug_type.size() && i < got_bug_type.size(); ++i) {
    check.Equal(got_bug_type[i], per_bug_type[i], "per-bug-type row " + std::to_string(i));
  }
  for (size_t i = 0; i < per_app.size() && i < got_app.size(); ++i) {
    check.Equal(got_app[i], per_app[i], "per-app row " + std::to_string(i));
  }

  const MetricsReport m = ReadReport(report);
  check.That(m.overall.counts == ConfusionCounts{13, 5, 7, 15}, "overall counts");
  check.Near(m.overall.accuracy.value_or(-1), 0.5, 0.0, "overall accuracy");
  check.Near(m.pass_at_k.at(1).mean.value_or(-1), 0.5, 1e-12, "pass@1 mean");
  check.Near(m.pass_at_k.at(2).mean.value_or(-1), 2.0 / 3.0, 1e-12, "pass@2 mean");
  check.Near(m.pass_at_k.at(4).mean.value_or(-1), 0.8, 1e-12, "pass@4 mean");
  check.Near(m.pass_at_k.at(1).std.value_or(-1), 0.3535533905932738, 1e-12, "pass@1 std");
  check.Near(m.pass_at_k.at(2).std.value_or(-1), 0.38005847503304596, 1e-12, "pass@2 std");
  check.Near(m.pass_at_k.at(4).std.value_or(-1), 0.4, 1e-12, "pass@4 std");
  const std::vector<double> bug_free = {1.0, 1.0, 0.5, 1.0};
  for (int r = 0; r < 4; ++r) {
    check.Near(m.bug_free.at(r).accuracy.value_or(-1), bug_free[r], 0.0,
               "bug-free accuracy rep " + std::to_string(r));
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.That(secs < 10.0, "took " + std::to_string(secs) + " s");
}

void TableShape(Check& check) {
  TempDir tmp;
  const Dataset d = LoadManifest(MiniManifest());
  std::vector<json> verdict_rows;
  {
    std::ifstream in(FixtureDir() / "verdicts_scripted.jsonl");
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) verdict_rows.push_back(json::parse(line));
    }
  }
  std::vector<MetricsReport> reports;
  for (PromptStrategy s : kMainStrategies) {
    const std::string id(StrategyName(s));
    const auto dir = tmp / id;
    auto mock = MockChatProvider::FromFile(FixtureDir() / "mock_scripted.json");
    RunInfo info;
    info.run_id = id;
    info.strategy = s;
    info.config.backoff_base = std::chrono::milliseconds(0);
    RunExperiment(d, info, *mock, dir);
    RunArchive archive(dir);
    VerdictStore store(dir / "verdicts.jsonl");
    for (const auto& row : verdict_rows) {
      const std::string sid = row["screenshot_id"];
      if (!archive.FindAnalysis(s, sid, row["repetition"])) continue;
      RecordVerdict(store, archive, id, sid, row["repetition"],
                    *ParseVerdict(row["verdict"].get<std::string>()), std::nullopt,
                    "acceptance");
    }
    if (s == PromptStrategy::kAllContext) {
      check.That(archive.skips().size() == 5, "all-context skip notices");
      bool only_plotter = true;
      for (const auto& skip : archive.skips()) only_plotter &= skip.app_id == "plotter";
      for (const auto& e : archive.extractions()) only_plotter &= e.app_id == "paddle";
      check.That(only_plotter, "all-context must skip the procedural app only");
      check.That(archive.extractions().size() == 20, "all-context answers");
    } else {
      check.That(archive.skips().empty(), id + " should not skip");
      check.That(archive.extractions().size() == 40, id + " answers");
    }
    reports.push_back(Aggregate(info, archive, store));
  }
  const PassAtKTable table = EmitPassAtKTable(reports);
  check.That(table.rows.size() == 5, "pass@k rows");
  check.That(table.k_values == std::vector<int>{1, 2, 4}, "pass@k columns");
  const auto csv = SplitCrlf(table.ToCsv());
  check.That(csv.size() == 6, "pass@k CSV lines");
  for (const auto& line : csv) {
    check.That(std::count(line.begin(), line.end(), ',') == 7, "pass@k CSV width: " + line);
  }
  std::istringstream text(table.ToText());
  int lines = 0;
  for (std::string line; std::getline(text, line);) ++lines;
  check.That(lines == 7, "pass@k text lines");
  for (const auto& r : reports) {
    const auto rows = SplitCrlf(EmitCsv(r, CsvKind::kPerBugType));
    check.That(rows.size() == 17,
               r.run_id + " per-bug-type rows: " + std::to_string(rows.size() - 1));
  }
}

}  // namespace
}  // namespace canvasbug

int main() {
  using canvasbug::Check;
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"pass@k oracle equivalence (n<=8, tol 1e-9, <1 s)", canvasbug::PassAtKOracle},
      {"formula spot values and metric sentinels", canvasbug::FormulaSpotValues},
      {"classification table, total and exclusive", canvasbug::ClassificationTable},
      {"prompt byte-exactness for all 7 strategies", canvasbug::PromptByteExactness},
      {"extraction schema and detect=false normalization", canvasbug::ExtractionSchema},
      {"end-to-end mock run reproduces hand-computed metrics (<10 s)", canvasbug::EndToEnd},
      {"table shapes: 5x{1,2,4} pass@k, 16 per-bug-type rows, AllContext skips",
       canvasbug::TableShape},
  };
  spdlog::set_level(spdlog::level::warn);
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check check;
    try {
      fn(check);
    } catch (const std::exception& e) {
      check.That(false, std::string("exception: ") + e.what());
    }
    const bool ok = check.failures().empty();
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << '\n';
    for (const auto& f : check.failures()) std::cout << "      " << f << '\n';
    failed += !ok;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
