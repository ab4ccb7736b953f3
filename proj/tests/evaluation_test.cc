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

#include <gtest/gtest.h>

#include <fstream>

#include "archive_builder.h"
#include "canvasbug/errors.h"
#include "test_util.h"

namespace canvasbug {
namespace {

using ::canvasbug::testing::AppendAnswer;
using ::canvasbug::testing::AppendOutcome;
using ::canvasbug::testing::MakeRunInfo;
using ::canvasbug::testing::TempDir;

constexpr PromptStrategy kStrategy = PromptStrategy::kReadme;
const std::vector<std::string> kApps = {"alpha", "beta"};

Outcome CorrectOutcome(BugLabel label) {
  return label == BugLabel::kBugFree ? Outcome::kTrueNegative : Outcome::kTruePositive;
}
Outcome WrongOutcome(BugLabel label) {
  return label == BugLabel::kBugFree ? Outcome::kFalsePositive : Outcome::kFalseNegative;
}

class EvaluationTest : public ::testing::Test {
 protected:
  TempDir tmp_;
  RunArchive archive_{tmp_.path() / "run"};
  VerdictStore store_{tmp_.path() / "run" / "verdicts.jsonl"};
};

TEST_F(EvaluationTest, PerfectRun) {
  for (int rep = 0; rep < 4; ++rep)
    for (const auto& app : kApps)
      for (BugLabel label : kAllBugLabels)
        AppendOutcome(archive_, store_, "r", kStrategy, app, label, rep,
                      CorrectOutcome(label));
  const MetricsReport m =
      Aggregate(MakeRunInfo("r", kStrategy, 4, {1, 2, 4}), archive_, store_);
  EXPECT_EQ(m.overall.counts.total(), 40);
  EXPECT_EQ(m.overall.accuracy, 1.0);
  EXPECT_EQ(m.overall.precision, 1.0);
  EXPECT_EQ(m.overall.recall, 1.0);
  for (int k : {1, 2, 4}) {
    EXPECT_EQ(m.pass_at_k.at(k).mean, 1.0);
    EXPECT_EQ(m.pass_at_k.at(k).std, 0.0);
    EXPECT_EQ(m.pass_at_k.at(k).screenshots, 10);
  }
  for (const auto& [label, reps] : m.per_bug_type) {
    ASSERT_EQ(reps.size(), 4u);
    for (const auto& slice : reps) {
      EXPECT_EQ(slice.counts, (ConfusionCounts{2, 0, 0, 0}));
      EXPECT_EQ(slice.recall, 1.0);
    }
  }
  ASSERT_EQ(m.bug_free.size(), 4u);
  for (const auto& slice : m.bug_free) {
    EXPECT_EQ(slice.accuracy, 1.0);
    EXPECT_FALSE(slice.precision.has_value());
  }
  EXPECT_EQ(m.metadata["verdicts_used"], 32);
}

TEST_F(EvaluationTest, OneCorrectOfFourEverywhere) {
  for (int rep = 0; rep < 4; ++rep)
    for (const auto& app : kApps)
      for (BugLabel label : kAllBugLabels)
        AppendOutcome(archive_, store_, "r", kStrategy, app, label, rep,
                      rep == 0 ? CorrectOutcome(label) : WrongOutcome(label));
  const MetricsReport m =
      Aggregate(MakeRunInfo("r", kStrategy, 4, {1, 2, 4}), archive_, store_);
  EXPECT_DOUBLE_EQ(*m.pass_at_k.at(1).mean, 0.25);
  EXPECT_DOUBLE_EQ(*m.pass_at_k.at(2).mean, 0.5);
  EXPECT_DOUBLE_EQ(*m.pass_at_k.at(4).mean, 1.0);
  for (int k : {1, 2, 4}) EXPECT_NEAR(*m.pass_at_k.at(k).std, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(*m.overall.accuracy, 0.25);
  for (const auto& [sid, c] : m.per_screenshot_correct) EXPECT_EQ(c, 1) << sid;
}

TEST_F(EvaluationTest, PerAppAccuracyFromFiveOutcomes) {
  AppendOutcome(archive_, store_, "r", kStrategy, "alpha", BugLabel::kBugFree, 0,
                Outcome::kTrueNegative);
  AppendOutcome(archive_, store_, "r", kStrategy, "alpha", BugLabel::kState, 0,
                Outcome::kTruePositive);
  AppendOutcome(archive_, store_, "r", kStrategy, "alpha", BugLabel::kRendering, 0,
                Outcome::kFalsePositive);
  AppendOutcome(archive_, store_, "r", kStrategy, "alpha", BugLabel::kLayout, 0,
                Outcome::kFalseNegative);
  AppendOutcome(archive_, store_, "r", kStrategy, "alpha", BugLabel::kAppearance, 0,
                Outcome::kFalseNegative);
  const MetricsReport m = Aggregate(MakeRunInfo("r", kStrategy, 1, {1}), archive_, store_);
  ASSERT_EQ(m.per_app.at("alpha").size(), 1u);
  EXPECT_DOUBLE_EQ(*m.per_app.at("alpha")[0].accuracy, 0.4);
  EXPECT_EQ(m.per_app.at("alpha")[0].counts, (ConfusionCounts{1, 1, 1, 2}));
  EXPECT_EQ(m.per_bug_type.at(BugLabel::kRendering)[0].counts,
            (ConfusionCounts{0, 1, 0, 0}));
  EXPECT_DOUBLE_EQ(*m.pass_at_k.at(1).mean, 0.4);
  EXPECT_DOUBLE_EQ(*m.pass_at_k.at(1).std, std::sqrt(0.24));
}

TEST_F(EvaluationTest, PendingVerdictsBlockAggregation) {
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kState, 0, true, "a");
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kLayout, 0, true, "b");
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kBugFree, 0, true, "c");
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kRendering, 0, false);
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kAppearance, 0, false);
  try {
    Aggregate(MakeRunInfo("r", kStrategy, 1, {1}), archive_, store_);
    FAIL() << "expected PendingAdjudicationError";
  } catch (const PendingAdjudicationError& e) {
    EXPECT_EQ(e.items(), (std::vector<std::string>{"r/alpha__state#0", "r/alpha__layout#0"}));
    EXPECT_NE(std::string(e.what()).find("2 detection(s)"), std::string::npos);
  }
  RecordVerdict(store_, archive_, "r", "alpha__state", 0, Verdict::kCorrect, std::nullopt, "t");
  RecordVerdict(store_, archive_, "r", "alpha__layout", 0, Verdict::kIncorrect, std::nullopt, "t");
  const MetricsReport m = Aggregate(MakeRunInfo("r", kStrategy, 1, {1}), archive_, store_);
  EXPECT_EQ(m.overall.counts, (ConfusionCounts{1, 2, 0, 2}));
}

TEST_F(EvaluationTest, IncompleteOrDuplicateRepetitionsAreDataErrors) {
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kState, 0, false);
  EXPECT_THROW(Aggregate(MakeRunInfo("r", kStrategy, 2, {1}), archive_, store_), DataError);
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kState, 0, false);
  EXPECT_THROW(Aggregate(MakeRunInfo("r", kStrategy, 1, {1}), archive_, store_), DataError);
}

TEST_F(EvaluationTest, RepetitionOutsideRangeIsDataError) {
  AppendAnswer(archive_, kStrategy, "alpha", BugLabel::kState, 3, false);
  EXPECT_THROW(Aggregate(MakeRunInfo("r", kStrategy, 2, {1}), archive_, store_), DataError);
}

TEST_F(EvaluationTest, AggregationIsDeterministic) {
  for (int rep = 0; rep < 2; ++rep)
    for (const auto& app : kApps)
      for (BugLabel label : kAllBugLabels)
        AppendOutcome(archive_, store_, "r", kStrategy, app, label, rep,
                      (rep + static_cast<int>(label)) % 2 ? CorrectOutcome(label)
                                                          : WrongOutcome(label));
  const auto info = MakeRunInfo("r", kStrategy, 2, {1, 2});
  const auto a = ToJson(Aggregate(info, archive_, store_)).dump();
  RunArchive reopened(tmp_.path() / "run");
  VerdictStore store(tmp_.path() / "run" / "verdicts.jsonl");
  EXPECT_EQ(ToJson(Aggregate(info, reopened, store)).dump(), a);
}

// The scripted mini-corpus run: outcomes per (screenshot, repetition) are
// fixed by the mock fixture and the verdict file, and every expected value
// below was computed by hand from that grid.
class ScriptedRunTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const Dataset d = LoadManifest(testing::MiniManifest());
    auto mock = MockChatProvider::FromFile(testing::FixtureDir() / "mock_scripted.json");
    RunInfo info = MakeRunInfo("no-context", PromptStrategy::kNoContext, 4, {1, 2, 4});
    info.config.backoff_base = std::chrono::milliseconds(0);
    RunExperiment(d, info, *mock, tmp_.path());
    RunArchive archive(tmp_.path());
    VerdictStore store(tmp_.path() / "verdicts.jsonl");
    std::ifstream rows(testing::FixtureDir() / "verdicts_scripted.jsonl");
    std::string line;
    while (std::getline(rows, line)) {
      const auto j = nlohmann::json::parse(line);
      RecordVerdict(store, archive, "no-context", j["screenshot_id"], j["repetition"],
                    *ParseVerdict(j["verdict"].get<std::string>()),
                    j.contains("note") ? std::optional<std::string>(j["note"]) : std::nullopt,
                    "fixture");
    }
    report_ = Aggregate(info, archive, store);
  }
  TempDir tmp_;
  MetricsReport report_;
};

TEST_F(ScriptedRunTest, Overall) {
  EXPECT_EQ(report_.overall.counts, (ConfusionCounts{13, 5, 7, 15}));
  EXPECT_DOUBLE_EQ(*report_.overall.accuracy, 0.5);
  EXPECT_EQ(report_.metadata["normalized_answers"], 1);
}

TEST_F(ScriptedRunTest, PerApp) {
  const std::vector<double> paddle = {0.6, 0.4, 0.4, 0.6};
  const std::vector<double> plotter = {0.6, 0.6, 0.4, 0.4};
  for (int r = 0; r < 4; ++r) {
    EXPECT_DOUBLE_EQ(*report_.per_app.at("paddle")[r].accuracy, paddle[r]) << r;
    EXPECT_DOUBLE_EQ(*report_.per_app.at("plotter")[r].accuracy, plotter[r]) << r;
  }
}

TEST_F(ScriptedRunTest, PerBugType) {
  const std::map<BugLabel, std::vector<double>> accuracy = {
      {BugLabel::kState, {0.5, 1.0, 0.5, 0.5}},
      {BugLabel::kRendering, {0.5, 0.0, 0.5, 0.0}},
      {BugLabel::kLayout, {0.5, 0.0, 0.0, 0.5}},
      {BugLabel::kAppearance, {0.5, 0.5, 0.5, 0.5}}};
  for (const auto& [label, expected] : accuracy) {
    for (int r = 0; r < 4; ++r) {
      EXPECT_DOUBLE_EQ(*report_.per_bug_type.at(label)[r].accuracy, expected[r])
          << LabelToken(label) << " " << r;
    }
  }
  EXPECT_FALSE(report_.per_bug_type.at(BugLabel::kLayout)[2].precision.has_value());
  EXPECT_DOUBLE_EQ(*report_.per_bug_type.at(BugLabel::kAppearance)[0].precision, 0.5);
  EXPECT_DOUBLE_EQ(*report_.per_bug_type.at(BugLabel::kAppearance)[0].recall, 1.0);
  const std::vector<double> bug_free = {1.0, 1.0, 0.5, 1.0};
  for (int r = 0; r < 4; ++r) EXPECT_DOUBLE_EQ(*report_.bug_free[r].accuracy, bug_free[r]);
}

TEST_F(ScriptedRunTest, PassAtK) {
  EXPECT_NEAR(*report_.pass_at_k.at(1).mean, 0.5, 1e-12);
  EXPECT_NEAR(*report_.pass_at_k.at(1).std, 0.3535533905932738, 1e-12);
  EXPECT_NEAR(*report_.pass_at_k.at(2).mean, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*report_.pass_at_k.at(2).std, 0.38005847503304596, 1e-12);
  EXPECT_NEAR(*report_.pass_at_k.at(4).mean, 0.8, 1e-12);
  EXPECT_NEAR(*report_.pass_at_k.at(4).std, 0.4, 1e-12);
}

}  // namespace
}  // namespace canvasbug
