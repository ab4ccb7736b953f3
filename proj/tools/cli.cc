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

#include "cli.h"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "canvasbug/adjudication.h"
#include "canvasbug/dataset.h"
#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"
#include "canvasbug/evaluation.h"
#include "canvasbug/experiment.h"
#include "canvasbug/report.h"

namespace canvasbug::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string StrategyList() {
  std::string out;
  for (PromptStrategy s : kAllStrategies) {
    if (!out.empty()) out += ", ";
    out += StrategyName(s);
  }
  return out;
}

json ReadJsonFile(const fs::path& path) {
  json j = json::parse(ReadFileBytes(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("malformed JSON in " + path.string());
  return j;
}

std::optional<std::string> RealEnv(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') {
    return std::string(v);
  }
  return std::nullopt;
}

template <typename T>
std::optional<T> ParseNumber(const std::optional<std::string>& s,
                             const std::string& name) {
  if (!s) return std::nullopt;
  try {
    if constexpr (std::is_same_v<T, int>) return std::stoi(*s);
    else return std::stod(*s);
  } catch (const std::exception&) {
    throw ConfigError("environment variable " + name + " is not a number");
  }
}

// --- validate --------------------------------------------------------------

int Validate(const std::string& manifest, std::ostream& out) {
  const Dataset dataset = LoadManifest(manifest);
  const auto violations = ValidateDataset(dataset);
  for (const auto& v : violations) {
    out << v.record << ": " << v.rule << ": " << v.detail << '\n';
  }
  out << dataset.apps.size() << " apps, " << dataset.screenshots.size()
      << " screenshots, " << violations.size() << " violations\n";
  return violations.empty() ? kOk : kDataError;
}

// --- run -------------------------------------------------------------------

struct RunArgs {
  std::string manifest;
  std::string strategy;
  std::string config;
  std::string out_dir;
  std::string run_id;
  bool resume = false;
  RunFlags flags;
};

int Run(const RunArgs& args, std::ostream& out) {
  const auto strategy = ParseStrategy(args.strategy);
  if (!strategy) {
    throw ConfigError("unknown strategy '" + args.strategy + "' (expected one of " +
                      StrategyList() + ")");
  }
  std::optional<json> config_file;
  std::string config_dir = ".";
  if (!args.config.empty()) {
    config_file = ReadJsonFile(args.config);
    config_dir = fs::path(args.config).parent_path().string();
    if (config_dir.empty()) config_dir = ".";
  }
  const ResolvedRun resolved =
      ResolveRunConfig(args.flags, config_file, config_dir, RealEnv);
  resolved.config.Validate();

  const fs::path out_dir(args.out_dir);
  if (!args.resume && fs::exists(RunArchive::ArchivePath(out_dir)) &&
      fs::file_size(RunArchive::ArchivePath(out_dir)) > 0) {
    throw DataError("run directory " + out_dir.string() +
                    " already holds an archive; pass --resume to continue it");
  }

  const Dataset dataset = LoadManifest(args.manifest);
  std::unique_ptr<ChatProvider> provider;
  if (resolved.provider == "mock") {
    if (resolved.mock_fixture.empty()) {
      throw ConfigError("the mock provider needs --mock-fixture");
    }
    provider = MockChatProvider::FromFile(resolved.mock_fixture);
  } else if (resolved.provider == "http") {
    provider = std::make_unique<HttpChatProvider>(
        resolved.config.endpoint, resolved.config.api_key,
        resolved.config.timeout_seconds);
  } else {
    throw ConfigError("unknown provider '" + resolved.provider + "'");
  }

  RunInfo info;
  info.run_id = args.run_id.empty() ? std::string(StrategyName(*strategy))
                                    : args.run_id;
  info.strategy = *strategy;
  info.config = resolved.config;
  info.manifest = fs::absolute(args.manifest).lexically_normal().string();
  info.provider = resolved.provider;
  const RunSummary summary = RunExperiment(dataset, info, *provider, out_dir);
  out << info.run_id << ": " << summary.units_total << " units, "
      << summary.extractions_written << " answers written, "
      << summary.units_already_done << " already archived, "
      << summary.skip_notices_written << " skip notices\n";
  return kOk;
}

// --- adjudicate ------------------------------------------------------------

struct AdjudicateArgs {
  std::string run_dir;
  std::string verdicts;
  std::string import_file;
  std::string reviewer;
  bool list_only = false;
};

fs::path VerdictPath(const std::string& run_dir, const std::string& explicit_path) {
  return explicit_path.empty() ? fs::path(run_dir) / "verdicts.jsonl"
                               : fs::path(explicit_path);
}

int ImportVerdicts(const RunArchive& archive, const RunInfo& info,
                   VerdictStore& store, const std::string& file,
                   const std::string& reviewer, std::ostream& out) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open verdict import " + file);
  struct Row {
    std::string screenshot_id;
    int repetition;
    Verdict verdict;
    std::optional<std::string> note;
    std::string reviewer;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = file + ":" + std::to_string(line_no);
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) throw DataError(where + ": not JSON");
    try {
      auto verdict = ParseVerdict(j.at("verdict").get<std::string>());
      if (!verdict) throw DataError(where + ": verdict must be correct or incorrect");
      Row row{j.at("screenshot_id").get<std::string>(),
              j.at("repetition").get<int>(), *verdict, std::nullopt,
              j.value("reviewer", reviewer)};
      if (j.contains("note") && j["note"].is_string()) {
        row.note = j["note"].get<std::string>();
      }
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  // Check every row against the pending queue before writing any.
  const auto pending = PendingQueue(archive, info.run_id, store);
  for (const auto& row : rows) {
    bool found = false;
    for (const auto& item : pending) {
      found |= item.screenshot_id == row.screenshot_id &&
               item.repetition == row.repetition;
    }
    if (!found) {
      throw DataError("import row " + row.screenshot_id + "#" +
                      std::to_string(row.repetition) +
                      " is not pending (unknown item or already adjudicated)");
    }
  }
  for (const auto& row : rows) {
    RecordVerdict(store, archive, info.run_id, row.screenshot_id,
                  row.repetition, row.verdict, row.note, row.reviewer);
  }
  out << rows.size() << " verdicts imported, "
      << PendingQueue(archive, info.run_id, store).size() << " pending\n";
  return kOk;
}

int Adjudicate(const AdjudicateArgs& args, std::istream& in, std::ostream& out) {
  const RunInfo info = RunInfo::Read(args.run_dir);
  const RunArchive archive(args.run_dir);
  VerdictStore store(VerdictPath(args.run_dir, args.verdicts));
  const std::string reviewer = args.reviewer.empty() ? "reviewer" : args.reviewer;

  if (!args.import_file.empty()) {
    return ImportVerdicts(archive, info, store, args.import_file, reviewer, out);
  }

  const auto pending = PendingQueue(archive, info.run_id, store);
  if (args.list_only) {
    for (const auto& item : pending) {
      out << item.key() << '\t' << LabelToken(item.label) << '\t'
          << item.description << '\n';
    }
    out << pending.size() << " pending\n";
    return kOk;
  }

  int decided = 0;
  for (size_t i = 0; i < pending.size(); ++i) {
    const ReviewItem& item = pending[i];
    out << "[" << (i + 1) << "/" << pending.size() << "] " << item.key() << '\n'
        << "  image:       " << item.image_path << '\n'
        << "  label:       " << LabelDisplayName(item.label) << '\n'
        << "  description: " << item.description << '\n'
        << "  verdict? [c]orrect / [i]ncorrect / [s]kip, then an optional note: "
        << std::flush;
    std::string answer;
    if (!std::getline(in, answer)) {
      out << '\n';
      break;
    }
    const auto first = answer.find_first_not_of(' ');
    if (first == std::string::npos) {
      out << "  skipped\n";
      continue;
    }
    const auto word_end = answer.find(' ', first);
    const std::string choice = answer.substr(first, word_end == std::string::npos
                                                        ? std::string::npos
                                                        : word_end - first);
    std::optional<std::string> note;
    if (word_end != std::string::npos) {
      if (const auto rest = answer.find_first_not_of(' ', word_end);
          rest != std::string::npos) {
        note = answer.substr(rest);
      }
    }
    const bool correct = choice == "c" || choice == "correct";
    const bool incorrect = choice == "i" || choice == "incorrect";
    if (correct || incorrect) {
      RecordVerdict(store, archive, info.run_id, item.screenshot_id,
                    item.repetition,
                    correct ? Verdict::kCorrect : Verdict::kIncorrect, note,
                    reviewer);
      ++decided;
    } else {
      out << "  skipped\n";
    }
  }
  out << decided << " verdicts recorded, "
      << PendingQueue(archive, info.run_id, store).size() << " pending\n";
  return kOk;
}

// --- evaluate / report -----------------------------------------------------

int Evaluate(const std::string& run_dir, const std::string& verdicts,
             const std::string& out_path, std::ostream& out) {
  const RunInfo info = RunInfo::Read(run_dir);
  const RunArchive archive(run_dir);
  const VerdictStore store(VerdictPath(run_dir, verdicts));
  const MetricsReport report = Aggregate(info, archive, store);
  WriteReport(report, out_path);
  out << info.run_id << ": overall accuracy "
      << DisplayPercent(report.overall.accuracy) << "%";
  for (const auto& [k, p] : report.pass_at_k) {
    out << ", pass@" << k << " " << DisplayPercent(p.mean) << "%";
  }
  out << " -> " << out_path << '\n';
  return kOk;
}

int Report(const std::vector<std::string>& paths, const std::string& out_dir,
           std::ostream& out) {
  std::vector<MetricsReport> reports;
  for (const auto& p : paths) reports.push_back(ReadReport(p));
  const PassAtKTable table = EmitPassAtKTable(reports);
  out << table.ToText();
  if (out_dir.empty()) return kOk;

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "pass_at_k.csv", std::ios::binary);
    f << table.ToCsv();
    std::ofstream g(dir / "pass_at_k.json", std::ios::binary);
    g << table.ToJson().dump(2) << '\n';
    std::ofstream t(dir / "pass_at_k.txt", std::ios::binary);
    t << table.ToText();
    if (!f || !g || !t) throw DataError("write failure in " + dir.string());
  }
  for (const auto& r : reports) {
    WriteCsv(r, CsvKind::kPerBugType, dir / (r.run_id + ".per_bug_type.csv"));
    WriteCsv(r, CsvKind::kPerApp, dir / (r.run_id + ".per_app.csv"));
    WriteCsv(r, CsvKind::kOverall, dir / (r.run_id + ".overall.csv"));
  }
  out << "wrote tables for " << reports.size() << " reports to " << dir.string()
      << '\n';
  return kOk;
}

}  // namespace

ResolvedRun ResolveRunConfig(const RunFlags& flags,
                             const std::optional<json>& config_file,
                             const std::string& config_dir,
                             const EnvLookup& env) {
  ResolvedRun resolved;
  RunConfig& c = resolved.config;

  // Environment.
  if (auto v = env("CANVASBUG_PROVIDER")) resolved.provider = *v;
  if (auto v = env("CANVASBUG_MODEL")) c.model_id = *v;
  if (auto v = env("CANVASBUG_ENDPOINT")) c.endpoint = *v;
  if (auto v = ParseNumber<double>(env("CANVASBUG_TEMPERATURE"), "CANVASBUG_TEMPERATURE")) {
    c.temperature = *v;
  }
  if (auto v = ParseNumber<int>(env("CANVASBUG_PARALLELISM"), "CANVASBUG_PARALLELISM")) {
    c.parallelism = *v;
  }
  std::string key_var = "CANVASBUG_API_KEY";

  // Config file.
  if (config_file) {
    if (!config_file->is_object()) throw ConfigError("config file must be a JSON object");
    c = RunConfig::FromJson(*config_file, c);
    if (config_file->contains("provider")) {
      resolved.provider = (*config_file)["provider"].get<std::string>();
    }
    if (config_file->contains("mock_fixture")) {
      fs::path p((*config_file)["mock_fixture"].get<std::string>());
      resolved.mock_fixture = p.is_absolute() ? p.string() : (fs::path(config_dir) / p).string();
    }
    if (config_file->contains("api_key_env")) {
      key_var = (*config_file)["api_key_env"].get<std::string>();
    }
  }
  if (auto v = env(key_var)) {
    c.api_key = *v;
  } else if (auto fallback = env("OPENAI_API_KEY")) {
    c.api_key = *fallback;
  }

  // Flags.
  if (flags.provider) resolved.provider = *flags.provider;
  if (flags.mock_fixture) resolved.mock_fixture = *flags.mock_fixture;
  if (flags.model) c.model_id = *flags.model;
  if (flags.temperature) c.temperature = *flags.temperature;
  if (flags.repetitions) c.repetitions = *flags.repetitions;
  if (flags.k_values) c.k_values = *flags.k_values;
  if (flags.endpoint) c.endpoint = *flags.endpoint;
  if (flags.max_retries) c.max_retries = *flags.max_retries;
  if (flags.timeout) c.timeout_seconds = *flags.timeout;
  if (flags.parallelism) c.parallelism = *flags.parallelism;
  if (flags.backoff_ms) c.backoff_base = std::chrono::milliseconds(*flags.backoff_ms);

  // Default k values follow a shrunken repetition count.
  if (!flags.k_values && !(config_file && config_file->contains("k_values"))) {
    std::vector<int> ks;
    for (int k : c.k_values) {
      if (k <= c.repetitions) ks.push_back(k);
    }
    c.k_values = ks;
  }
  return resolved;
}

int RunCli(const std::vector<std::string>& args, std::istream& in,
           std::ostream& out, std::ostream& err) {
  CLI::App app{"Visual bug detection harness for HTML5 canvas screenshots"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string manifest;
  auto* validate = app.add_subcommand("validate", "Check a dataset manifest");
  validate->add_option("--manifest", manifest, "manifest.json")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one prompting strategy over a dataset");
  run->add_option("--manifest", run_args.manifest)->required();
  run->add_option("--strategy", run_args.strategy, StrategyList())->required();
  run->add_option("--config", run_args.config, "Run configuration JSON");
  run->add_option("--out", run_args.out_dir, "Run directory")->required();
  run->add_option("--run-id", run_args.run_id, "Defaults to the strategy name");
  run->add_flag("--resume", run_args.resume, "Continue an existing run directory");
  run->add_option("--provider", run_args.flags.provider, "http or mock");
  run->add_option("--mock-fixture", run_args.flags.mock_fixture);
  run->add_option("--model", run_args.flags.model);
  run->add_option("--temperature", run_args.flags.temperature);
  run->add_option("--repetitions", run_args.flags.repetitions);
  run->add_option("--k", run_args.flags.k_values, "pass@k sizes")->delimiter(',');
  run->add_option("--endpoint", run_args.flags.endpoint);
  run->add_option("--max-retries", run_args.flags.max_retries);
  run->add_option("--timeout", run_args.flags.timeout, "Seconds per request");
  run->add_option("--parallelism", run_args.flags.parallelism);
  run->add_option("--backoff-ms", run_args.flags.backoff_ms);

  AdjudicateArgs adj_args;
  auto* adjudicate = app.add_subcommand("adjudicate", "Review detections on bug-injected screenshots");
  adjudicate->add_option("--run", adj_args.run_dir)->required();
  adjudicate->add_option("--verdicts", adj_args.verdicts, "Defaults to <run>/verdicts.jsonl");
  adjudicate->add_option("--import", adj_args.import_file, "Pre-filled verdict JSONL");
  adjudicate->add_option("--reviewer", adj_args.reviewer);
  adjudicate->add_flag("--list", adj_args.list_only, "Print the pending queue and exit");

  std::string eval_run, eval_verdicts, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Classify answers and compute metrics");
  evaluate->add_option("--run", eval_run)->required();
  evaluate->add_option("--verdicts", eval_verdicts, "Defaults to <run>/verdicts.jsonl");
  evaluate->add_option("--out", eval_out, "Report JSON path")->required();

  std::vector<std::string> report_paths;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Render result tables from reports");
  report->add_option("--reports", report_paths, "Report JSON files")->required();
  report->add_option("--out", report_out, "Directory for CSV/JSON tables");

  std::vector<const char*> argv;
  argv.push_back("canvasbug");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*validate) return Validate(manifest, out);
    if (*run) return Run(run_args, out);
    if (*adjudicate) return Adjudicate(adj_args, in, out);
    if (*evaluate) return Evaluate(eval_run, eval_verdicts, eval_out, out);
    if (*report) return Report(report_paths, report_out, out);
  } catch (const PendingAdjudicationError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& item : e.items()) err << "  pending: " << item << '\n';
    return kPendingAdjudication;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << '\n';
    return kProviderError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace canvasbug::cli
