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

// Two-stage chat-completions pipeline: a free-text visual analysis of the
// prompt bundle, followed by structured answer extraction in a fresh thread.

#ifndef CANVASBUG_VLM_CLIENT_H_
#define CANVASBUG_VLM_CLIENT_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "canvasbug/prompting.h"

namespace canvasbug {

struct RunConfig {
  std::string model_id = "gpt-4o-2024-08-06";
  double temperature = 1.0;
  int repetitions = 4;
  std::vector<int> k_values = {1, 2, 4};
  std::string endpoint = "https://api.openai.com/v1";
  std::string api_key;  // never serialized
  int max_retries = 3;
  double timeout_seconds = 120.0;
  int parallelism = 1;
  std::chrono::milliseconds backoff_base{500};

  // Throws ConfigError on k > n, temperature < 0, and similar.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Overlays the keys present in `j` onto `base`.
  static RunConfig FromJson(const nlohmann::json& j, RunConfig base);
  static RunConfig FromJson(const nlohmann::json& j) {
    return FromJson(j, RunConfig{});
  }
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;
};

struct ChatRequest {
  std::string model;
  double temperature = 1.0;
  std::vector<ChatMessage> messages;
  std::optional<nlohmann::json> response_format;
};

struct ChatCompletion {
  std::string text;
  std::string model;
  std::int64_t created = 0;  // unix seconds, as reported by the provider
  std::optional<TokenUsage> usage;
};

enum class Stage { kAnalysis, kExtraction };

// Identifies one provider call. The HTTP provider ignores it; the mock
// provider uses it to pick a scripted response.
struct RequestKey {
  PromptStrategy strategy = PromptStrategy::kNoContext;
  std::string screenshot_id;
  int repetition = 0;
  Stage stage = Stage::kAnalysis;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  // Throws TransportError for retryable failures and ProviderError for
  // everything else.
  virtual ChatCompletion Complete(const ChatRequest& request,
                                  const RequestKey& key) = 0;
};

// OpenAI-compatible `POST {endpoint}/chat/completions`.
class HttpChatProvider : public ChatProvider {
 public:
  HttpChatProvider(std::string endpoint, std::string api_key,
                   double timeout_seconds);

  ChatCompletion Complete(const ChatRequest& request,
                          const RequestKey& key) override;

  // Wire format. Images are inlined as base64 data URLs.
  static nlohmann::json EncodeRequest(const ChatRequest& request);
  static ChatCompletion DecodeResponse(const nlohmann::json& body);

 private:
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
  double timeout_seconds_;
};

// Scripted provider for offline runs. Fixture format:
//
//   {
//     "model": "mock-vlm", "created": 1728172800,
//     "default": {"analysis": "...", "answer": {...}},
//     "responses": [{
//       "strategy": "no-context" | "*",      // optional, default "*"
//       "screenshot": "paddle__state",
//       "repetition": 0,                     // optional, any repetition
//       "analysis": "free text",
//       "answer": {"bool_did_detect_visual_bug": true,
//                  "string_description_of_visual_bug": "..."},
//       "raw_answer": "...",                 // optional, sent verbatim
//       "transport_faults": 2                // optional
//     }]
//   }
//
// The most specific matching entry wins (exact strategy over "*", exact
// repetition over unset). `transport_faults` makes the first N calls for a
// key throw TransportError.
class MockChatProvider : public ChatProvider {
 public:
  struct Entry {
    std::string strategy = "*";
    std::string screenshot;
    std::optional<int> repetition;
    std::optional<std::string> analysis;
    std::optional<std::string> answer_text;
    int transport_faults = 0;
  };

  MockChatProvider() = default;
  explicit MockChatProvider(const nlohmann::json& fixture);
  static std::unique_ptr<MockChatProvider> FromFile(
      const std::filesystem::path& path);

  void Add(Entry entry);
  void SetDefault(std::optional<std::string> analysis,
                  std::optional<std::string> answer_text);

  ChatCompletion Complete(const ChatRequest& request,
                          const RequestKey& key) override;

  // Every request received, in arrival order.
  std::vector<ChatRequest> requests() const;
  size_t call_count() const;

 private:
  const Entry* Match(const RequestKey& key) const;

  std::string model_ = "mock-vlm";
  std::int64_t created_ = 0;
  std::vector<Entry> entries_;
  Entry default_;
  mutable std::mutex mu_;
  std::map<std::tuple<std::string, std::string, int, int>, int> faults_served_;
  std::vector<ChatRequest> requests_;
};

struct AnalysisResult {
  std::string bundle_id;
  std::string bundle_digest;
  int repetition_index = 0;
  std::string raw_text;
  std::string model_id;
  std::string created_at;
  std::optional<TokenUsage> usage;
  int attempts = 1;
};

struct ExtractedAnswer {
  bool bool_did_detect_visual_bug = false;
  std::string string_description_of_visual_bug;
  // Set when detect=false arrived with a nonempty description that was
  // cleared.
  bool normalized = false;
};

// `response_format` object for the extraction request: strict JSON schema
// named "answer_extraction_response".
nlohmann::json AnswerExtractionResponseFormat();

// The extraction thread: one user message holding the instruction, a blank
// line, and the analysis text verbatim.
ChatRequest BuildExtractionRequest(const std::string& analysis_text,
                                   const RunConfig& config);

// Validates a structured-output payload against the extraction schema and
// applies the detect=false normalization. Throws ProviderError.
ExtractedAnswer ParseExtractedAnswer(const std::string& payload);

// Calls the provider, retrying TransportError up to `config.max_retries`
// times with exponential backoff. `attempts` receives the number of calls
// made.
ChatCompletion CompleteWithRetry(ChatProvider& provider,
                                 const ChatRequest& request,
                                 const RequestKey& key, const RunConfig& config,
                                 int* attempts);

// Stage one. Throws ProviderError (with bundle id and repetition) on
// transport exhaustion, provider errors, or an empty completion.
AnalysisResult CompleteAnalysis(ChatProvider& provider,
                                const PromptBundle& bundle, int repetition,
                                const RunConfig& config);

// Stage two.
ExtractedAnswer ExtractAnswer(ChatProvider& provider,
                              const AnalysisResult& analysis,
                              const RequestKey& key, const RunConfig& config);

}  // namespace canvasbug

#endif  // CANVASBUG_VLM_CLIENT_H_
