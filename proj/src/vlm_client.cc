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

#include "canvasbug/vlm_client.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <thread>

#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"

namespace canvasbug {
namespace {

using nlohmann::json;

constexpr const char* kDetectField = "bool_did_detect_visual_bug";
constexpr const char* kDescriptionField = "string_description_of_visual_bug";

std::string StageName(Stage stage) {
  return stage == Stage::kAnalysis ? "analysis" : "extraction";
}

std::string KeyLabel(const RequestKey& key) {
  return std::string(StrategyName(key.strategy)) + "/" + key.screenshot_id +
         " repetition " + std::to_string(key.repetition) + " (" +
         StageName(key.stage) + ")";
}

json EncodeContent(const ChatMessage& message) {
  if (message.role == Role::kAssistant) {
    // Assistant turns carry exactly one text part.
    for (const auto& part : message.parts) {
      if (const auto* text = std::get_if<TextPart>(&part)) return text->text;
    }
    return "";
  }
  json parts = json::array();
  for (const auto& part : message.parts) {
    if (const auto* text = std::get_if<TextPart>(&part)) {
      parts.push_back({{"type", "text"}, {"text", text->text}});
    } else {
      const auto& image = std::get<ImagePart>(part);
      parts.push_back(
          {{"type", "image_url"},
           {"image_url",
            {{"url", "data:" + image.media_type + ";base64," +
                         Base64Encode(ReadFileBytes(image.path))}}}});
    }
  }
  return parts;
}

std::string ErrorMessage(const json& body) {
  if (body.contains("error")) {
    const json& err = body["error"];
    if (err.is_object() && err.contains("message") && err["message"].is_string()) {
      return err["message"].get<std::string>();
    }
    return err.dump();
  }
  return body.dump();
}

}  // namespace

void RunConfig::Validate() const {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (temperature < 0) throw ConfigError("temperature must be >= 0");
  if (k_values.empty()) throw ConfigError("k_values must not be empty");
  for (int k : k_values) {
    if (k < 1 || k > repetitions) {
      throw ConfigError("k=" + std::to_string(k) + " must lie in [1, " +
                        std::to_string(repetitions) + "]");
    }
  }
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (timeout_seconds <= 0) throw ConfigError("timeout must be positive");
}

json RunConfig::ToJson() const {
  return {{"model_id", model_id},
          {"temperature", temperature},
          {"repetitions", repetitions},
          {"k_values", k_values},
          {"endpoint", endpoint},
          {"max_retries", max_retries},
          {"timeout_seconds", timeout_seconds},
          {"parallelism", parallelism},
          {"backoff_ms", backoff_base.count()}};
}

RunConfig RunConfig::FromJson(const json& j, RunConfig base) {
  try {
    if (j.contains("model_id")) base.model_id = j["model_id"].get<std::string>();
    if (j.contains("temperature")) base.temperature = j["temperature"].get<double>();
    if (j.contains("repetitions")) base.repetitions = j["repetitions"].get<int>();
    if (j.contains("k_values")) base.k_values = j["k_values"].get<std::vector<int>>();
    if (j.contains("endpoint")) base.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("max_retries")) base.max_retries = j["max_retries"].get<int>();
    if (j.contains("timeout_seconds")) {
      base.timeout_seconds = j["timeout_seconds"].get<double>();
    }
    if (j.contains("parallelism")) base.parallelism = j["parallelism"].get<int>();
    if (j.contains("backoff_ms")) {
      base.backoff_base = std::chrono::milliseconds(j["backoff_ms"].get<int>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run configuration: ") + e.what());
  }
  return base;
}

// --- HTTP provider ---------------------------------------------------------

HttpChatProvider::HttpChatProvider(std::string endpoint, std::string api_key,
                                   double timeout_seconds)
    : api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint '" + endpoint + "' lacks a scheme");
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint.substr(0, path_start);
  if (path_start != std::string::npos) {
    path_prefix_ = endpoint.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
      path_prefix_.pop_back();
    }
  }
}

json HttpChatProvider::EncodeRequest(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& message : request.messages) {
    messages.push_back(
        {{"role", RoleName(message.role)}, {"content", EncodeContent(message)}});
  }
  json body = {{"model", request.model},
               {"temperature", request.temperature},
               {"messages", messages}};
  if (request.response_format) body["response_format"] = *request.response_format;
  return body;
}

ChatCompletion HttpChatProvider::DecodeResponse(const json& body) {
  if (!body.is_object()) throw ProviderError("response is not a JSON object");
  if (body.contains("error")) {
    throw ProviderError("provider error: " + ErrorMessage(body));
  }
  if (!body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty()) {
    throw ProviderError("response has no choices");
  }
  const json& message = body["choices"][0].value("message", json::object());
  if (message.contains("refusal") && message["refusal"].is_string()) {
    throw ProviderError("provider refused: " +
                        message["refusal"].get<std::string>());
  }
  ChatCompletion out;
  if (message.contains("content") && message["content"].is_string()) {
    out.text = message["content"].get<std::string>();
  }
  out.model = body.value("model", "");
  if (body.contains("created") && body["created"].is_number_integer()) {
    out.created = body["created"].get<std::int64_t>();
  }
  if (body.contains("usage") && body["usage"].is_object()) {
    const json& u = body["usage"];
    out.usage = TokenUsage{u.value("prompt_tokens", std::int64_t{0}),
                           u.value("completion_tokens", std::int64_t{0}),
                           u.value("total_tokens", std::int64_t{0})};
  }
  return out;
}

ChatCompletion HttpChatProvider::Complete(const ChatRequest& request,
                                          const RequestKey& key) {
  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  const auto usecs =
      static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  const std::string body = EncodeRequest(request).dump();
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body,
                         "application/json");
  if (!res) {
    throw TransportError(KeyLabel(key) + ": " + httplib::to_string(res.error()));
  }
  json parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (res->status == 429 || res->status >= 500) {
    throw TransportError(KeyLabel(key) + ": HTTP " +
                         std::to_string(res->status));
  }
  if (res->status != 200) {
    throw ProviderError(KeyLabel(key) + ": HTTP " + std::to_string(res->status) +
                        ": " +
                        (parsed.is_discarded() ? res->body : ErrorMessage(parsed)));
  }
  if (parsed.is_discarded()) {
    throw ProviderError(KeyLabel(key) + ": response body is not JSON");
  }
  return DecodeResponse(parsed);
}

// --- Mock provider ---------------------------------------------------------

MockChatProvider::MockChatProvider(const json& fixture) {
  try {
    model_ = fixture.value("model", model_);
    created_ = fixture.value("created", std::int64_t{0});
    auto read_entry = [](const json& j) {
      Entry e;
      e.strategy = j.value("strategy", "*");
      e.screenshot = j.value("screenshot", "");
      if (j.contains("repetition")) e.repetition = j["repetition"].get<int>();
      if (j.contains("analysis")) e.analysis = j["analysis"].get<std::string>();
      if (j.contains("raw_answer")) {
        e.answer_text = j["raw_answer"].get<std::string>();
      } else if (j.contains("answer")) {
        e.answer_text = j["answer"].dump();
      }
      e.transport_faults = j.value("transport_faults", 0);
      return e;
    };
    if (fixture.contains("default")) default_ = read_entry(fixture["default"]);
    for (const auto& j : fixture.value("responses", json::array())) {
      entries_.push_back(read_entry(j));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed mock fixture: ") + e.what());
  }
}

std::unique_ptr<MockChatProvider> MockChatProvider::FromFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("mock fixture not found: " + path.string());
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw DataError("malformed mock fixture: " + path.string());
  }
  return std::make_unique<MockChatProvider>(doc);
}

void MockChatProvider::Add(Entry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

void MockChatProvider::SetDefault(std::optional<std::string> analysis,
                                  std::optional<std::string> answer_text) {
  std::lock_guard lock(mu_);
  default_.analysis = std::move(analysis);
  default_.answer_text = std::move(answer_text);
}

const MockChatProvider::Entry* MockChatProvider::Match(
    const RequestKey& key) const {
  const std::string strategy(StrategyName(key.strategy));
  const Entry* best = nullptr;
  int best_score = -1;
  for (const auto& e : entries_) {
    if (e.screenshot != key.screenshot_id) continue;
    if (e.strategy != "*" && e.strategy != strategy) continue;
    if (e.repetition && *e.repetition != key.repetition) continue;
    const int score = (e.strategy != "*" ? 2 : 0) + (e.repetition ? 1 : 0);
    if (score > best_score) {
      best = &e;
      best_score = score;
    }
  }
  return best;
}

ChatCompletion MockChatProvider::Complete(const ChatRequest& request,
                                          const RequestKey& key) {
  std::lock_guard lock(mu_);
  requests_.push_back(request);
  const Entry* entry = Match(key);
  const Entry& e = entry != nullptr ? *entry : default_;

  int& served = faults_served_[{std::string(StrategyName(key.strategy)),
                                key.screenshot_id, key.repetition,
                                static_cast<int>(key.stage)}];
  if (served < e.transport_faults) {
    ++served;
    throw TransportError(KeyLabel(key) + ": injected transport fault " +
                         std::to_string(served));
  }

  const auto& text = key.stage == Stage::kAnalysis ? e.analysis : e.answer_text;
  if (!text) {
    throw ProviderError(KeyLabel(key) + ": mock has no scripted response");
  }
  return ChatCompletion{*text, model_, created_, std::nullopt};
}

std::vector<ChatRequest> MockChatProvider::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

size_t MockChatProvider::call_count() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

// --- Pipeline stages -------------------------------------------------------

json AnswerExtractionResponseFormat() {
  json properties = json::object();
  properties[kDetectField] = {{"type", "boolean"}};
  properties[kDescriptionField] = {{"type", "string"}};
  return {{"type", "json_schema"},
          {"json_schema",
           {{"name", "answer_extraction_response"},
            {"strict", true},
            {"schema",
             {{"type", "object"},
              {"properties", properties},
              {"required", {kDetectField, kDescriptionField}},
              {"additionalProperties", false}}}}}};
}

ChatRequest BuildExtractionRequest(const std::string& analysis_text,
                                   const RunConfig& config) {
  ChatRequest request;
  request.model = config.model_id;
  request.temperature = config.temperature;
  request.messages.push_back(
      {Role::kUser,
       {TextPart{std::string(AnswerExtractionInstruction()) + "\n\n" +
                 analysis_text}}});
  request.response_format = AnswerExtractionResponseFormat();
  return request;
}

ExtractedAnswer ParseExtractedAnswer(const std::string& payload) {
  json doc = json::parse(payload, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw ProviderError("parse failure: extraction payload is not JSON");
  }
  if (!doc.is_object() || doc.size() != 2 || !doc.contains(kDetectField) ||
      !doc.contains(kDescriptionField) || !doc[kDetectField].is_boolean() ||
      !doc[kDescriptionField].is_string()) {
    throw ProviderError("schema-invalid response: " + doc.dump());
  }
  ExtractedAnswer answer;
  answer.bool_did_detect_visual_bug = doc[kDetectField].get<bool>();
  answer.string_description_of_visual_bug =
      doc[kDescriptionField].get<std::string>();
  if (!answer.bool_did_detect_visual_bug &&
      !answer.string_description_of_visual_bug.empty()) {
    answer.string_description_of_visual_bug.clear();
    answer.normalized = true;
  }
  return answer;
}

ChatCompletion CompleteWithRetry(ChatProvider& provider,
                                 const ChatRequest& request,
                                 const RequestKey& key, const RunConfig& config,
                                 int* attempts) {
  auto delay = config.backoff_base;
  for (int attempt = 1;; ++attempt) {
    if (attempts != nullptr) *attempts = attempt;
    try {
      return provider.Complete(request, key);
    } catch (const TransportError& e) {
      if (attempt > config.max_retries) {
        throw TransportError("transport failure after " +
                             std::to_string(attempt) + " attempts: " + e.what());
      }
      spdlog::warn("{}: retry {}/{} after {} ms: {}", KeyLabel(key), attempt,
                   config.max_retries, delay.count(), e.what());
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
}

AnalysisResult CompleteAnalysis(ChatProvider& provider,
                                const PromptBundle& bundle, int repetition,
                                const RunConfig& config) {
  const RequestKey key{bundle.strategy, bundle.screenshot.id(), repetition,
                       Stage::kAnalysis};
  ChatRequest request{config.model_id, config.temperature, bundle.messages,
                      std::nullopt};
  AnalysisResult result;
  result.bundle_id = bundle.id();
  result.bundle_digest = bundle.Digest();
  result.repetition_index = repetition;
  const std::string where =
      bundle.id() + " repetition " + std::to_string(repetition) + ": ";
  ChatCompletion completion;
  try {
    completion = CompleteWithRetry(provider, request, key, config, &result.attempts);
  } catch (const TransportError& e) {
    throw TransportError(where + e.what());
  } catch (const ProviderError& e) {
    throw ProviderError(where + e.what());
  }
  if (completion.text.empty()) throw ProviderError(where + "empty completion");
  if (result.attempts > 1) {
    spdlog::info("{}succeeded after {} attempts", where, result.attempts);
  }
  result.raw_text = std::move(completion.text);
  result.model_id = completion.model.empty() ? config.model_id : completion.model;
  result.created_at = FormatUtcTimestamp(completion.created);
  result.usage = completion.usage;
  return result;
}

ExtractedAnswer ExtractAnswer(ChatProvider& provider,
                              const AnalysisResult& analysis,
                              const RequestKey& key, const RunConfig& config) {
  const std::string where = analysis.bundle_id + " repetition " +
                            std::to_string(analysis.repetition_index) + ": ";
  if (analysis.raw_text.empty()) {
    throw ProviderError(where + "cannot extract from an empty analysis");
  }
  RequestKey extraction_key = key;
  extraction_key.stage = Stage::kExtraction;
  const ChatRequest request = BuildExtractionRequest(analysis.raw_text, config);
  try {
    ChatCompletion completion =
        CompleteWithRetry(provider, request, extraction_key, config, nullptr);
    ExtractedAnswer answer = ParseExtractedAnswer(completion.text);
    if (answer.normalized) {
      spdlog::warn("{}detect=false with a nonempty description; cleared", where);
    }
    return answer;
  } catch (const TransportError& e) {
    throw TransportError(where + e.what());
  } catch (const ProviderError& e) {
    throw ProviderError(where + e.what());
  }
}

}  // namespace canvasbug
