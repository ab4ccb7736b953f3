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

// Prompt templates and chat-message assembly for each context strategy.

#ifndef CANVASBUG_PROMPTING_H_
#define CANVASBUG_PROMPTING_H_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "canvasbug/dataset.h"

namespace canvasbug {

enum class PromptStrategy {
  kNoContext,
  kReadme,
  kReadmePlusBugDescriptions,
  kAllContextExceptAssets,
  kAllContext,
  kReadmeGood,
  kReadmeBad,
};

inline constexpr std::array<PromptStrategy, 7> kAllStrategies = {
    PromptStrategy::kNoContext,
    PromptStrategy::kReadme,
    PromptStrategy::kReadmePlusBugDescriptions,
    PromptStrategy::kAllContextExceptAssets,
    PromptStrategy::kAllContext,
    PromptStrategy::kReadmeGood,
    PromptStrategy::kReadmeBad};

// The five main strategies, excluding the README ablation pair.
inline constexpr std::array<PromptStrategy, 5> kMainStrategies = {
    PromptStrategy::kNoContext, PromptStrategy::kReadme,
    PromptStrategy::kReadmePlusBugDescriptions,
    PromptStrategy::kAllContextExceptAssets, PromptStrategy::kAllContext};

// Kebab-case name used on the command line and in archives, e.g.
// "all-context-except-assets".
std::string_view StrategyName(PromptStrategy strategy);
// Table heading, e.g. "README+BugDescriptions".
std::string_view StrategyDisplayName(PromptStrategy strategy);
std::optional<PromptStrategy> ParseStrategy(std::string_view name);

// Which pieces of context a strategy supplies.
struct ContextPieces {
  bool readme = false;
  bool bug_descriptions = false;
  bool bug_free_screenshot = false;
  bool image_assets = false;

  bool operator==(const ContextPieces&) const = default;
};
ContextPieces ContextFor(PromptStrategy strategy);

// Raw template text, including the literal "{README}" placeholder where the
// strategy carries a README.
std::string_view TemplateFor(PromptStrategy strategy);
// Template with the placeholder replaced by `readme`.
std::string RenderTemplate(PromptStrategy strategy, std::string_view readme);

// Pre-determined assistant turn that follows the bug-free reference shot.
std::string_view MockedAssistantResponse();
// Final user turn that carries the screenshot under test.
std::string_view FollowUpQuestion();
// Instruction for the answer-extraction thread.
std::string_view AnswerExtractionInstruction();

enum class Role { kUser, kAssistant };
std::string_view RoleName(Role role);

struct TextPart {
  std::string text;
};

struct ImagePart {
  std::filesystem::path path;
  std::string media_type = "image/png";
};

using MessagePart = std::variant<TextPart, ImagePart>;

struct ChatMessage {
  Role role = Role::kUser;
  std::vector<MessagePart> parts;

  size_t ImageCount() const;
};

struct PromptBundle {
  PromptStrategy strategy = PromptStrategy::kNoContext;
  std::string app_id;
  ScreenshotRecord screenshot;
  std::vector<ChatMessage> messages;

  // "<strategy>/<screenshot id>"
  std::string id() const;
  // SHA-256 over the message structure, with each image replaced by the
  // digest of its bytes.
  std::string Digest() const;
};

// Empty when the strategy can run on this app; otherwise the reason it is
// skipped.
std::optional<std::string> Inapplicability(PromptStrategy strategy,
                                           const AppRecord& app);

// README text a strategy substitutes into its template: the joined README(s),
// the ablation variants, or nothing for NoContext.
std::string ReadmeFor(PromptStrategy strategy, const AppRecord& app);

// Assembles the chat. `bug_free` is required for the two AllContext
// strategies and must be the same app's bug-free capture. Throws ConfigError
// when the strategy does not apply to the app and DataError when the
// reference screenshot is missing or wrong.
PromptBundle BuildMessages(PromptStrategy strategy, const AppRecord& app,
                           const ScreenshotRecord& test,
                           const ScreenshotRecord* bug_free);

}  // namespace canvasbug

#endif  // CANVASBUG_PROMPTING_H_
