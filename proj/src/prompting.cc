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

#include "canvasbug/prompting.h"

#include <nlohmann/json.hpp>

#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"

namespace canvasbug {

namespace resources {
extern const std::string_view kNoContextTemplate;
extern const std::string_view kReadmeTemplate;
extern const std::string_view kReadmePlusBugDescriptionsTemplate;
extern const std::string_view kAllContextExceptAssetsTemplate;
extern const std::string_view kAllContextTemplate;
extern const std::string_view kMockedResponse;
extern const std::string_view kFollowUp;
extern const std::string_view kAnswerExtraction;
}  // namespace resources

namespace {

constexpr std::string_view kPlaceholder = "{README}";

struct StrategyInfo {
  PromptStrategy strategy;
  std::string_view name;
  std::string_view display;
  ContextPieces context;
};

constexpr std::array<StrategyInfo, 7> kStrategyInfo = {{
    {PromptStrategy::kNoContext, "no-context", "NoContext",
     {false, false, false, false}},
    {PromptStrategy::kReadme, "readme", "README", {true, false, false, false}},
    {PromptStrategy::kReadmePlusBugDescriptions, "readme-plus-bug-descriptions",
     "README+BugDescriptions", {true, true, false, false}},
    {PromptStrategy::kAllContextExceptAssets, "all-context-except-assets",
     "AllContextExceptAssets", {true, true, true, false}},
    {PromptStrategy::kAllContext, "all-context", "AllContext",
     {true, true, true, true}},
    {PromptStrategy::kReadmeGood, "readme-good", "README(Good)",
     {true, false, false, false}},
    {PromptStrategy::kReadmeBad, "readme-bad", "README(Bad)",
     {true, false, false, false}},
}};

const StrategyInfo& InfoFor(PromptStrategy strategy) {
  return kStrategyInfo[static_cast<size_t>(strategy)];
}

bool IsThreeTurn(PromptStrategy strategy) {
  return InfoFor(strategy).context.bug_free_screenshot;
}

}  // namespace

std::string_view StrategyName(PromptStrategy strategy) {
  return InfoFor(strategy).name;
}

std::string_view StrategyDisplayName(PromptStrategy strategy) {
  return InfoFor(strategy).display;
}

std::optional<PromptStrategy> ParseStrategy(std::string_view name) {
  for (const auto& info : kStrategyInfo) {
    if (info.name == name) return info.strategy;
  }
  return std::nullopt;
}

ContextPieces ContextFor(PromptStrategy strategy) {
  return InfoFor(strategy).context;
}

std::string_view TemplateFor(PromptStrategy strategy) {
  switch (strategy) {
    case PromptStrategy::kNoContext:
      return resources::kNoContextTemplate;
    case PromptStrategy::kReadme:
    case PromptStrategy::kReadmeGood:
    case PromptStrategy::kReadmeBad:
      return resources::kReadmeTemplate;
    case PromptStrategy::kReadmePlusBugDescriptions:
      return resources::kReadmePlusBugDescriptionsTemplate;
    case PromptStrategy::kAllContextExceptAssets:
      return resources::kAllContextExceptAssetsTemplate;
    case PromptStrategy::kAllContext:
      return resources::kAllContextTemplate;
  }
  return resources::kNoContextTemplate;
}

std::string RenderTemplate(PromptStrategy strategy, std::string_view readme) {
  const std::string_view tmpl = TemplateFor(strategy);
  std::string out;
  out.reserve(tmpl.size() + readme.size());
  size_t pos = 0;
  while (true) {
    const size_t hit = tmpl.find(kPlaceholder, pos);
    if (hit == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, hit - pos));
    out.append(readme);
    pos = hit + kPlaceholder.size();
  }
  return out;
}

std::string_view MockedAssistantResponse() { return resources::kMockedResponse; }
std::string_view FollowUpQuestion() { return resources::kFollowUp; }
std::string_view AnswerExtractionInstruction() {
  return resources::kAnswerExtraction;
}

std::string_view RoleName(Role role) {
  return role == Role::kUser ? "user" : "assistant";
}

size_t ChatMessage::ImageCount() const {
  size_t n = 0;
  for (const auto& part : parts) n += std::holds_alternative<ImagePart>(part);
  return n;
}

std::string PromptBundle::id() const {
  return std::string(StrategyName(strategy)) + "/" + screenshot.id();
}

std::string PromptBundle::Digest() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& message : messages) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& part : message.parts) {
      if (const auto* text = std::get_if<TextPart>(&part)) {
        parts.push_back({{"text", text->text}});
      } else {
        const auto& image = std::get<ImagePart>(part);
        parts.push_back({{"image_sha256", Sha256Hex(ReadFileBytes(image.path))},
                         {"media_type", image.media_type}});
      }
    }
    doc.push_back({{"role", RoleName(message.role)}, {"parts", parts}});
  }
  return Sha256Hex(doc.dump());
}

std::optional<std::string> Inapplicability(PromptStrategy strategy,
                                           const AppRecord& app) {
  if (strategy == PromptStrategy::kAllContext &&
      (app.graphics_type != GraphicsType::kAssetBased ||
       app.asset_image_paths.empty())) {
    return "all-context requires an asset-based application with image assets";
  }
  if ((strategy == PromptStrategy::kReadmeGood ||
       strategy == PromptStrategy::kReadmeBad) &&
      !app.HasAblationReadmes()) {
    return std::string(StrategyName(strategy)) +
           " requires ablation READMEs (readme_good_path/readme_bad_path)";
  }
  return std::nullopt;
}

std::string ReadmeFor(PromptStrategy strategy, const AppRecord& app) {
  switch (strategy) {
    case PromptStrategy::kNoContext:
      return "";
    case PromptStrategy::kReadmeGood:
      return app.readme_good.value_or("");
    case PromptStrategy::kReadmeBad:
      return app.readme_bad.value_or("");
    default:
      return app.JoinedReadme();
  }
}

PromptBundle BuildMessages(PromptStrategy strategy, const AppRecord& app,
                           const ScreenshotRecord& test,
                           const ScreenshotRecord* bug_free) {
  if (auto reason = Inapplicability(strategy, app)) {
    throw ConfigError("app '" + app.app_id + "': " + *reason);
  }
  if (test.app_id != app.app_id) {
    throw DataError("screenshot '" + test.id() + "' does not belong to app '" +
                    app.app_id + "'");
  }

  PromptBundle bundle;
  bundle.strategy = strategy;
  bundle.app_id = app.app_id;
  bundle.screenshot = test;
  const std::string text = RenderTemplate(strategy, ReadmeFor(strategy, app));

  if (!IsThreeTurn(strategy)) {
    bundle.messages.push_back(
        {Role::kUser, {TextPart{text}, ImagePart{test.image_path}}});
    return bundle;
  }

  if (bug_free == nullptr) {
    throw DataError("app '" + app.app_id + "': " +
                    std::string(StrategyName(strategy)) +
                    " needs a bug-free reference screenshot");
  }
  if (bug_free->label != BugLabel::kBugFree || bug_free->app_id != app.app_id) {
    throw DataError("reference screenshot '" + bug_free->id() +
                    "' is not the bug-free capture of app '" + app.app_id + "'");
  }

  ChatMessage context{Role::kUser, {TextPart{text}, ImagePart{bug_free->image_path}}};
  if (ContextFor(strategy).image_assets) {
    for (const auto& asset : app.asset_image_paths) {
      context.parts.push_back(ImagePart{asset});
    }
  }
  bundle.messages.push_back(std::move(context));
  bundle.messages.push_back(
      {Role::kAssistant, {TextPart{std::string(MockedAssistantResponse())}}});
  bundle.messages.push_back(
      {Role::kUser,
       {TextPart{std::string(FollowUpQuestion())}, ImagePart{test.image_path}}});
  return bundle;
}

}  // namespace canvasbug
