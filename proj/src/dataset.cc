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

#include "canvasbug/dataset.h"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "canvasbug/encoding.h"
#include "canvasbug/errors.h"
#include "canvasbug/image.h"

namespace canvasbug {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::string_view kSeparator = "__";
constexpr std::string_view kExtension = ".png";

struct LabelNames {
  BugLabel label;
  std::string_view token;
  std::string_view display;
};

constexpr std::array<LabelNames, 5> kLabelNames = {{
    {BugLabel::kBugFree, "bugfree", "Bug-free"},
    {BugLabel::kState, "state", "State"},
    {BugLabel::kRendering, "rendering", "Rendering"},
    {BugLabel::kLayout, "layout", "Layout"},
    {BugLabel::kAppearance, "appearance", "Appearance"},
}};

const LabelNames& NamesFor(BugLabel label) {
  return kLabelNames[static_cast<size_t>(label)];
}

// Returns {app_id, label token} or throws.
std::pair<std::string, std::string> SplitFilename(std::string_view name) {
  const auto slash = name.find_last_of('/');
  if (slash != std::string_view::npos) name.remove_prefix(slash + 1);
  const std::string original(name);
  if (name.size() < kExtension.size() ||
      name.substr(name.size() - kExtension.size()) != kExtension) {
    throw DataError("screenshot filename '" + original +
                    "' does not end in .png");
  }
  name.remove_suffix(kExtension.size());
  const auto sep = name.rfind(kSeparator);
  if (sep == std::string_view::npos || sep == 0) {
    throw DataError("screenshot filename '" + original +
                    "' lacks the '<app_id>__<label>' separator");
  }
  return {std::string(name.substr(0, sep)),
          std::string(name.substr(sep + kSeparator.size()))};
}

GraphicsType ParseGraphicsType(const std::string& s, const std::string& app) {
  if (s == "asset_based") return GraphicsType::kAssetBased;
  if (s == "procedural") return GraphicsType::kProcedural;
  throw DataError("app '" + app + "': unknown graphics_type '" + s + "'");
}

AppType ParseAppType(const std::string& s, const std::string& app) {
  if (s == "game") return AppType::kGame;
  if (s == "data_visualization") return AppType::kDataVisualization;
  if (s == "visual_editor") return AppType::kVisualEditor;
  if (s == "animation") return AppType::kAnimation;
  throw DataError("app '" + app + "': unknown app_type '" + s + "'");
}

fs::path Resolve(const fs::path& root, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (root / path).lexically_normal();
}

std::string ReadText(const fs::path& path, const std::string& record) {
  try {
    return ReadFileBytes(path);
  } catch (const DataError&) {
    throw DataError("app '" + record + "': cannot read " + path.string());
  }
}

template <typename T>
T Field(const json& obj, const char* key, const std::string& record) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw DataError(record + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(record + ": field '" + key + "' has the wrong type");
  }
}

AppRecord ParseApp(const json& j, const fs::path& root) {
  if (!j.is_object()) throw DataError("manifest: app entry is not an object");
  AppRecord app;
  app.app_id = Field<std::string>(j, "app_id", "app entry");
  const std::string rec = "app '" + app.app_id + "'";
  app.display_name = j.value("display_name", app.app_id);
  app.graphics_type =
      ParseGraphicsType(Field<std::string>(j, "graphics_type", rec), app.app_id);
  app.app_type = ParseAppType(Field<std::string>(j, "app_type", rec), app.app_id);
  for (const auto& p : j.value("readme_paths", std::vector<std::string>{})) {
    app.readme_paths.push_back(Resolve(root, p));
    app.readme_texts.push_back(ReadText(app.readme_paths.back(), app.app_id));
  }
  if (j.contains("readme_good_path")) {
    app.readme_good = ReadText(
        Resolve(root, Field<std::string>(j, "readme_good_path", rec)), app.app_id);
  }
  if (j.contains("readme_bad_path")) {
    app.readme_bad = ReadText(
        Resolve(root, Field<std::string>(j, "readme_bad_path", rec)), app.app_id);
  }
  for (const auto& p : j.value("asset_paths", std::vector<std::string>{})) {
    app.asset_image_paths.push_back(Resolve(root, p));
  }
  return app;
}

}  // namespace

std::string_view LabelToken(BugLabel label) { return NamesFor(label).token; }

std::string_view LabelDisplayName(BugLabel label) {
  return NamesFor(label).display;
}

std::optional<BugLabel> ParseLabelToken(std::string_view token) {
  for (const auto& names : kLabelNames) {
    if (names.token == token) return names.label;
  }
  return std::nullopt;
}

BugLabel LabelFromFilename(std::string_view name) {
  const auto [app_id, token] = SplitFilename(name);
  if (auto label = ParseLabelToken(token)) return *label;
  throw DataError("screenshot filename '" + std::string(name) +
                  "' has unknown label '" + token + "'");
}

std::string AppIdFromFilename(std::string_view name) {
  return SplitFilename(name).first;
}

std::string FilenameFor(std::string_view app_id, BugLabel label) {
  std::string out(app_id);
  out += kSeparator;
  out += LabelToken(label);
  out += kExtension;
  return out;
}

std::string_view GraphicsTypeName(GraphicsType type) {
  return type == GraphicsType::kAssetBased ? "asset_based" : "procedural";
}

std::string_view AppTypeName(AppType type) {
  switch (type) {
    case AppType::kGame:
      return "game";
    case AppType::kDataVisualization:
      return "data_visualization";
    case AppType::kVisualEditor:
      return "visual_editor";
    case AppType::kAnimation:
      return "animation";
  }
  return "game";
}

std::string AppRecord::JoinedReadme() const {
  std::string out;
  for (size_t i = 0; i < readme_texts.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += readme_texts[i];
  }
  return out;
}

std::string ScreenshotRecord::id() const {
  return image_path.stem().string();
}

const AppRecord* Dataset::FindApp(std::string_view app_id) const {
  auto it = apps.find(std::string(app_id));
  return it == apps.end() ? nullptr : &it->second;
}

const ScreenshotRecord* Dataset::FindScreenshot(std::string_view app_id,
                                                BugLabel label) const {
  for (const auto& shot : screenshots) {
    if (shot.app_id == app_id && shot.label == label) return &shot;
  }
  return nullptr;
}

std::vector<const ScreenshotRecord*> Dataset::ScreenshotsFor(
    std::string_view app_id) const {
  std::vector<const ScreenshotRecord*> out;
  for (const auto& shot : screenshots) {
    if (shot.app_id == app_id) out.push_back(&shot);
  }
  return out;
}

Dataset LoadManifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("manifest not found: " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " +
                    e.what());
  }
  if (!doc.is_object() || !doc.contains("apps") || !doc["apps"].is_array() ||
      !doc.contains("screenshots") || !doc["screenshots"].is_array()) {
    throw DataError("malformed manifest " + manifest_path.string() +
                    ": expected 'apps' and 'screenshots' arrays");
  }

  Dataset dataset;
  dataset.root = manifest_path.parent_path();
  if (dataset.root.empty()) dataset.root = ".";
  if (auto it = doc.find("capture"); it != doc.end()) {
    dataset.capture.width = Field<int>(*it, "width", "capture");
    dataset.capture.height = Field<int>(*it, "height", "capture");
  }

  for (const auto& j : doc["apps"]) {
    AppRecord app = ParseApp(j, dataset.root);
    const std::string id = app.app_id;
    if (!dataset.apps.emplace(id, std::move(app)).second) {
      throw DataError("manifest: duplicate app_id '" + id + "'");
    }
  }

  for (const auto& j : doc["screenshots"]) {
    if (!j.is_object()) {
      throw DataError("manifest: screenshot entry is not an object");
    }
    ScreenshotRecord shot;
    const std::string file = Field<std::string>(j, "file", "screenshot entry");
    const std::string rec = "screenshot '" + file + "'";
    shot.app_id = Field<std::string>(j, "app_id", rec);
    if (!dataset.apps.contains(shot.app_id)) {
      throw DataError(rec + " references unknown app_id '" + shot.app_id + "'");
    }
    shot.label = LabelFromFilename(file);
    shot.image_path = Resolve(dataset.root, file);
    if (j.contains("cor")) {
      shot.cor_path = Resolve(dataset.root, Field<std::string>(j, "cor", rec));
    }
    const PngInfo info = DecodePng(shot.image_path);
    shot.width_px = info.width;
    shot.height_px = info.height;
    dataset.screenshots.push_back(std::move(shot));
  }
  return dataset;
}

std::vector<Violation> ValidateDataset(const Dataset& dataset) {
  std::vector<Violation> out;
  auto add = [&out](std::string record, std::string rule, std::string detail) {
    out.push_back({std::move(record), std::move(rule), std::move(detail)});
  };

  for (const auto& [id, app] : dataset.apps) {
    if (id != app.app_id) {
      add(id, "app-id-key", "map key differs from app_id '" + app.app_id + "'");
    }
    if (app.graphics_type == GraphicsType::kAssetBased &&
        app.asset_image_paths.empty()) {
      add(id, "asset-list", "asset-based app has no image assets");
    }
    if (app.graphics_type == GraphicsType::kProcedural &&
        !app.asset_image_paths.empty()) {
      add(id, "asset-list", "procedural app lists image assets");
    }
    if (app.readme_good.has_value() != app.readme_bad.has_value()) {
      add(id, "ablation-readmes",
          "readme_good and readme_bad must be both present or both absent");
    }
    if (app.readme_texts.empty()) {
      add(id, "readme", "app has no README documents");
    }
    for (const auto& asset : app.asset_image_paths) {
      try {
        DecodePng(asset);
      } catch (const DataError& e) {
        add(id, "asset-image", e.what());
      }
    }
  }

  std::set<std::string> seen_ids;
  std::map<std::string, std::map<BugLabel, int>> per_app;
  for (const auto& shot : dataset.screenshots) {
    const std::string sid = shot.id();
    if (!seen_ids.insert(sid).second) {
      add(sid, "duplicate-screenshot", "screenshot id appears more than once");
    }
    if (!dataset.apps.contains(shot.app_id)) {
      add(sid, "dangling-app-id", "unknown app_id '" + shot.app_id + "'");
    }
    const std::string filename = shot.image_path.filename().string();
    try {
      if (LabelFromFilename(filename) != shot.label) {
        add(sid, "label-filename", "label disagrees with filename");
      }
      if (AppIdFromFilename(filename) != shot.app_id) {
        add(sid, "app-id-filename",
            "filename app id differs from '" + shot.app_id + "'");
      }
    } catch (const DataError& e) {
      add(sid, "label-filename", e.what());
    }
    try {
      const PngInfo info = DecodePng(shot.image_path);
      if (info.width != dataset.capture.width ||
          info.height != dataset.capture.height) {
        add(sid, "capture-size",
            std::to_string(info.width) + "x" + std::to_string(info.height) +
                ", expected " + std::to_string(dataset.capture.width) + "x" +
                std::to_string(dataset.capture.height));
      }
    } catch (const DataError& e) {
      add(sid, "image", e.what());
    }
    ++per_app[shot.app_id][shot.label];
  }

  for (const auto& [id, app] : dataset.apps) {
    const auto& counts = per_app[id];
    std::string missing;
    std::string extra;
    for (BugLabel label : kAllBugLabels) {
      auto it = counts.find(label);
      const int n = it == counts.end() ? 0 : it->second;
      if (n == 0) missing += (missing.empty() ? "" : ", ") + std::string(LabelToken(label));
      if (n > 1) extra += (extra.empty() ? "" : ", ") + std::string(LabelToken(label));
    }
    if (!missing.empty()) {
      add(id, "incomplete-label-set", "missing " + missing);
    }
    if (!extra.empty()) {
      add(id, "duplicate-label", "more than one screenshot for " + extra);
    }
  }
  return out;
}

}  // namespace canvasbug
