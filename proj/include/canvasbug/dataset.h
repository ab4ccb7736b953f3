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

// Corpus of canvas applications, their READMEs and image assets, and the
// labeled screenshots captured from them.
//
// A dataset lives in one directory with a `manifest.json` at its root:
//
//   {
//     "capture": {"width": 1280, "height": 720},          // optional
//     "apps": [{
//       "app_id": "paddle", "display_name": "Paddle",
//       "readme_paths": ["apps/paddle/README.md"],
//       "readme_good_path": "...", "readme_bad_path": "...", // optional pair
//       "graphics_type": "asset_based" | "procedural",
//       "app_type": "game" | "data_visualization" | "visual_editor" | "animation",
//       "asset_paths": ["apps/paddle/assets/ball.png"]
//     }],
//     "screenshots": [{"app_id": "paddle", "file": "shots/paddle__state.png",
//                      "cor": "cor/paddle__state.json"}]  // cor optional
//   }
//
// Relative paths resolve against the manifest's directory. Screenshot labels
// are never stored in the manifest; they come from the filename, which must
// read `<app_id>__<label>.png`.

#ifndef CANVASBUG_DATASET_H_
#define CANVASBUG_DATASET_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace canvasbug {

enum class BugLabel { kBugFree, kState, kRendering, kLayout, kAppearance };

inline constexpr std::array<BugLabel, 5> kAllBugLabels = {
    BugLabel::kBugFree, BugLabel::kState, BugLabel::kRendering,
    BugLabel::kLayout, BugLabel::kAppearance};

// The four injected bug types, in the order the result tables list them.
inline constexpr std::array<BugLabel, 4> kInjectedBugLabels = {
    BugLabel::kState, BugLabel::kRendering, BugLabel::kLayout,
    BugLabel::kAppearance};

// Filename token: "bugfree", "state", "rendering", "layout", "appearance".
std::string_view LabelToken(BugLabel label);
// Table heading: "Bug-free", "State", ...
std::string_view LabelDisplayName(BugLabel label);
std::optional<BugLabel> ParseLabelToken(std::string_view token);

// Parses `<app_id>__<label>.png`; directory components are ignored. Throws
// DataError on a missing separator, missing extension, or unknown token.
BugLabel LabelFromFilename(std::string_view name);
// Splits the same convention and returns the app id part.
std::string AppIdFromFilename(std::string_view name);
std::string FilenameFor(std::string_view app_id, BugLabel label);

enum class GraphicsType { kAssetBased, kProcedural };
enum class AppType { kGame, kDataVisualization, kVisualEditor, kAnimation };

std::string_view GraphicsTypeName(GraphicsType type);
std::string_view AppTypeName(AppType type);

struct AppRecord {
  std::string app_id;
  std::string display_name;
  std::vector<std::filesystem::path> readme_paths;
  std::vector<std::string> readme_texts;
  std::optional<std::string> readme_good;
  std::optional<std::string> readme_bad;
  GraphicsType graphics_type = GraphicsType::kProcedural;
  AppType app_type = AppType::kGame;
  std::vector<std::filesystem::path> asset_image_paths;

  // All README documents joined in manifest order, one blank line between.
  std::string JoinedReadme() const;
  bool HasAblationReadmes() const {
    return readme_good.has_value() && readme_bad.has_value();
  }
};

struct ScreenshotRecord {
  std::string app_id;
  BugLabel label = BugLabel::kBugFree;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> cor_path;
  int width_px = 0;
  int height_px = 0;

  // Filename stem, e.g. "paddle__state". Unique within a dataset.
  std::string id() const;
};

struct CaptureSize {
  int width = 1280;
  int height = 720;
};

struct Dataset {
  std::filesystem::path root;
  CaptureSize capture;
  std::map<std::string, AppRecord> apps;
  std::vector<ScreenshotRecord> screenshots;

  const AppRecord* FindApp(std::string_view app_id) const;
  const ScreenshotRecord* FindScreenshot(std::string_view app_id,
                                         BugLabel label) const;
  std::vector<const ScreenshotRecord*> ScreenshotsFor(
      std::string_view app_id) const;
};

// Reads and resolves a manifest. Every README is read and every PNG decoded
// here, so a returned Dataset never references unreadable files. Throws
// DataError naming the offending record.
Dataset LoadManifest(const std::filesystem::path& manifest_path);

struct Violation {
  std::string record;  // app id or screenshot id
  std::string rule;    // short stable rule name, e.g. "incomplete-label-set"
  std::string detail;
};

// Checks every dataset invariant. An empty result means the dataset is valid.
std::vector<Violation> ValidateDataset(const Dataset& dataset);

}  // namespace canvasbug

#endif  // CANVASBUG_DATASET_H_
