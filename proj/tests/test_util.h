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

#ifndef CANVASBUG_TESTS_TEST_UTIL_H_
#define CANVASBUG_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "canvasbug/dataset.h"
#include "canvasbug/image.h"

namespace canvasbug::testing {

inline std::filesystem::path FixtureDir() { return CANVASBUG_FIXTURE_DIR; }
inline std::filesystem::path MiniManifest() {
  return FixtureDir() / "mini_corpus" / "manifest.json";
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("canvasbug_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const {
    return path_ / rel;
  }

 private:
  std::filesystem::path path_;
};

inline void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct SyntheticApp {
  std::string app_id;
  bool asset_based = false;
  int assets = 0;
  bool ablation = false;
  std::vector<BugLabel> labels = {kAllBugLabels.begin(), kAllBugLabels.end()};
};

// Writes a small corpus (64x36 captures, declared in the manifest) and
// returns the manifest path.
inline std::filesystem::path WriteSyntheticCorpus(
    const std::filesystem::path& root, const std::vector<SyntheticApp>& apps) {
  nlohmann::json manifest = {{"capture", {{"width", 64}, {"height", 36}}},
                             {"apps", nlohmann::json::array()},
                             {"screenshots", nlohmann::json::array()}};
  unsigned color = 0x10203000;
  for (const auto& app : apps) {
    const std::string base = "apps/" + app.app_id + "/";
    WriteFile(root / (base + "README.md"), "# " + app.app_id + "\n");
    nlohmann::json entry = {
        {"app_id", app.app_id},
        {"display_name", app.app_id},
        {"readme_paths", {base + "README.md"}},
        {"graphics_type", app.asset_based ? "asset_based" : "procedural"},
        {"app_type", "game"},
        {"asset_paths", nlohmann::json::array()}};
    for (int i = 0; i < app.assets; ++i) {
      const std::string rel = base + "asset" + std::to_string(i) + ".png";
      std::filesystem::create_directories((root / rel).parent_path());
      WriteSolidPng(root / rel, 8, 8, 0xff0000ffu + static_cast<unsigned>(i));
      entry["asset_paths"].push_back(rel);
    }
    if (app.ablation) {
      WriteFile(root / (base + "good.md"), "good");
      WriteFile(root / (base + "bad.md"), "bad");
      entry["readme_good_path"] = base + "good.md";
      entry["readme_bad_path"] = base + "bad.md";
    }
    manifest["apps"].push_back(entry);
    for (BugLabel label : app.labels) {
      const std::string rel = "shots/" + FilenameFor(app.app_id, label);
      std::filesystem::create_directories((root / rel).parent_path());
      WriteSolidPng(root / rel, 64, 36, color += 0x00010100);
      manifest["screenshots"].push_back({{"app_id", app.app_id}, {"file", rel}});
    }
  }
  WriteFile(root / "manifest.json", manifest.dump(2));
  return root / "manifest.json";
}

}  // namespace canvasbug::testing

#endif  // CANVASBUG_TESTS_TEST_UTIL_H_
