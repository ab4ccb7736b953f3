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

#ifndef CANVASBUG_IMAGE_H_
#define CANVASBUG_IMAGE_H_

#include <filesystem>
#include <string>

namespace canvasbug {

struct PngInfo {
  int width = 0;
  int height = 0;
};

// Fully decodes the file to make sure it is a readable PNG. Throws DataError
// with libpng's message otherwise.
PngInfo DecodePng(const std::filesystem::path& path);

// Writes an RGBA image filled with one color. Used to build fixtures.
void WriteSolidPng(const std::filesystem::path& path, int width, int height,
                   unsigned rgba);

}  // namespace canvasbug

#endif  // CANVASBUG_IMAGE_H_
