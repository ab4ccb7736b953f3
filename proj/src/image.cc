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

#include "canvasbug/image.h"

#include <png.h>

#include <cstring>
#include <vector>

#include "canvasbug/errors.h"

namespace canvasbug {

PngInfo DecodePng(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot decode PNG " + path.string() + ": " +
                    image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + message);
  }
  return PngInfo{static_cast<int>(image.width), static_cast<int>(image.height)};
}

void WriteSolidPng(const std::filesystem::path& path, int width, int height,
                   unsigned rgba) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  for (size_t i = 0; i < pixels.size(); i += 4) {
    pixels[i] = static_cast<png_byte>(rgba >> 24);
    pixels[i + 1] = static_cast<png_byte>(rgba >> 16);
    pixels[i + 2] = static_cast<png_byte>(rgba >> 8);
    pixels[i + 3] = static_cast<png_byte>(rgba);
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0,
                               nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " +
                    image.message);
  }
}

}  // namespace canvasbug
