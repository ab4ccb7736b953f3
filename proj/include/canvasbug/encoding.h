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

#ifndef CANVASBUG_ENCODING_H_
#define CANVASBUG_ENCODING_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace canvasbug {

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);

std::string Base64Encode(std::string_view bytes);

// Throws DataError when the file cannot be read.
std::string ReadFileBytes(const std::filesystem::path& path);

// "2024-10-06T12:00:00Z"
std::string FormatUtcTimestamp(std::int64_t unix_seconds);
std::int64_t UnixNow();

}  // namespace canvasbug

#endif  // CANVASBUG_ENCODING_H_
