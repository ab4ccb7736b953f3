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

#ifndef CANVASBUG_ERRORS_H_
#define CANVASBUG_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace canvasbug {

// Root of every error the library raises. The CLI maps each subclass onto a
// distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (exit 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Manifest, image, archive, or verdict-store problems (exit 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// The chat-completions provider failed or answered with something unusable
// (exit 3).
class ProviderError : public Error {
 public:
  using Error::Error;
};

// Connection-level failure. The only provider error that is retried.
class TransportError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// Positive predictions on bug-injected screenshots still lack a human verdict
// (exit 4).
class PendingAdjudicationError : public Error {
 public:
  PendingAdjudicationError(std::string what, std::vector<std::string> items)
      : Error(std::move(what)), items_(std::move(items)) {}

  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
};

}  // namespace canvasbug

#endif  // CANVASBUG_ERRORS_H_
