// Copyright 2026 The Robin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: synthdata, train, generate, eval, bench.
//
// Exit codes:
//   0  success
//   1  usage or configuration error
//   2  data or validation error (bad files, shapes, judge reports)
//   3  internal error

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "robin/dataset.hpp"
#include "robin/error.hpp"

namespace robin {

class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

inline constexpr const char* kFallbackPrompt = "Generate aligned music for the video";

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-cased whitespace-separated words, each mapped to
/// fnv1a64(word) mod vocab_size.
TextTokens tokenize_prompt(const std::string& prompt, std::size_t vocab_size);

}  // namespace robin
