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

#include "robin/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace robin {

void init_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("robin");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  const char* env = std::getenv("ROBIN_LOG");
  const std::string name = env ? env : "warn";
  auto level = spdlog::level::from_str(name);
  if (level == spdlog::level::off && name != "off") level = spdlog::level::warn;
  spdlog::set_level(level);
}

}  // namespace robin
