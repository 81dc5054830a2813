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

#include "robin/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "robin/error.hpp"

namespace robin {

namespace {

using nlohmann::json;

[[noreturn]] void reject(std::string_view field, const std::string& why) {
  throw DataError("judge report: field '" + std::string(field) + "' " + why);
}

const json& require(const json& doc, std::string_view key) {
  auto it = doc.find(std::string(key));
  if (it == doc.end()) reject(key, "is missing");
  return *it;
}

std::string word(const json& doc, std::string_view key) {
  const json& v = require(doc, key);
  if (!v.is_string()) reject(key, "must be a string");
  const std::string s = v.get<std::string>();
  if (s.empty()) reject(key, "must not be empty");
  if (std::ranges::any_of(s, [](unsigned char c) { return std::isspace(c) != 0; })) {
    reject(key, "must be a single word");
  }
  return s;
}

}  // namespace

JudgeReport parse_judge(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("judge report: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("judge report: top level must be an object");

  JudgeReport out;
  const json& analysis = require(doc, "global_analysis");
  if (!analysis.is_string()) reject("global_analysis", "must be a string");
  out.global_analysis = analysis.get<std::string>();

  for (std::size_t a = 0; a < kJudgeAxes; ++a) {
    const std::string_view key = kJudgeAxisNames[a];
    const json& v = require(doc, key);
    if (!v.is_number_integer()) reject(key, "must be an integer score, got " + v.dump());
    const auto score = v.get<long long>();
    if (score < 1 || score > 5) reject(key, "score " + std::to_string(score) + " is outside 1..5");
    out.scores[a] = static_cast<int>(score);
  }
  out.video_theme = word(doc, "video_theme");
  out.audio_theme = word(doc, "audio_theme");
  out.video_emotion = word(doc, "video_emotion");
  out.audio_emotion = word(doc, "audio_emotion");

  for (const auto& [key, value] : doc.items()) {
    const bool known = key == "global_analysis" || key == "video_theme" || key == "audio_theme" ||
                       key == "video_emotion" || key == "audio_emotion" ||
                       std::ranges::find(kJudgeAxisNames, key) != kJudgeAxisNames.end();
    if (!known) reject(key, "is not part of the schema");
  }
  return out;
}

std::array<double, kJudgeAxes> aggregate_judges(const std::vector<JudgeReport>& reports) {
  if (reports.empty()) throw DataError("judge aggregation: no reports");
  std::array<double, kJudgeAxes> means{};
  for (const JudgeReport& r : reports) {
    for (std::size_t a = 0; a < kJudgeAxes; ++a) means[a] += r.scores[a];
  }
  for (double& m : means) m /= static_cast<double>(reports.size());
  return means;
}

std::string format_mean(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

}  // namespace robin
