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

// Judge report fixtures shared by the unit tests and the acceptance run.

#pragma once

#include <array>
#include <string>
#include <vector>

namespace robin::testing {

/// A well-formed report with the given seven scores.
inline std::string judge_json(const std::array<std::string, 7>& scores, const std::string& extra = "",
                              const std::string& theme = "\"epic\"") {
  return "{\"global_analysis\": \"steady pulse, matches the cuts\", "
         "\"rhythmic_sync\": " + scores[0] + ", \"theme_coherence\": " + scores[1] +
         ", \"emotion_alignment\": " + scores[2] + ", \"cultural_relevance\": " + scores[3] +
         ", \"temporal_dynamics\": " + scores[4] + ", \"instrumentation_fit\": " + scores[5] +
         ", \"overall_alignment\": " + scores[6] + ", \"video_theme\": " + theme +
         ", \"audio_theme\": \"cinematic\", \"video_emotion\": \"tense\", \"audio_emotion\": \"calm\"" + extra + "}";
}

inline std::string judge_json_ints(const std::array<int, 7>& s) {
  std::array<std::string, 7> t;
  for (std::size_t i = 0; i < 7; ++i) t[i] = std::to_string(s[i]);
  return judge_json(t);
}

struct MalformedJudge {
  std::string text;
  std::string field;  // must appear in the error message; empty for syntax errors
};

/// Twenty reports that must all be rejected.
inline std::vector<MalformedJudge> malformed_judges() {
  const std::array<std::string, 7> ok{"3", "4", "2", "5", "1", "3", "4"};
  auto with = [&](std::size_t axis, const std::string& value) {
    auto s = ok;
    s[axis] = value;
    return judge_json(s);
  };
  const std::string valid = judge_json(ok);
  auto drop = [&](const std::string& key) {
    std::string t = valid;
    const auto pos = t.find("\"" + key + "\"");
    const auto end = t.find(", \"", pos + key.size() + 2);
    t.erase(pos, end + 2 - pos);
    return t;
  };
  return {
      {drop("rhythmic_sync"), "rhythmic_sync"},
      {drop("overall_alignment"), "overall_alignment"},
      {drop("global_analysis"), "global_analysis"},
      {drop("video_theme"), "video_theme"},
      {with(0, "0"), "rhythmic_sync"},
      {with(4, "0"), "temporal_dynamics"},
      {with(1, "6"), "theme_coherence"},
      {with(6, "6"), "overall_alignment"},
      {with(2, "3.5"), "emotion_alignment"},
      {with(3, "4.0"), "cultural_relevance"},
      {with(5, "\"4\""), "instrumentation_fit"},
      {with(0, "null"), "rhythmic_sync"},
      {with(1, "-2"), "theme_coherence"},
      {with(2, "true"), "emotion_alignment"},
      {valid + " trailing", ""},
      {valid + "}", ""},
      {valid.substr(0, valid.size() - 1), ""},
      {judge_json(ok, ", \"bonus\": 1"), "bonus"},
      {judge_json(ok, "", "\"two words\""), "video_theme"},
      {"[" + valid + "]", ""},
  };
}

}  // namespace robin::testing
