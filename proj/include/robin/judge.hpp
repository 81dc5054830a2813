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

// Rubric-scored judge reports: strict parsing and per-axis aggregation.
//
// One JSON object per sample, all keys required, no others allowed:
//   global_analysis   string
//   rhythmic_sync, theme_coherence, emotion_alignment, cultural_relevance,
//   temporal_dynamics, instrumentation_fit, overall_alignment
//                     integer in 1..5
//   video_theme, audio_theme, video_emotion, audio_emotion
//                     single word (non-empty, no whitespace)

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace robin {

inline constexpr std::size_t kJudgeAxes = 7;
inline constexpr std::array<std::string_view, kJudgeAxes> kJudgeAxisNames = {
    "rhythmic_sync",      "theme_coherence",     "emotion_alignment", "cultural_relevance",
    "temporal_dynamics",  "instrumentation_fit", "overall_alignment"};

struct JudgeReport {
  std::string global_analysis;
  std::array<int, kJudgeAxes> scores{};
  std::string video_theme;
  std::string audio_theme;
  std::string video_emotion;
  std::string audio_emotion;
};

/// Throws DataError whose message names the offending field.
JudgeReport parse_judge(std::string_view json_text);

/// Per-axis arithmetic means, in kJudgeAxisNames order.
std::array<double, kJudgeAxes> aggregate_judges(const std::vector<JudgeReport>& reports);

/// Fixed three-decimal rendering used in reports.
std::string format_mean(double value);

}  // namespace robin
