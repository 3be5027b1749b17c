// Copyright 2026 The attnscene Authors
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

#pragma once

#include <optional>
#include <regex>

#include "attnscene/separation.hpp"
#include "attnscene/speaker_space.hpp"
#include "attnscene/text_metrics.hpp"

namespace attnscene {

enum class TaskKind { Description, Transcription, Summarization, FreeQa };
enum class Target { Foreground, Background };

inline constexpr std::array<TaskKind, 4> kAllTasks = {TaskKind::Description, TaskKind::Transcription,
                                                      TaskKind::Summarization, TaskKind::FreeQa};
inline constexpr std::array<Target, 2> kAllTargets = {Target::Foreground, Target::Background};

inline const char* to_string(TaskKind t) {
  switch (t) {
    case TaskKind::Description: return "description";
    case TaskKind::Transcription: return "transcription";
    case TaskKind::Summarization: return "summarization";
    case TaskKind::FreeQa: return "free_qa";
  }
  return "?";
}
inline const char* to_string(Target t) { return t == Target::Foreground ? "foreground" : "background"; }

inline TaskKind task_from_string(std::string_view s) {
  for (TaskKind t : kAllTasks)
    if (s == to_string(t)) return t;
  throw InvalidArgument("unknown task '" + std::string(s) + "'");
}

struct QaPair {
  std::string question;
  std::string answer;
};

struct TaskQuery {
  TaskKind task = TaskKind::Description;
  Target target = Target::Foreground;
  std::string question_text;
  std::vector<std::string> references;  // for the target talker
  int qa_index = -1;                    // free_qa: which scripted pair was asked
};

inline constexpr std::size_t kQuestionsPerPool = 8;

/// Fixed question pools, eight per (task, target). Free Q&A questions are
/// scripted per scene instead.
inline const std::array<std::string, kQuestionsPerPool>& question_pool(TaskKind task, Target target) {
  static const std::array<std::string, kQuestionsPerPool> describe_fg = {
      "Describe the attended speaker.",
      "Please write a description of the attended speaker.",
      "Can you identify the person the subject is listening to?",
      "What does the voice the listener is focusing on sound like?",
      "Characterize the speaker the listener is paying attention to.",
      "Give the gender, pitch and tempo of the attended talker.",
      "Who is the listener attending to? Describe their voice.",
      "Describe the voice of the foreground speaker."};
  static const std::array<std::string, kQuestionsPerPool> describe_bg = {
      "Describe the ignored speaker.",
      "Please write a description of the unattended speaker.",
      "Can you identify the person the subject is not listening to?",
      "What does the background voice sound like?",
      "Characterize the speaker the listener is ignoring.",
      "Give the gender, pitch and tempo of the unattended talker.",
      "Who is the listener tuning out? Describe their voice.",
      "Describe the voice of the background speaker."};
  static const std::array<std::string, kQuestionsPerPool> transcribe_fg = {
      "Transcribe the speech of the attended speaker.",
      "What exactly is the attended speaker saying?",
      "Write down the words of the speaker the listener is focusing on.",
      "Please transcribe the foreground speech.",
      "Give a verbatim transcript of the talker being attended.",
      "What are the words spoken by the person the subject is listening to?",
      "Convert the attended speech to text.",
      "Transcribe what the listener is paying attention to."};
  static const std::array<std::string, kQuestionsPerPool> transcribe_bg = {
      "Transcribe the speech of the ignored speaker.",
      "What exactly is the unattended speaker saying?",
      "Write down the words of the speaker the listener is ignoring.",
      "Please transcribe the background speech.",
      "Give a verbatim transcript of the talker being ignored.",
      "What are the words spoken by the person the subject is not listening to?",
      "Convert the unattended speech to text.",
      "Transcribe what the listener is tuning out."};
  static const std::array<std::string, kQuestionsPerPool> summarize_fg = {
      "What is the attended speaker talking about?",
      "Can you summarize the speech of the speaker being attended?",
      "What topic is the foreground speaker discussing?",
      "Summarize what the listener is focusing on.",
      "Give a short summary of the attended speech.",
      "What is the gist of what the attended talker says?",
      "Briefly, what does the speaker the subject listens to talk about?",
      "Please summarize the foreground speech."};
  static const std::array<std::string, kQuestionsPerPool> summarize_bg = {
      "What is the background speaker talking about?",
      "Can you summarize the speech of the speaker being ignored?",
      "What topic is the background speaker discussing?",
      "Summarize what the listener is tuning out.",
      "Give a short summary of the unattended speech.",
      "What is the gist of what the ignored talker says?",
      "Briefly, what does the speaker the subject ignores talk about?",
      "Please summarize the background speech."};
  const bool fg = target == Target::Foreground;
  switch (task) {
    case TaskKind::Description: return fg ? describe_fg : describe_bg;
    case TaskKind::Transcription: return fg ? transcribe_fg : transcribe_bg;
    case TaskKind::Summarization: return fg ? summarize_fg : summarize_bg;
    case TaskKind::FreeQa: break;
  }
  throw InvalidArgument("free_qa questions come from the scene record, not a fixed pool");
}

// ---------------------------------------------------------------------------
// Chain-of-thought prefix

struct CotLabels {
  int attention = 0;
  int spk1 = 0;
  int spk2 = 0;
  friend bool operator==(const CotLabels&, const CotLabels&) = default;
};

/// "Attention:<a>;\nSpk1:<s1>; Spk2:<s2>;"
inline std::string build_cot_prefix(int attention, int spk1, int spk2, int k) {
  for (int v : {attention, spk1, spk2})
    require(v >= 0 && v < k, "build_cot_prefix: label " + std::to_string(v) +
                                 " outside [0, " + std::to_string(k) + ")");
  return "Attention:" + std::to_string(attention) + ";\nSpk1:" + std::to_string(spk1) +
         "; Spk2:" + std::to_string(spk2) + ";";
}

/// Regular grammar accepted by parse_output (whitespace-tolerant superset of
/// the canonical byte form).
inline constexpr const char* kCotGrammar =
    R"(^\s*Attention:\s*(\d+);\s*Spk1:\s*(\d+);\s*Spk2:\s*(\d+);)";

struct ModelOutput {
  std::string raw_text;
  std::optional<CotLabels> cot;
  std::string answer_text;
  bool parse_error = false;       // prefix present but labels out of range
  bool label_unresolved = false;  // mock: attention label matched neither stream
  int answered_stream = -1;       // mock: which stream the answer is about
};

inline ModelOutput parse_output(const std::string& raw, int k) {
  static const std::regex re(kCotGrammar);
  ModelOutput out;
  out.raw_text = raw;
  std::smatch m;
  if (!std::regex_search(raw, m, re)) {
    out.answer_text = raw;
    return out;
  }
  std::string rest = m.suffix().str();
  const auto first = rest.find_first_not_of(" \t\r\n");
  out.answer_text = first == std::string::npos ? std::string{} : rest.substr(first);
  std::array<long long, 3> v{};
  bool in_range = true;
  for (int i = 0; i < 3; ++i) {
    const std::string digits = m[i + 1].str();
    if (digits.size() > 9) {
      in_range = false;
      continue;
    }
    v[i] = std::stoll(digits);
    in_range = in_range && v[i] < k;
  }
  if (!in_range) {
    out.parse_error = true;
    return out;
  }
  out.cot = CotLabels{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
  return out;
}

// ---------------------------------------------------------------------------
// Prompt assembly

inline constexpr const char* kSystemPrompt = "You are a helpful assistant.";
inline constexpr double kGenderPriorSplitHz = 165.0;

/// Text stand-in for the intention vector: label plus the voice class the
/// centroid's prosodic coordinates imply.
inline std::string serialize_intention(int label, const SpeakerEmbedding& centroid) {
  const double f0 = implied_f0_hz(centroid);
  return "Attention label: " + std::to_string(label) + " (voice: " + to_string(pitch_class(f0)) +
         ", " + (f0 < kGenderPriorSplitHz ? "male" : "female") + ")";
}

/// What one audio slot of the prompt carries.
struct StreamSlot {
  std::string content;  // transcript text or an audio reference
  int label = 0;        // cluster label of the stream's voice
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::string attention_serialization;
  std::array<std::string, 2> stream_summaries;
  std::string question_text;
  std::string cot_grammar;
  int k = 0;
  int attention_label = 0;
  std::array<int, 2> stream_labels{};
  SpeakerEmbedding attention_centroid;
  TaskQuery query;

  std::string expected_cot() const {
    return build_cot_prefix(attention_label, stream_labels[0], stream_labels[1], k);
  }
};

inline PromptBundle build_prompt(const TaskQuery& query, const std::array<StreamSlot, 2>& streams,
                                 int attention_label, const SpeakerEmbedding& centroid, int k) {
  require(attention_label >= 0 && attention_label < k, "build_prompt: attention label out of range");
  for (const auto& s : streams)
    require(s.label >= 0 && s.label < k, "build_prompt: stream label out of range");
  PromptBundle b;
  b.system_text = kSystemPrompt;
  b.attention_serialization = serialize_intention(attention_label, centroid);
  b.stream_summaries = {streams[0].content, streams[1].content};
  b.question_text = query.question_text;
  b.cot_grammar = kCotGrammar;
  b.k = k;
  b.attention_label = attention_label;
  b.stream_labels = {streams[0].label, streams[1].label};
  b.attention_centroid = centroid;
  b.query = query;
  b.user_text = "Attention: " + b.attention_serialization + "\nAudio 1: " + streams[0].content +
                "\nAudio 2: " + streams[1].content + "\nQuestion: " + query.question_text +
                "\nSolution:";
  return b;
}

// ---------------------------------------------------------------------------
// Deterministic mock backend

/// Ground truth the mock answers from, one entry per stream in presentation order.
struct StreamRecord {
  std::string transcript;
  SpeakerAttributes attrs;
  std::vector<std::string> summaries;
  std::vector<QaPair> qa;
  SpeakerEmbedding embedding;
};

struct OracleSceneRecord {
  std::array<StreamRecord, 2> streams;
};

/// Emits the CoT prefix from the bundle's labels, then answers about the
/// stream whose label matches the attention label (foreground) or the other
/// one (background). No match or a double match falls back to the stream
/// nearest the intention centroid.
inline ModelOutput mock_respond(const PromptBundle& bundle, const OracleSceneRecord& record) {
  ModelOutput out;
  const bool m0 = bundle.stream_labels[0] == bundle.attention_label;
  const bool m1 = bundle.stream_labels[1] == bundle.attention_label;
  int focus = 0;
  if (m0 != m1) {
    focus = m0 ? 0 : 1;
  } else {
    focus = nearest_candidate(bundle.attention_centroid,
                              {record.streams[0].embedding, record.streams[1].embedding});
    out.label_unresolved = !m0;
  }
  const int answered = bundle.query.target == Target::Foreground ? focus : 1 - focus;
  const StreamRecord& s = record.streams[static_cast<std::size_t>(answered)];

  std::string answer;
  switch (bundle.query.task) {
    case TaskKind::Description: answer = describe(s.attrs); break;
    case TaskKind::Transcription: answer = s.transcript; break;
    case TaskKind::Summarization:
      require(!s.summaries.empty(), "mock_respond: stream has no reference summary");
      answer = s.summaries.front();
      break;
    case TaskKind::FreeQa: {
      const int qi = bundle.query.qa_index;
      require(qi >= 0 && static_cast<std::size_t>(qi) < s.qa.size(),
              "mock_respond: free_qa index out of range");
      answer = s.qa[static_cast<std::size_t>(qi)].answer;
      break;
    }
  }
  out.raw_text = bundle.expected_cot() + "\n" + answer;
  out.cot = CotLabels{bundle.attention_label, bundle.stream_labels[0], bundle.stream_labels[1]};
  out.answer_text = answer;
  out.answered_stream = answered;
  return out;
}

}  // namespace attnscene
