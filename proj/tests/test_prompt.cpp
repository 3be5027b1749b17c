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

#include <gtest/gtest.h>

#include <cstdio>

#include "attnscene.hpp"

using namespace attnscene;

namespace {

/// Template text with the three integers substituted, built independently of
/// the library.
std::string cot_template(int a, int s1, int s2) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "Attention:%d;\nSpk1:%d; Spk2:%d;", a, s1, s2);
  return buf;
}

SpeakerEmbedding voice(double f0, double spw, std::uint64_t timbre) {
  SourceSpec s;
  s.f0_hz = f0;
  s.seconds_per_word = spw;
  s.timbre_seed = timbre;
  s.words = {"x"};
  return embed_speaker(s, 16);
}

OracleSceneRecord record() {
  OracleSceneRecord r;
  r.streams[0] = {"rain cloud storm", {Gender::Male, Level::Low, Level::Normal},
                  {"About the weather.", "Weather talk."},
                  {{"Topic?", "The weather."}, {"First?", "Rain."}},
                  voice(110.0, 0.3, 1)};
  r.streams[1] = {"oven bread salt", {Gender::Female, Level::High, Level::High},
                  {"About cooking.", "Cooking talk."},
                  {{"Topic?", "Cooking."}, {"First?", "Oven."}},
                  voice(230.0, 0.22, 2)};
  return r;
}

TaskQuery query(TaskKind task, Target target, int qa_index = -1) {
  TaskQuery q;
  q.task = task;
  q.target = target;
  q.question_text = task == TaskKind::FreeQa ? "Topic?" : question_pool(task, target)[0];
  q.qa_index = qa_index;
  return q;
}

PromptBundle bundle(const TaskQuery& q, int attention, std::array<int, 2> labels,
                    const SpeakerEmbedding& centroid) {
  return build_prompt(q, {StreamSlot{"rain cloud storm", labels[0]},
                          StreamSlot{"oven bread salt", labels[1]}},
                      attention, centroid, 8);
}

}  // namespace

TEST(Cot, AllTriplesByteExactAndRoundTrip) {
  int n = 0;
  for (int a = 0; a < 8; ++a)
    for (int s1 = 0; s1 < 8; ++s1)
      for (int s2 = 0; s2 < 8; ++s2) {
        const std::string prefix = build_cot_prefix(a, s1, s2, 8);
        ASSERT_EQ(prefix, cot_template(a, s1, s2));
        const auto out = parse_output(prefix + "\nanswer text", 8);
        ASSERT_TRUE(out.cot.has_value());
        ASSERT_EQ(*out.cot, (CotLabels{a, s1, s2}));
        ASSERT_EQ(out.answer_text, "answer text");
        ++n;
      }
  EXPECT_EQ(n, 512);
}

TEST(Cot, RangeChecked) {
  EXPECT_THROW(build_cot_prefix(8, 0, 0, 8), InvalidArgument);
  EXPECT_THROW(build_cot_prefix(0, -1, 0, 8), InvalidArgument);
}

TEST(ParseOutput, MissingAndOutOfRange) {
  auto out = parse_output("just an answer", 8);
  EXPECT_FALSE(out.cot.has_value());
  EXPECT_FALSE(out.parse_error);
  EXPECT_EQ(out.answer_text, "just an answer");
  out = parse_output("Attention:9;\nSpk1:1; Spk2:2; rest", 8);
  EXPECT_FALSE(out.cot.has_value());
  EXPECT_TRUE(out.parse_error);
  EXPECT_EQ(out.answer_text, "rest");
  out = parse_output("  Attention: 3; Spk1: 4;  Spk2: 5;\n\n body", 8);
  ASSERT_TRUE(out.cot.has_value());
  EXPECT_EQ(*out.cot, (CotLabels{3, 4, 5}));
  EXPECT_EQ(out.answer_text, "body");
  out = parse_output("Attention:99999999999999999999;\nSpk1:1; Spk2:2;", 8);
  EXPECT_TRUE(out.parse_error);
}

TEST(BuildPrompt, LayoutAndSerialization) {
  const auto q = query(TaskKind::Transcription, Target::Foreground);
  const auto c = voice(120.0, 0.3, 9);
  const auto b = bundle(q, 3, {3, 5}, c);
  EXPECT_EQ(b.system_text, "You are a helpful assistant.");
  EXPECT_EQ(b.attention_serialization, "Attention label: 3 (voice: low, male)");
  EXPECT_EQ(b.user_text,
            "Attention: Attention label: 3 (voice: low, male)\nAudio 1: rain cloud storm\n"
            "Audio 2: oven bread salt\nQuestion: " + q.question_text + "\nSolution:");
  EXPECT_EQ(b.expected_cot(), cot_template(3, 3, 5));
  EXPECT_THROW(bundle(q, 8, {3, 5}, c), InvalidArgument);
  EXPECT_EQ(serialize_intention(1, voice(230.0, 0.3, 1)), "Attention label: 1 (voice: high, female)");
}

TEST(QuestionPool, EightPerPoolAndFreeQaRejected) {
  for (TaskKind t : {TaskKind::Description, TaskKind::Transcription, TaskKind::Summarization})
    for (Target g : kAllTargets) {
      const auto& pool = question_pool(t, g);
      EXPECT_EQ(pool.size(), 8u);
      for (const auto& s : pool) EXPECT_FALSE(s.empty());
    }
  EXPECT_THROW(question_pool(TaskKind::FreeQa, Target::Foreground), InvalidArgument);
}

TEST(MockRespond, ForegroundAnswersAreReferences) {
  const auto rec = record();
  const auto c = voice(230.0, 0.22, 2);
  // Stream 2 carries label 6, the attention label.
  auto b = bundle(query(TaskKind::Transcription, Target::Foreground), 6, {2, 6}, c);
  auto out = mock_respond(b, rec);
  EXPECT_EQ(out.answer_text, "oven bread salt");
  EXPECT_EQ(out.answered_stream, 1);
  EXPECT_EQ(out.raw_text, cot_template(6, 2, 6) + "\noven bread salt");
  EXPECT_FALSE(out.label_unresolved);

  b = bundle(query(TaskKind::Description, Target::Background), 6, {2, 6}, c);
  EXPECT_EQ(mock_respond(b, rec).answer_text, "A male speaker with low pitch and normal tempo.");
  b = bundle(query(TaskKind::Summarization, Target::Foreground), 6, {2, 6}, c);
  EXPECT_EQ(mock_respond(b, rec).answer_text, "About cooking.");
  b = bundle(query(TaskKind::FreeQa, Target::Foreground, 1), 6, {2, 6}, c);
  EXPECT_EQ(mock_respond(b, rec).answer_text, "Oven.");
}

TEST(MockRespond, UnmatchedLabelFallsBackToNearest) {
  const auto rec = record();
  const auto near_first = voice(112.0, 0.3, 1);
  const auto b = bundle(query(TaskKind::Transcription, Target::Foreground), 4, {2, 6}, near_first);
  const auto out = mock_respond(b, rec);
  EXPECT_TRUE(out.label_unresolved);
  EXPECT_EQ(out.answered_stream, 0);
}

TEST(MockRespond, PureAndWordingIndependent) {
  const auto rec = record();
  const auto c = voice(230.0, 0.22, 2);
  for (Target g : kAllTargets) {
    int stream = -1;
    for (const auto& text : question_pool(TaskKind::Summarization, g)) {
      auto q = query(TaskKind::Summarization, g);
      q.question_text = text;
      const auto b = bundle(q, 6, {2, 6}, c);
      const auto x = mock_respond(b, rec), y = mock_respond(b, rec);
      EXPECT_EQ(x.raw_text, y.raw_text);
      if (stream < 0) stream = x.answered_stream;
      EXPECT_EQ(x.answered_stream, stream);
    }
  }
}
