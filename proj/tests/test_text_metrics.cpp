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

#include "attnscene.hpp"
#include "oracles.hpp"

using namespace attnscene;

namespace {
Tokens t(std::string_view s) { return split_words(s); }
}  // namespace

TEST(Normalize, Pipeline) {
  EXPECT_EQ(normalize_text("The Speaker says: Hello,   WORLD!"), t("hello world"));
  EXPECT_EQ(normalize_text("Transcription: spoken text: a b"), t("a b"));
  EXPECT_EQ(normalize_text("It's fine", {}), t("it s fine"));
  EXPECT_TRUE(normalize_text("...", {}).empty());
}

TEST(Wer, Examples) {
  EXPECT_EQ(wer(t("a b c"), t("a b c")), 0.0);
  EXPECT_NEAR(wer(t("a x c"), t("a b c")), 100.0 / 3.0, 1e-12);
  EXPECT_EQ(wer({}, t("a b c")), 100.0);
  EXPECT_EQ(wer(t("a b c d e f"), t("a")), 500.0);
  EXPECT_THROW(wer(t("a"), {}), InvalidArgument);
}

TEST(Wer, MatchesRecursiveOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto h = oracle::random_tokens(rng, 8, 4);
    const auto r = oracle::random_tokens(rng, 8, 4);
    ASSERT_EQ(edit_distance(h, r), oracle::edit_distance_recursive(h, r));
  }
}

TEST(Lcs, MatchesExponentialOracle) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::random_tokens(rng, 10, 3);
    const auto b = oracle::random_tokens(rng, 10, 3);
    ASSERT_EQ(lcs_length(a, b), oracle::lcs_recursive(a, b));
  }
}

TEST(Bleu, Examples) {
  EXPECT_NEAR(bleu(t("the cat sat on the mat"), t("the cat sat on the mat")), 100.0, 1e-9);
  EXPECT_EQ(bleu(t("x y z w"), t("a b c d")), 0.0);
  EXPECT_EQ(bleu({}, t("a b c d")), 0.0);
  EXPECT_THROW(bleu(t("a"), {}), InvalidArgument);
}

TEST(Bleu, MatchesNgramCounting) {
  std::mt19937_64 rng(3);
  int nonzero = 0;
  for (int i = 0; i < 300; ++i) {
    const auto h = oracle::random_tokens(rng, 12, 3);
    const auto r = oracle::random_tokens(rng, 12, 3);
    if (r.empty()) continue;
    double log_p = 0.0;
    bool zero = h.empty();
    for (std::size_t n = 1; n <= 4 && !zero; ++n) {
      const auto [m, tot] = oracle::ngram_matches(h, r, n);
      if (m == 0 || tot == 0) zero = true;
      else log_p += std::log(static_cast<double>(m) / static_cast<double>(tot)) / 4.0;
    }
    double expect = 0.0;
    if (!zero) {
      const double bp = h.size() > r.size()
                            ? 1.0
                            : std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(h.size()));
      expect = 100.0 * bp * std::exp(log_p);
      ++nonzero;
    }
    ASSERT_NEAR(bleu(h, r), expect, 1e-9);
  }
  EXPECT_GT(nonzero, 10);
}

TEST(Bleu, HandComputedBigramCase) {
  // hyp "a b a b c", ref "a b c a b": unigram 5/5, bigram 3/4 (ab x2 clipped
  // to 2, bc 1; "ba" unmatched), trigram 1/3, 4-gram 0/2 -> BLEU 0.
  const auto h = t("a b a b c"), r = t("a b c a b");
  EXPECT_EQ(oracle::ngram_matches(h, r, 2).first, 3u);
  EXPECT_EQ(bleu(h, r), 0.0);
  const auto c = bleu_counts(h, r);
  EXPECT_EQ(c.matches[0], 5u);
  EXPECT_EQ(c.matches[1], 3u);
  EXPECT_EQ(c.totals[1], 4u);
  EXPECT_EQ(c.matches[2], 1u);
  EXPECT_EQ(c.matches[3], 0u);
}

TEST(RougeL, Examples) {
  EXPECT_NEAR(rouge_l(t("a b c"), t("a b c")), 100.0, 1e-12);
  EXPECT_EQ(rouge_l(t("x y"), t("a b c")), 0.0);
  // LCS 2, R = 2/3, P = 2/4.
  const double r = 2.0 / 3.0, p = 0.5, b2 = 1.44;
  EXPECT_NEAR(rouge_l(t("a q c z"), t("a b c")), 100.0 * (1 + b2) * r * p / (r + b2 * p), 1e-12);
  const std::vector<Tokens> refs = {t("x y z"), t("a q c z")};
  EXPECT_NEAR(rouge_l(t("a q c z"), refs), 100.0, 1e-12);
}

TEST(Meteor, ZeroAndChunkPenalty) {
  EXPECT_EQ(meteor_lite(t("x y"), t("a b")), 0.0);
  // One chunk of four matches: penalty 0.5 * (1/4)^3.
  const double one = 100.0 * (1.0 - 0.5 * std::pow(1.0 / 4.0, 3.0));
  EXPECT_NEAR(meteor_lite(t("a b c d"), t("a b c d")), one, 1e-12);
  // "c d a b" aligns as two chunks: penalty 0.5 * (2/4)^3.
  const double two = 100.0 * (1.0 - 0.5 * std::pow(2.0 / 4.0, 3.0));
  EXPECT_NEAR(meteor_lite(t("c d a b"), t("a b c d")), two, 1e-12);
  EXPECT_NEAR(one - two, 5.46875, 1e-9);
  const auto al = meteor_align(t("c d a b"), t("a b c d"));
  EXPECT_EQ(al.matches, 4u);
  EXPECT_EQ(al.chunks, 2u);
}

TEST(Meteor, IdenticalStringsApproachHundred) {
  // The fragmentation penalty never vanishes for a single chunk, so identical
  // strings score 100 * (1 - 0.5 / n^3).
  Tokens long_ref;
  for (int i = 0; i < 30; ++i) long_ref.push_back("w" + std::to_string(i));
  EXPECT_GT(meteor_lite(long_ref, long_ref), 99.99);
  EXPECT_LT(meteor_lite(long_ref, long_ref), 100.0);
}

TEST(Description, CanonicalParseAllCombinations) {
  for (Gender g : {Gender::Male, Gender::Female})
    for (Level p : {Level::Low, Level::Normal, Level::High})
      for (Level s : {Level::Low, Level::Normal, Level::High}) {
        const SpeakerAttributes a{g, p, s};
        const auto got = parse_description(describe(a));
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(got->gender, g);
        EXPECT_EQ(got->pitch, p);
        EXPECT_EQ(got->tempo, s);
      }
}

TEST(Description, Accuracy) {
  const SpeakerAttributes truth{Gender::Female, Level::High, Level::Normal};
  auto d = description_accuracy("A female speaker with high pitch and normal tempo.", truth);
  EXPECT_TRUE(d.gender && d.pitch && d.tempo);
  d = description_accuracy("A male speaker with high pitch and normal tempo.", truth);
  EXPECT_FALSE(d.gender);
  EXPECT_TRUE(d.pitch && d.tempo);
  d = description_accuracy("no idea", truth);
  EXPECT_FALSE(d.parsed || d.gender || d.pitch || d.tempo);
}

TEST(Closeness, TiesFailAndDirection) {
  const std::vector<double> tgt = {10, 20, 30}, oth = {20, 20, 10};
  EXPECT_NEAR(closeness_rate(tgt, oth, true), 100.0 / 3.0, 1e-12);
  EXPECT_NEAR(closeness_rate(tgt, oth, false), 100.0 / 3.0, 1e-12);
  const std::vector<Tokens> answers = {t("a b c"), t("a b")};
  const std::vector<std::vector<Tokens>> target = {{t("a b c")}, {t("x y")}};
  const std::vector<std::vector<Tokens>> other = {{t("q")}, {t("x y")}};
  const auto metric = [](const Tokens& h, const Tokens& r) { return rouge_l(h, r); };
  EXPECT_NEAR(closeness_rate(answers, target, other, metric, false), 50.0, 1e-12);
}

TEST(Closeness, MatchesPerTrialOracle) {
  std::mt19937_64 rng(5);
  std::vector<Tokens> answers;
  std::vector<std::vector<Tokens>> target, other;
  std::size_t closer = 0;
  for (int i = 0; i < 100; ++i) {
    auto a = oracle::random_tokens(rng, 6, 3);
    auto r1 = oracle::random_tokens(rng, 6, 3), r2 = oracle::random_tokens(rng, 6, 3);
    if (r1.empty()) r1 = {"w0"};
    if (r2.empty()) r2 = {"w1"};
    const double w1 = 100.0 * static_cast<double>(oracle::edit_distance_recursive(a, r1)) / r1.size();
    const double w2 = 100.0 * static_cast<double>(oracle::edit_distance_recursive(a, r2)) / r2.size();
    closer += w1 < w2;
    answers.push_back(a);
    target.push_back({r1});
    other.push_back({r2});
  }
  const auto metric = [](const Tokens& h, const Tokens& r) { return wer(h, r); };
  EXPECT_NEAR(closeness_rate(answers, target, other, metric, true), static_cast<double>(closer),
              1e-9);
}
