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

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <sstream>

#include "attnscene/audio_scene.hpp"

namespace attnscene {

using Tokens = std::vector<std::string>;

/// Leading phrases removed before scoring. Compared after normalization.
inline std::vector<std::string> default_boilerplate_prefixes() {
  return {"the attended speaker is discussing about",
          "the attended speaking is discussing about",
          "the attended speaker is talking about",
          "spoken text",
          "transcription",
          "the speaker says"};
}

/// Splits on whitespace without other processing.
inline Tokens split_words(std::string_view text) {
  Tokens out;
  std::istringstream is{std::string(text)};
  for (std::string w; is >> w;) out.push_back(std::move(w));
  return out;
}

inline std::string join_words(const Tokens& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ' ';
    out += t[i];
  }
  return out;
}

/// lowercase -> punctuation to space -> collapse whitespace -> drop
/// boilerplate prefixes.
inline Tokens normalize_text(std::string_view text, const std::vector<std::string>& prefixes) {
  std::string s(text);
  for (char& ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    ch = std::ispunct(u) ? ' ' : static_cast<char>(std::tolower(u));
  }
  Tokens words = split_words(s);
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (const auto& p : prefixes) {
      std::string ps(p);
      for (char& ch : ps) {
        const auto u = static_cast<unsigned char>(ch);
        ch = std::ispunct(u) ? ' ' : static_cast<char>(std::tolower(u));
      }
      const Tokens pt = split_words(ps);
      if (!pt.empty() && pt.size() <= words.size() &&
          std::equal(pt.begin(), pt.end(), words.begin())) {
        words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(pt.size()));
        stripped = true;
      }
    }
  }
  return words;
}

inline Tokens normalize_text(std::string_view text) {
  return normalize_text(text, default_boilerplate_prefixes());
}

/// Word-level Levenshtein distance (unit costs).
inline std::size_t edit_distance(const Tokens& hyp, const Tokens& ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

/// Word error rate in percent; may exceed 100 for long hypotheses.
inline double wer(const Tokens& hyp, const Tokens& ref) {
  require(!ref.empty(), "wer: empty reference");
  return 100.0 * static_cast<double>(edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct BleuCounts {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

inline BleuCounts bleu_counts(const Tokens& hyp, const Tokens& ref) {
  BleuCounts c;
  c.hyp_len = hyp.size();
  c.ref_len = ref.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<Tokens, std::size_t> ref_grams, hyp_grams;
    for (std::size_t i = 0; i + n <= ref.size(); ++i)
      ++ref_grams[Tokens(ref.begin() + i, ref.begin() + i + n)];
    for (std::size_t i = 0; i + n <= hyp.size(); ++i)
      ++hyp_grams[Tokens(hyp.begin() + i, hyp.begin() + i + n)];
    for (const auto& [g, k] : hyp_grams) {
      const auto it = ref_grams.find(g);
      c.matches[n - 1] += std::min(k, it == ref_grams.end() ? 0 : it->second);
    }
    c.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
  }
  return c;
}

/// BLEU-4 over summed counts: uniform weights, brevity penalty, no smoothing.
inline double corpus_bleu(std::span<const BleuCounts> parts) {
  BleuCounts t;
  for (const auto& p : parts) {
    for (int n = 0; n < 4; ++n) {
      t.matches[n] += p.matches[n];
      t.totals[n] += p.totals[n];
    }
    t.hyp_len += p.hyp_len;
    t.ref_len += p.ref_len;
  }
  if (t.hyp_len == 0) return 0.0;
  double log_p = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (t.matches[n] == 0 || t.totals[n] == 0) return 0.0;
    log_p += 0.25 * std::log(static_cast<double>(t.matches[n]) / static_cast<double>(t.totals[n]));
  }
  const double bp = t.hyp_len > t.ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(t.ref_len) / static_cast<double>(t.hyp_len));
  return 100.0 * bp * std::exp(log_p);
}

inline double bleu(const Tokens& hyp, const Tokens& ref) {
  require(!ref.empty(), "bleu: empty reference");
  const BleuCounts c = bleu_counts(hyp, ref);
  return corpus_bleu(std::span<const BleuCounts>(&c, 1));
}

inline constexpr double kRougeBeta = 1.2;

/// LCS F-measure with recall weighted by beta = 1.2.
inline double rouge_l(const Tokens& hyp, const Tokens& ref) {
  require(!ref.empty(), "rouge_l: empty reference");
  if (hyp.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(hyp, ref));
  if (lcs == 0.0) return 0.0;
  const double r = lcs / static_cast<double>(ref.size());
  const double p = lcs / static_cast<double>(hyp.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return 100.0 * (1.0 + b2) * r * p / (r + b2 * p);
}

/// Best score over several references.
template <class Metric>
double best_over_references(Metric metric, const Tokens& hyp, const std::vector<Tokens>& refs) {
  require(!refs.empty(), "no references");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : refs) best = std::max(best, metric(hyp, r));
  return best;
}

inline double rouge_l(const Tokens& hyp, const std::vector<Tokens>& refs) {
  return best_over_references([](const Tokens& h, const Tokens& r) { return rouge_l(h, r); }, hyp,
                              refs);
}

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

/// Exact-match unigram alignment. Each hypothesis word takes the next unused
/// identical reference word, preferring the one that extends the current
/// chunk.
inline MeteorAlignment meteor_align(const Tokens& hyp, const Tokens& ref) {
  std::vector<bool> used(ref.size(), false);
  MeteorAlignment a;
  long prev_h = -2, prev_r = -2;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    long pick = -1;
    if (prev_h == static_cast<long>(i) - 1 && prev_r + 1 < static_cast<long>(ref.size()) &&
        prev_r >= 0 && !used[static_cast<std::size_t>(prev_r + 1)] &&
        ref[static_cast<std::size_t>(prev_r + 1)] == hyp[i])
      pick = prev_r + 1;
    for (std::size_t j = 0; pick < 0 && j < ref.size(); ++j)
      if (!used[j] && ref[j] == hyp[i]) pick = static_cast<long>(j);
    if (pick < 0) continue;
    used[static_cast<std::size_t>(pick)] = true;
    ++a.matches;
    if (!(prev_h == static_cast<long>(i) - 1 && prev_r == pick - 1)) ++a.chunks;
    prev_h = static_cast<long>(i);
    prev_r = pick;
  }
  return a;
}

inline constexpr double kMeteorAlpha = 0.9;
inline constexpr double kMeteorGamma = 0.5;
inline constexpr double kMeteorTheta = 3.0;

/// Reduced METEOR: exact matches only, no stemming or synonyms.
///   F = P R / (alpha P + (1 - alpha) R),  penalty = gamma (chunks / m)^theta
inline double meteor_lite(const Tokens& hyp, const Tokens& ref) {
  require(!ref.empty(), "meteor_lite: empty reference");
  const MeteorAlignment a = meteor_align(hyp, ref);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(hyp.size());
  const double r = m / static_cast<double>(ref.size());
  const double f = p * r / (kMeteorAlpha * p + (1.0 - kMeteorAlpha) * r);
  const double penalty = kMeteorGamma * std::pow(static_cast<double>(a.chunks) / m, kMeteorTheta);
  return 100.0 * f * (1.0 - penalty);
}

inline double meteor_lite(const Tokens& hyp, const std::vector<Tokens>& refs) {
  return best_over_references([](const Tokens& h, const Tokens& r) { return meteor_lite(h, r); },
                              hyp, refs);
}

struct DescriptionScore {
  bool gender = false, pitch = false, tempo = false;
  bool parsed = false;
  double mean() const { return (gender + pitch + tempo) / 3.0; }
};

/// Canonical description sentence.
inline std::string describe(const SpeakerAttributes& a) {
  return std::string("A ") + to_string(a.gender) + " speaker with " + to_string(a.pitch) +
         " pitch and " + to_string(a.tempo) + " tempo.";
}

inline std::optional<SpeakerAttributes> parse_description(std::string_view answer) {
  static const std::regex re(
      R"((male|female) speaker with (low|normal|high) pitch and (low|normal|high) tempo)");
  const std::string text = join_words(normalize_text(answer, {}));
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return SpeakerAttributes{gender_from_string(m[1].str()), level_from_string(m[2].str()),
                           level_from_string(m[3].str())};
}

inline DescriptionScore description_accuracy(std::string_view answer, const SpeakerAttributes& truth) {
  DescriptionScore s;
  const auto got = parse_description(answer);
  if (!got) return s;
  s.parsed = true;
  s.gender = got->gender == truth.gender;
  s.pitch = got->pitch == truth.pitch;
  s.tempo = got->tempo == truth.tempo;
  return s;
}

/// Percentage of trials whose score against the target beats the score
/// against the other talker. Ties count as failures.
inline double closeness_rate(std::span<const double> target_scores,
                             std::span<const double> other_scores, bool lower_is_better) {
  require(target_scores.size() == other_scores.size(), "closeness_rate: size mismatch");
  if (target_scores.empty()) return 0.0;
  std::size_t closer = 0;
  for (std::size_t i = 0; i < target_scores.size(); ++i)
    closer += lower_is_better ? target_scores[i] < other_scores[i]
                              : target_scores[i] > other_scores[i];
  return 100.0 * static_cast<double>(closer) / static_cast<double>(target_scores.size());
}

/// Scores each answer against both reference sets with `metric` (best over
/// references) and reports the closeness percentage.
template <class Metric>
double closeness_rate(const std::vector<Tokens>& answers,
                      const std::vector<std::vector<Tokens>>& target_refs,
                      const std::vector<std::vector<Tokens>>& other_refs, Metric metric,
                      bool lower_is_better) {
  require(answers.size() == target_refs.size() && answers.size() == other_refs.size(),
          "closeness_rate: size mismatch");
  std::vector<double> t, o;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    auto score = [&](const std::vector<Tokens>& refs) {
      double best = lower_is_better ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
      for (const auto& r : refs) {
        const double v = metric(answers[i], r);
        best = lower_is_better ? std::min(best, v) : std::max(best, v);
      }
      return best;
    };
    t.push_back(score(target_refs[i]));
    o.push_back(score(other_refs[i]));
  }
  return closeness_rate(t, o, lower_is_better);
}

}  // namespace attnscene
