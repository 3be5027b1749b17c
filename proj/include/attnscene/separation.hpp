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

#include "attnscene/audio_scene.hpp"
#include "attnscene/speaker_space.hpp"

namespace attnscene {

/// Reported in place of +inf (perfect reconstruction) and -inf.
inline constexpr double kMetricCapDb = 100.0;

struct QualityProfile {
  enum class Kind { Oracle, Degraded };
  Kind kind = Kind::Oracle;
  double si_sdr_db = 10.0;  // target per-stream SI-SDR when degraded

  static QualityProfile oracle() { return {}; }
  static QualityProfile degraded(double db) { return {Kind::Degraded, db}; }
};

/// Two candidate streams in presentation order. `swapped` is true when
/// stream 1 carries talker B.
struct SeparatedStreams {
  AudioSignal s1, s2;
  std::uint64_t order_seed = 0;
  QualityProfile profile;
  bool swapped = false;

  const AudioSignal& stream(int i) const { return i == 0 ? s1 : s2; }
  Talker source_of(int i) const {
    const bool first_is_a = !swapped;
    return (i == 0) == first_is_a ? Talker::A : Talker::B;
  }
  int index_of(Talker t) const { return source_of(0) == t ? 0 : 1; }
};

namespace sep_detail {
inline double sq_norm(std::span<const double> x) { return dot(x, x); }
inline double clamp_db(double v) { return std::clamp(v, -kMetricCapDb, kMetricCapDb); }
}  // namespace sep_detail

/// 10*log10(|ref|^2 / |est - ref|^2), estimate first.
inline double snr(const AudioSignal& est, const AudioSignal& ref) {
  require(est.size() == ref.size(), "snr: length mismatch");
  const auto e = est.samples(), r = ref.samples();
  double err = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) err += (e[i] - r[i]) * (e[i] - r[i]);
  if (err == 0.0) return kMetricCapDb;
  const double sig = sep_detail::sq_norm(r);
  if (sig == 0.0) return -kMetricCapDb;
  return sep_detail::clamp_db(10.0 * std::log10(sig / err));
}

/// Scale-invariant SDR: the estimate is projected onto the reference and the
/// projection is compared with the residual.
inline double si_sdr(const AudioSignal& est, const AudioSignal& ref) {
  require(est.size() == ref.size(), "si_sdr: length mismatch");
  const auto e = est.samples(), r = ref.samples();
  const double rr = sep_detail::sq_norm(r);
  require(rr > 0.0, "si_sdr: reference has zero energy");
  const double alpha = dot(e, r) / rr;
  double target = 0.0, resid = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double s = alpha * r[i];
    target += s * s;
    resid += (e[i] - s) * (e[i] - s);
  }
  if (resid == 0.0) return kMetricCapDb;
  if (target == 0.0) return -kMetricCapDb;
  return sep_detail::clamp_db(10.0 * std::log10(target / resid));
}

/// Cosine similarity; a zero vector gives 0.
inline double speaker_similarity(const SpeakerEmbedding& est, const SpeakerEmbedding& ref) {
  require(est.dim() == ref.dim(), "speaker_similarity: dimension mismatch");
  const double n = est.values.norm() * ref.values.norm();
  if (n == 0.0) return 0.0;
  return est.values.dot(ref.values) / n;
}

/// Crosstalk gain g such that si_sdr(own + g*other, own) equals `target_db`.
inline double crosstalk_gain(const AudioSignal& own, const AudioSignal& other, double target_db) {
  const auto a = own.samples(), b = other.samples();
  const double paa = sep_detail::sq_norm(a);
  const double rho = dot(a, b) / paa;
  double perp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = b[i] - rho * a[i];
    perp += r * r;
  }
  if (perp <= 0.0) throw DegenerateInput("separate: crosstalk source is collinear with target");
  const double ratio = std::pow(10.0, target_db / 10.0);
  const double denom = std::sqrt(ratio * perp) - rho * std::sqrt(paa);
  if (denom <= 0.0) throw DegenerateInput("separate: requested SI-SDR unreachable with crosstalk");
  return std::sqrt(paa) / denom;
}

/// Intention-uninformed separator. It only ever sees the raw components, so
/// it cannot depend on which talker is attended.
///   oracle:       stream_i = source_i + noise / 2
///   degraded(q):  stream_i = source_i + g_i * source_other, g_i set so the
///                 stream's SI-SDR against its own source is q dB.
inline SeparatedStreams separate(const AudioSignal& source_a, const AudioSignal& source_b,
                                 const AudioSignal& noise, const QualityProfile& profile,
                                 std::uint64_t order_seed) {
  require(source_a.size() == source_b.size() && source_a.size() == noise.size(),
          "separate: component lengths differ");
  AudioSignal sa, sb;
  if (profile.kind == QualityProfile::Kind::Oracle) {
    const AudioSignal half = noise.scaled(0.5);
    sa = source_a + half;
    sb = source_b + half;
  } else {
    sa = source_a + source_b.scaled(crosstalk_gain(source_a, source_b, profile.si_sdr_db));
    sb = source_b + source_a.scaled(crosstalk_gain(source_b, source_a, profile.si_sdr_db));
  }
  Rng rng(order_seed);
  SeparatedStreams out;
  out.order_seed = order_seed;
  out.profile = profile;
  out.swapped = (rng() & 1ULL) != 0;
  out.s1 = out.swapped ? std::move(sb) : std::move(sa);
  out.s2 = out.swapped ? std::move(sa) : std::move(sb);
  return out;
}

inline SeparatedStreams separate(const Scene& scene, const QualityProfile& profile,
                                 std::uint64_t order_seed) {
  return separate(scene.source_a, scene.source_b, scene.noise, profile, order_seed);
}

/// Index (0 or 1) of the candidate embedding nearest to `intention`; ties -> 0.
inline int nearest_candidate(const SpeakerEmbedding& intention,
                             const std::array<SpeakerEmbedding, 2>& candidates) {
  for (const auto& c : candidates)
    require(c.dim() == intention.dim(), "nearest_candidate: dimension mismatch");
  const double d0 = (candidates[0].values - intention.values).norm();
  const double d1 = (candidates[1].values - intention.values).norm();
  return d1 < d0 ? 1 : 0;
}

struct StreamChoice {
  int index = 0;  // 0 or 1, presentation order
  Talker source = Talker::A;
  std::array<double, 2> distance{};
};

/// Picks the stream whose embedding is nearest (Euclidean) to the intention
/// centroid; ties go to the first stream.
inline StreamChoice select_stream(const SeparatedStreams& streams, const SpeakerEmbedding& intention,
                                  const std::array<SpeakerEmbedding, 2>& stream_embeddings) {
  StreamChoice c;
  for (int i = 0; i < 2; ++i) {
    require(stream_embeddings[i].dim() == intention.dim(), "select_stream: dimension mismatch");
    c.distance[i] = (stream_embeddings[i].values - intention.values).norm();
  }
  c.index = c.distance[1] < c.distance[0] ? 1 : 0;
  c.source = streams.source_of(c.index);
  return c;
}

}  // namespace attnscene
