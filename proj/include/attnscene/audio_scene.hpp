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
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "attnscene/core.hpp"

namespace attnscene {

/// A mono waveform. Samples are finite and non-empty; the rate is positive.
class AudioSignal {
 public:
  AudioSignal() = default;
  AudioSignal(std::vector<double> samples, int sample_rate_hz)
      : samples_(std::move(samples)), rate_(sample_rate_hz) {
    require(rate_ > 0, "AudioSignal: sample rate must be positive");
    require(!samples_.empty(), "AudioSignal: empty signal");
    require(all_finite(samples_), "AudioSignal: non-finite sample");
  }

  std::span<const double> samples() const { return samples_; }
  int sample_rate_hz() const { return rate_; }
  std::size_t size() const { return samples_.size(); }
  double duration_s() const { return static_cast<double>(samples_.size()) / rate_; }
  double power() const { return mean_power(samples_); }

  AudioSignal truncated(std::size_t n) const {
    require(n >= 1 && n <= samples_.size(), "AudioSignal::truncated: bad length");
    return AudioSignal(std::vector<double>(samples_.begin(), samples_.begin() + n), rate_);
  }
  AudioSignal scaled(double gain) const {
    std::vector<double> out(samples_);
    for (double& v : out) v *= gain;
    return AudioSignal(std::move(out), rate_);
  }

  friend bool operator==(const AudioSignal&, const AudioSignal&) = default;

 private:
  std::vector<double> samples_;
  int rate_ = 0;
};

inline AudioSignal operator+(const AudioSignal& a, const AudioSignal& b) {
  require(a.sample_rate_hz() == b.sample_rate_hz(), "signal sum: rate mismatch");
  require(a.size() == b.size(), "signal sum: length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.samples()[i] + b.samples()[i];
  return AudioSignal(std::move(out), a.sample_rate_hz());
}

enum class Gender { Male, Female };
enum class Level { Low, Normal, High };

inline const char* to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }
inline const char* to_string(Level l) {
  switch (l) {
    case Level::Low: return "low";
    case Level::Normal: return "normal";
    case Level::High: return "high";
  }
  return "normal";
}
inline Gender gender_from_string(std::string_view s) {
  if (s == "male") return Gender::Male;
  if (s == "female") return Gender::Female;
  throw InvalidArgument("unknown gender '" + std::string(s) + "'");
}
inline Level level_from_string(std::string_view s) {
  if (s == "low") return Level::Low;
  if (s == "normal") return Level::Normal;
  if (s == "high") return Level::High;
  throw InvalidArgument("unknown level '" + std::string(s) + "'");
}

/// Parameters of one synthetic talker.
struct SourceSpec {
  double f0_hz = 150.0;
  std::vector<std::string> words;
  double seconds_per_word = 0.3;
  std::uint64_t timbre_seed = 0;
  Gender gender = Gender::Male;

  void validate() const {
    require(f0_hz > 0.0, "SourceSpec: f0 must be positive");
    require(seconds_per_word > 0.0, "SourceSpec: seconds_per_word must be positive");
    require(!words.empty(), "SourceSpec: word list is empty");
  }
};

struct SpeakerAttributes {
  Gender gender = Gender::Male;
  Level pitch = Level::Normal;
  Level tempo = Level::Normal;
  friend bool operator==(const SpeakerAttributes&, const SpeakerAttributes&) = default;
};

// Label thresholds. Values exactly on a threshold are "normal".
inline constexpr double kLowPitchBelowHz = 136.6;
inline constexpr double kHighPitchAboveHz = 196.1;
inline constexpr double kSlowTempoAboveSpw = 0.39;
inline constexpr double kFastTempoBelowSpw = 0.25;

inline Level pitch_class(double f0_hz) {
  if (f0_hz < kLowPitchBelowHz) return Level::Low;
  if (f0_hz > kHighPitchAboveHz) return Level::High;
  return Level::Normal;
}

inline Level tempo_class(double seconds_per_word) {
  if (seconds_per_word > kSlowTempoAboveSpw) return Level::Low;
  if (seconds_per_word < kFastTempoBelowSpw) return Level::High;
  return Level::Normal;
}

inline SpeakerAttributes classify_attributes(const SourceSpec& spec) {
  return {spec.gender, pitch_class(spec.f0_hz), tempo_class(spec.seconds_per_word)};
}

/// Harmonic word-burst carrier. Each word occupies one slot of
/// `seconds_per_word`; the first 80% of the slot carries a Hann-shaped burst of
/// the f0 harmonic stack, the rest is silence. Output RMS is 1.
inline AudioSignal synthesize_source(const SourceSpec& spec, double duration_s, int rate_hz) {
  spec.validate();
  require(duration_s > 0.0, "synthesize_source: duration must be positive");
  require(rate_hz > 0, "synthesize_source: rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
  require(n >= 1, "synthesize_source: duration shorter than one sample");

  Rng timbre(spec.timbre_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int max_harmonics =
      std::max(1, std::min(10, static_cast<int>(0.45 * rate_hz / spec.f0_hz)));
  std::vector<double> amp(max_harmonics), phase(max_harmonics);
  for (int h = 0; h < max_harmonics; ++h) {
    amp[h] = h == 0 ? 1.0 : (0.3 + 0.7 * unit(timbre)) / (h + 1);
    phase[h] = 2.0 * std::numbers::pi * unit(timbre);
  }

  const double slot = spec.seconds_per_word;
  const double burst = 0.8 * slot;
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    const auto k = static_cast<std::size_t>(t / slot);
    const double in_slot = t - static_cast<double>(k) * slot;
    if (in_slot >= burst) continue;
    const std::string& word = spec.words[k % spec.words.size()];
    const double level =
        0.6 + 0.4 * static_cast<double>(mix_seed(stable_hash(word), spec.timbre_seed) >> 11) /
                  9007199254740992.0;
    const double win = std::sin(std::numbers::pi * in_slot / burst);
    double carrier = 0.0;
    for (int h = 0; h < max_harmonics; ++h)
      carrier += amp[h] * std::sin(2.0 * std::numbers::pi * (h + 1) * spec.f0_hz * t + phase[h]);
    x[i] = level * win * win * carrier;
  }
  const double rms = std::sqrt(mean_power(x));
  if (rms <= 0.0) throw DegenerateInput("synthesize_source: silent output");
  for (double& v : x) v /= rms;
  return AudioSignal(std::move(x), rate_hz);
}

/// Two talkers plus noise, mixed at a fixed source-to-noise ratio.
struct Scene {
  std::string scene_id;
  AudioSignal source_a, source_b, noise, mixture;
  Talker attended = Talker::A;
  SpeakerAttributes attrs_a, attrs_b;
  std::vector<std::string> transcript_a, transcript_b;
  double snr_db = 12.0;

  const AudioSignal& source(Talker t) const { return t == Talker::A ? source_a : source_b; }
  const SpeakerAttributes& attrs(Talker t) const { return t == Talker::A ? attrs_a : attrs_b; }
  const std::vector<std::string>& transcript(Talker t) const {
    return t == Talker::A ? transcript_a : transcript_b;
  }
};

/// Scales both sources to unit power and the noise to `10^(-snr_db/10)`, then
/// sums everything over the common length.
inline Scene mix_scene(const AudioSignal& a, const AudioSignal& b, const AudioSignal& noise,
                       double snr_db, Talker attended) {
  require(a.sample_rate_hz() == b.sample_rate_hz() &&
              a.sample_rate_hz() == noise.sample_rate_hz(),
          "mix_scene: sample rate mismatch");
  require(std::isfinite(snr_db), "mix_scene: snr must be finite");
  const std::size_t n = std::min({a.size(), b.size(), noise.size()});
  const AudioSignal at = a.truncated(n), bt = b.truncated(n), nt = noise.truncated(n);
  const double pa = at.power(), pb = bt.power(), pn = nt.power();
  if (pa <= 0.0 || pb <= 0.0 || pn <= 0.0)
    throw DegenerateInput("mix_scene: zero-power input");

  Scene s;
  s.source_a = at.scaled(1.0 / std::sqrt(pa));
  s.source_b = bt.scaled(1.0 / std::sqrt(pb));
  const double target_noise = std::pow(10.0, -snr_db / 10.0);
  s.noise = nt.scaled(std::sqrt(target_noise / pn));
  s.mixture = s.source_a + s.source_b + s.noise;
  s.attended = attended;
  s.snr_db = snr_db;
  return s;
}

inline std::size_t frame_samples(int rate_hz, double frame_ms) {
  require(frame_ms > 0.0, "frame length must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frame_ms * rate_hz / 1000.0)));
}

/// Per-frame RMS over non-overlapping frames; the last frame may be partial.
inline std::vector<double> envelope(const AudioSignal& x, double frame_ms) {
  const std::size_t fs = frame_samples(x.sample_rate_hz(), frame_ms);
  const std::size_t frames = (x.size() + fs - 1) / fs;
  std::vector<double> env(frames);
  const auto s = x.samples();
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t lo = f * fs, hi = std::min(s.size(), lo + fs);
    env[f] = std::sqrt(mean_power(s.subspan(lo, hi - lo)));
  }
  return env;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filterbank sampled at the DFT bin frequencies; rows are bands.
/// Throws when a band covers no bin.
inline Mat mel_filterbank(int n_bands, std::size_t nfft, int rate_hz) {
  require(n_bands >= 1, "mel filterbank: need at least one band");
  const std::size_t bins = nfft / 2 + 1;
  const double top = hz_to_mel(rate_hz / 2.0);
  std::vector<double> edge(n_bands + 2);
  for (int i = 0; i < n_bands + 2; ++i) edge[i] = mel_to_hz(top * i / (n_bands + 1));
  Mat fb = Mat::Zero(n_bands, static_cast<Eigen::Index>(bins));
  for (int b = 0; b < n_bands; ++b) {
    const double lo = edge[b], mid = edge[b + 1], hi = edge[b + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * rate_hz / static_cast<double>(nfft);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb(b, static_cast<Eigen::Index>(k)) = w;
    }
    if (fb.row(b).sum() <= 0.0)
      throw InvalidArgument("mel_features: " + std::to_string(n_bands) +
                            " bands exceed the resolution available below Nyquist");
  }
  return fb;
}

/// log(1 + E) band energies per non-overlapping Hann-windowed frame.
/// Shape: frames x bands.
inline Mat mel_features(const AudioSignal& x, int n_bands, double frame_ms) {
  const std::size_t fs = frame_samples(x.sample_rate_hz(), frame_ms);
  std::size_t nfft = 1;
  while (nfft < fs) nfft <<= 1;
  const Mat fb = mel_filterbank(n_bands, nfft, x.sample_rate_hz());
  const std::size_t frames = (x.size() + fs - 1) / fs;
  const std::size_t bins = nfft / 2 + 1;

  std::vector<double> window(fs);
  for (std::size_t i = 0; i < fs; ++i)
    window[i] = fs == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (fs - 1));

  Eigen::FFT<double> fft;
  std::vector<double> buf(nfft);
  std::vector<std::complex<double>> spec;
  Vec power(static_cast<Eigen::Index>(bins));
  Mat out(static_cast<Eigen::Index>(frames), n_bands);
  const auto s = x.samples();
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const std::size_t lo = f * fs, hi = std::min(s.size(), lo + fs);
    for (std::size_t i = lo; i < hi; ++i) buf[i - lo] = s[i] * window[i - lo];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < bins; ++k) power(static_cast<Eigen::Index>(k)) = std::norm(spec[k]);
    out.row(static_cast<Eigen::Index>(f)) = (fb * power).array().log1p().transpose();
  }
  return out;
}

}  // namespace attnscene
