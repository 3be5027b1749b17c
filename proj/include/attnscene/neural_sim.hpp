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

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "attnscene/audio_scene.hpp"
#include "attnscene/speaker_space.hpp"

namespace attnscene {

/// C x T low-rate multichannel recording.
struct NeuralRecording {
  Mat data;
  double frame_rate_hz = 100.0;
  std::string scene_id;

  int channels() const { return static_cast<int>(data.rows()); }
  int frames() const { return static_cast<int>(data.cols()); }
  double duration_s() const { return frames() / frame_rate_hz; }

  void validate() const {
    require(data.rows() >= 1 && data.cols() >= 1, "NeuralRecording: empty");
    require(frame_rate_hz > 0.0, "NeuralRecording: frame rate must be positive");
    require(data.allFinite(), "NeuralRecording: non-finite entry");
  }
};

/// Forward-model parameters for one simulated listener. Weights and lags are
/// fixed per listener; `seed` drives only the additive noise.
struct EncodingParams {
  double attended_gain = 1.0;
  double unattended_gain = 0.3;
  std::vector<int> lags;  // per channel, in frames
  Mat weights;            // C x F; column 0 multiplies the envelope, the rest the identity term
  double identity_gain = 1.0;
  double noise_sigma = 1.0;
  double frame_rate_hz = 100.0;
  std::uint64_t seed = 0;

  int channels() const { return static_cast<int>(weights.rows()); }
  int identity_dims() const { return static_cast<int>(weights.cols()) - 1; }

  void validate() const {
    require(weights.rows() >= 1 && weights.cols() >= 1, "EncodingParams: empty weight matrix");
    require(lags.size() == static_cast<std::size_t>(weights.rows()),
            "EncodingParams: one lag per channel required");
    require(attended_gain > unattended_gain && unattended_gain >= 0.0,
            "EncodingParams: need attended_gain > unattended_gain >= 0");
    require(noise_sigma >= 0.0, "EncodingParams: noise_sigma must be >= 0");
    require(frame_rate_hz > 0.0, "EncodingParams: frame rate must be positive");
    for (int l : lags) require(l >= 0, "EncodingParams: negative lag");
  }

  /// Draws a listener: Gaussian mixing weights and uniform lags in [0, max_lag].
  static EncodingParams random_listener(int channels, int identity_dims, int max_lag,
                                        std::uint64_t listener_seed) {
    require(channels >= 1 && identity_dims >= 0 && max_lag >= 0,
            "EncodingParams::random_listener: bad dimensions");
    EncodingParams p;
    Rng rng(listener_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> lag(0, max_lag);
    p.weights.resize(channels, 1 + identity_dims);
    p.lags.resize(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) {
      for (int f = 0; f <= identity_dims; ++f) p.weights(c, f) = normal(rng);
      p.lags[static_cast<std::size_t>(c)] = lag(rng);
    }
    p.seed = listener_seed;
    return p;
  }
};

/// Each channel is a gain-weighted sum over both talkers of the lagged
/// envelope plus a constant identity term taken from the leading embedding
/// coordinates, plus white Gaussian noise.
inline NeuralRecording encode(const Scene& scene,
                              const std::array<SpeakerEmbedding, 2>& embeddings,
                              const EncodingParams& params) {
  params.validate();
  const int id_dims = params.identity_dims();
  for (const auto& e : embeddings)
    require(e.dim() >= id_dims, "encode: embedding shorter than identity_dims");

  const double frame_ms = 1000.0 / params.frame_rate_hz;
  const std::array<std::vector<double>, 2> env = {envelope(scene.source_a, frame_ms),
                                                  envelope(scene.source_b, frame_ms)};
  const int frames = static_cast<int>(std::min(env[0].size(), env[1].size()));
  for (int l : params.lags)
    require(l < frames, "encode: lag " + std::to_string(l) + " >= recording length " +
                            std::to_string(frames));

  const int attended = static_cast<int>(scene.attended);
  std::array<double, 2> gain{};
  gain[attended] = params.attended_gain;
  gain[1 - attended] = params.unattended_gain;

  NeuralRecording z;
  z.frame_rate_hz = params.frame_rate_hz;
  z.scene_id = scene.scene_id;
  z.data = Mat::Zero(params.channels(), frames);

  Rng rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < params.channels(); ++c) {
    double identity = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int j = 0; j < id_dims; ++j)
        identity += gain[s] * params.weights(c, 1 + j) * embeddings[s].values(j);
    identity *= params.identity_gain;
    const int lag = params.lags[static_cast<std::size_t>(c)];
    for (int t = 0; t < frames; ++t) {
      double v = identity;
      if (t >= lag) {
        const auto src = static_cast<std::size_t>(t - lag);
        v += params.weights(c, 0) * (gain[0] * env[0][src] + gain[1] * env[1][src]);
      }
      z.data(c, t) = v;
    }
  }
  if (params.noise_sigma > 0.0)
    for (int t = 0; t < frames; ++t)
      for (int c = 0; c < params.channels(); ++c) z.data(c, t) += params.noise_sigma * normal(rng);
  return z;
}

/// Contiguous window of `round(len_s * rate)` frames starting at `round(start_s * rate)`.
inline NeuralRecording slice_window(const NeuralRecording& z, double start_s, double len_s) {
  const auto start = static_cast<long>(std::lround(start_s * z.frame_rate_hz));
  const auto len = static_cast<long>(std::lround(len_s * z.frame_rate_hz));
  require(start >= 0 && len >= 1 && start + len <= z.frames(),
          "slice_window: window [" + std::to_string(start) + ", " + std::to_string(start + len) +
              ") outside recording of " + std::to_string(z.frames()) + " frames");
  NeuralRecording out;
  out.frame_rate_hz = z.frame_rate_hz;
  out.scene_id = z.scene_id;
  out.data = z.data.middleCols(start, len);
  return out;
}

// IIZ1 layout (little-endian): "IIZ1", u32 C, u32 T, f64 frame_rate_hz,
// then C*T float32 values in row-major (channel-major) order.
inline void write_iiz(const std::filesystem::path& path, const NeuralRecording& z) {
  static_assert(std::endian::native == std::endian::little, "IIZ1 writer assumes little-endian");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::uint32_t c = static_cast<std::uint32_t>(z.channels());
  const std::uint32_t t = static_cast<std::uint32_t>(z.frames());
  os.write("IIZ1", 4);
  os.write(reinterpret_cast<const char*>(&c), 4);
  os.write(reinterpret_cast<const char*>(&t), 4);
  os.write(reinterpret_cast<const char*>(&z.frame_rate_hz), 8);
  std::vector<float> row(t);
  for (std::uint32_t ch = 0; ch < c; ++ch) {
    for (std::uint32_t i = 0; i < t; ++i) row[i] = static_cast<float>(z.data(ch, i));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(t * 4));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline NeuralRecording read_iiz(const std::filesystem::path& path, std::string scene_id = "") {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  std::uint32_t c = 0, t = 0;
  double rate = 0.0;
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "IIZ1", 4) != 0) throw ProtocolError("bad IIZ1 magic in " + path.string());
  is.read(reinterpret_cast<char*>(&c), 4);
  is.read(reinterpret_cast<char*>(&t), 4);
  is.read(reinterpret_cast<char*>(&rate), 8);
  if (!is || c == 0 || t == 0) throw ProtocolError("bad IIZ1 header in " + path.string());
  NeuralRecording z;
  z.frame_rate_hz = rate;
  z.scene_id = std::move(scene_id);
  z.data.resize(c, t);
  std::vector<float> row(t);
  for (std::uint32_t ch = 0; ch < c; ++ch) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(t * 4));
    if (!is) throw ProtocolError("truncated IIZ1 payload in " + path.string());
    for (std::uint32_t i = 0; i < t; ++i) z.data(ch, i) = row[i];
  }
  return z;
}

}  // namespace attnscene
