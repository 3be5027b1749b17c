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

#include <cstring>
#include <filesystem>
#include <fstream>

#include "attnscene/audio_scene.hpp"

namespace attnscene {

namespace wav_detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace wav_detail

/// Writes 16-bit little-endian PCM mono. Samples are multiplied by `gain`
/// and clipped to [-1, 1] before quantization.
inline void write_wav(const std::filesystem::path& path, const AudioSignal& x, double gain = 1.0) {
  using namespace wav_detail;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto data_bytes = static_cast<std::uint32_t>(x.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);  // PCM
  put_u16(os, 1);  // mono
  put_u32(os, static_cast<std::uint32_t>(x.sample_rate_hz()));
  put_u32(os, static_cast<std::uint32_t>(x.sample_rate_hz()) * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (double v : x.samples()) {
    const double c = std::clamp(v * gain, -1.0, 1.0);
    put_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

/// Reads a 16-bit PCM mono file back into [-1, 1] samples divided by `gain`.
inline AudioSignal read_wav(const std::filesystem::path& path, double gain = 1.0) {
  using namespace wav_detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ProtocolError("not a RIFF/WAVE file: " + path.string());
  int rate = 0, bits = 0, channels = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32(&bytes[pos + 4]);
    const unsigned char* body = &bytes[pos + 8];
    if (pos + 8 + len > bytes.size()) throw ProtocolError("truncated chunk in " + path.string());
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      if (get_u16(body) != 1) throw ProtocolError("only PCM WAV is supported");
      channels = get_u16(body + 2);
      rate = static_cast<int>(get_u32(body + 4));
      bits = get_u16(body + 14);
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      if (channels != 1 || bits != 16) throw ProtocolError("expected 16-bit mono PCM");
      std::vector<double> samples(len / 2);
      for (std::size_t i = 0; i < samples.size(); ++i)
        samples[i] = static_cast<std::int16_t>(get_u16(body + 2 * i)) / 32767.0 / gain;
      return AudioSignal(std::move(samples), rate);
    }
    pos += 8 + len + (len & 1);
  }
  throw ProtocolError("no data chunk in " + path.string());
}

}  // namespace attnscene
