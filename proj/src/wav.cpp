// Copyright 2026 The binsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "binsep/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace binsep {
namespace {

// Little-endian I/O; binsep targets little-endian hosts.
template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, size_t off) {
  if (off + sizeof(T) > buf.size()) throw std::runtime_error("truncated WAV file");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error(path + " is not a RIFF/WAVE file");

  uint16_t format_tag = 0, num_channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const uint32_t chunk_len = get<uint32_t>(buf, pos + 4);
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      format_tag = get<uint16_t>(buf, pos + 8);
      num_channels = get<uint16_t>(buf, pos + 10);
      sample_rate = get<uint32_t>(buf, pos + 12);
      bits = get<uint16_t>(buf, pos + 22);
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (num_channels == 0 || data_off == 0) throw std::runtime_error(path + ": missing fmt or data chunk");
  data_len = std::min(data_len, buf.size() - data_off);

  AudioBuffer out;
  out.sample_rate_hz = sample_rate;
  if (format_tag == 1 && bits == 16) {
    const Eigen::Index frames = static_cast<Eigen::Index>(data_len / (2 * num_channels));
    out.channels.resize(frames, num_channels);
    for (Eigen::Index i = 0; i < frames; ++i)
      for (Eigen::Index c = 0; c < num_channels; ++c)
        out.channels(i, c) =
            get<int16_t>(buf, data_off + 2 * static_cast<size_t>(i * num_channels + c)) / 32768.0;
  } else if (format_tag == 3 && bits == 32) {
    const Eigen::Index frames = static_cast<Eigen::Index>(data_len / (4 * num_channels));
    out.channels.resize(frames, num_channels);
    for (Eigen::Index i = 0; i < frames; ++i)
      for (Eigen::Index c = 0; c < num_channels; ++c)
        out.channels(i, c) = get<float>(buf, data_off + 4 * static_cast<size_t>(i * num_channels + c));
  } else {
    throw std::runtime_error(path + ": unsupported WAV format (want PCM16 or float32)");
  }
  return out;
}

void write_wav(const std::string& path, const ArrayXXd& channels, double sample_rate_hz,
               WavFormat format) {
  if (channels.cols() < 1) throw std::invalid_argument("need at least one channel");
  const uint16_t nch = static_cast<uint16_t>(channels.cols());
  const uint32_t rate = static_cast<uint32_t>(std::lround(sample_rate_hz));
  const uint16_t bytes_per = format == WavFormat::Pcm16 ? 2 : 4;
  const uint32_t data_len = static_cast<uint32_t>(channels.rows() * nch * bytes_per);

  std::string buf;
  buf.reserve(44 + data_len);
  buf.append("RIFF");
  put<uint32_t>(buf, 36 + data_len);
  buf.append("WAVEfmt ");
  put<uint32_t>(buf, 16);
  put<uint16_t>(buf, format == WavFormat::Pcm16 ? 1 : 3);
  put<uint16_t>(buf, nch);
  put<uint32_t>(buf, rate);
  put<uint32_t>(buf, rate * nch * bytes_per);
  put<uint16_t>(buf, static_cast<uint16_t>(nch * bytes_per));
  put<uint16_t>(buf, static_cast<uint16_t>(bytes_per * 8));
  buf.append("data");
  put<uint32_t>(buf, data_len);
  for (Eigen::Index i = 0; i < channels.rows(); ++i) {
    for (Eigen::Index c = 0; c < nch; ++c) {
      const double v = channels(i, c);
      if (format == WavFormat::Pcm16) {
        const double scaled = std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0;
        put<int16_t>(buf, static_cast<int16_t>(std::lround(std::clamp(scaled, -32768.0, 32767.0))));
      } else {
        put<float>(buf, static_cast<float>(v));
      }
    }
  }
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) throw std::runtime_error("cannot write " + path);
  outf.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_wav(const std::string& path, const Waveform& mono, WavFormat format) {
  ArrayXXd ch(mono.samples.size(), 1);
  ch.col(0) = mono.samples;
  write_wav(path, ch, mono.sample_rate_hz, format);
}

void write_wav(const std::string& path, const StereoWaveform& stereo, WavFormat format) {
  if (stereo.left.samples.size() != stereo.right.samples.size())
    throw std::invalid_argument("stereo channels differ in length");
  ArrayXXd ch(stereo.left.samples.size(), 2);
  ch.col(0) = stereo.left.samples;
  ch.col(1) = stereo.right.samples;
  write_wav(path, ch, stereo.left.sample_rate_hz, format);
}

}  // namespace binsep
