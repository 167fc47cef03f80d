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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "binsep/rng.hpp"
#include "binsep/wav.hpp"

using namespace binsep;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("float32 wav round trip is exact at float precision") {
  Rng rng(1);
  ArrayXXd data(1000, 3);
  for (Eigen::Index c = 0; c < 3; ++c) data.col(c) = 0.8 * rng.gaussian_vector(1000);
  const std::string path = temp_path("binsep_f32.wav");
  write_wav(path, data, 16000.0, WavFormat::Float32);
  const AudioBuffer back = read_wav(path);
  CHECK(back.sample_rate_hz == 16000.0);
  CHECK(back.num_channels() == 3);
  CHECK((back.channels - data.cast<float>().cast<double>()).abs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("pcm16 wav round trip within one quantization step") {
  Rng rng(2);
  ArrayXXd data(500, 2);
  data.col(0) = 0.5 * rng.gaussian_vector(500).min(1.9).max(-1.9);
  data.col(1) = 0.5 * rng.gaussian_vector(500).min(1.9).max(-1.9);
  const std::string path = temp_path("binsep_pcm16.wav");
  write_wav(path, data, 48000.0, WavFormat::Pcm16);
  const AudioBuffer back = read_wav(path);
  CHECK(back.sample_rate_hz == 48000.0);
  CHECK((back.channels - data).abs().maxCoeff() <= 1.0 / 32768.0 + 1e-12);
  std::remove(path.c_str());
}

TEST_CASE("stereo helpers") {
  Rng rng(3);
  StereoWaveform sw{{rng.gaussian_vector(256), 16000.0}, {rng.gaussian_vector(256), 16000.0}};
  const std::string path = temp_path("binsep_stereo.wav");
  write_wav(path, sw);
  const AudioBuffer back = read_wav(path);
  CHECK(back.num_channels() == 2);
  CHECK((back.channel(0).samples - sw.left.samples.cast<float>().cast<double>()).abs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("read errors") {
  CHECK_THROWS(read_wav("/nonexistent/file.wav"));
  const std::string path = temp_path("binsep_junk.wav");
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a wav", f);
    std::fclose(f);
  }
  CHECK_THROWS(read_wav(path));
  std::remove(path.c_str());
}
