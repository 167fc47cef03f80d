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

#pragma once

#include <string>

#include "binsep/types.hpp"

namespace binsep {

enum class WavFormat { Pcm16, Float32 };

/// Multichannel audio: one column per channel.
struct AudioBuffer {
  ArrayXXd channels;  // samples x channels
  double sample_rate_hz = 0.0;

  Eigen::Index num_channels() const { return channels.cols(); }
  Waveform channel(Eigen::Index c) const { return {channels.col(c), sample_rate_hz}; }
};

AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const ArrayXXd& channels, double sample_rate_hz,
               WavFormat format = WavFormat::Float32);
void write_wav(const std::string& path, const Waveform& mono, WavFormat format = WavFormat::Float32);
void write_wav(const std::string& path, const StereoWaveform& stereo,
               WavFormat format = WavFormat::Float32);

}  // namespace binsep
