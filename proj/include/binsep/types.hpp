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

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace binsep {

using Vec3 = Eigen::Vector3d;
using Eigen::ArrayXd;
using Eigen::ArrayXXcd;
using Eigen::ArrayXXd;

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// A uniformly sampled single audio channel.
struct Waveform {
  ArrayXd samples;
  double sample_rate_hz = 0.0;

  Eigen::Index size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

struct StereoWaveform {
  Waveform left, right;
};

enum class WindowKind { SqrtHann, Hann, Hamming };

WindowKind window_kind_from_string(const std::string& name);
std::string to_string(WindowKind kind);

struct StftParams {
  int window_len = 1024;
  int hop = 256;
  WindowKind window = WindowKind::SqrtHann;
  int fft_len = 1024;  // >= window_len, even

  void validate() const;
};

/// One-sided complex spectrogram. bins(k, m) is frequency bin k of frame m,
/// so a frame is one contiguous column.
struct Spectrogram {
  ArrayXXcd bins;
  StftParams params;
  double sample_rate_hz = 0.0;

  Eigen::Index num_bins() const { return bins.rows(); }
  Eigen::Index num_frames() const { return bins.cols(); }
  double bin_freq_hz(Eigen::Index k) const {
    return static_cast<double>(k) * sample_rate_hz / params.fft_len;
  }
  ArrayXd bin_freqs_hz() const {
    return ArrayXd::LinSpaced(num_bins(), 0.0,
                              static_cast<double>(num_bins() - 1) * sample_rate_hz / params.fft_len);
  }
};

}  // namespace binsep
