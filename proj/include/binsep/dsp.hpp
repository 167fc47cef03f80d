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

#include <cmath>
#include <numbers>

#include "binsep/types.hpp"

namespace binsep {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps x (radians) into [-pi, pi).
inline double wrap_phase(double x) {
  return x - kTwoPi * std::floor((x + std::numbers::pi) / kTwoPi);
}

/// Elementwise wrap into [-pi, pi); works on any Eigen array expression.
template <typename Derived>
auto wrap_phase(const Eigen::ArrayBase<Derived>& x) {
  return x - kTwoPi * ((x + std::numbers::pi) / kTwoPi).floor();
}

/// Analysis/synthesis window of the given kind (periodic form).
ArrayXd make_window(WindowKind kind, int len);

/// Leading/trailing zero pad used by the analysis framing: window_len - hop.
inline int stft_edge_pad(const StftParams& p) { return p.window_len - p.hop; }

/// Number of analysis frames produced for a signal of num_samples samples.
Eigen::Index stft_num_frames(Eigen::Index num_samples, const StftParams& p);

/// One-sided STFT. The signal is zero padded by window_len - hop samples at
/// both ends so every input sample receives full overlap-add weight; frame m
/// starts at sample m*hop - pad of the unpadded signal.
Spectrogram stft(const Waveform& wave, const StftParams& params);

/// Weighted overlap-add inverse. length < 0 returns the full de-padded
/// support, (num_frames - 1) * hop + window_len - 2 * pad samples; otherwise
/// the output is cut or zero padded to exactly `length` samples.
/// Throws if the window/hop pair does not satisfy constant overlap-add.
Waveform istft(const Spectrogram& spec, Eigen::Index length = -1);

}  // namespace binsep
