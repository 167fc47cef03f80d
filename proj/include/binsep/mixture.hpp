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

#include <optional>
#include <vector>

#include "binsep/acoustics.hpp"
#include "binsep/types.hpp"

namespace binsep {

struct MixtureScene {
  struct Source {
    Waveform utterance;
    Brir brir;
  };
  std::vector<Source> sources;
  double tir_db = 0.0;               // source 0 vs. the rest, pre-convolution
  std::optional<double> snr_db;      // additive sensor noise; nullopt = noiseless
  uint64_t seed = 0;
};

/// Scales to unit RMS. Errors on all-zero input.
Waveform rms_normalize(const Waveform& wave);

struct RenderedScene {
  StereoWaveform mixture;
  std::vector<StereoWaveform> images;  // per-source reverberant ear images
};

/// Renders per-source ear images and their sum. The mixture is formed as the
/// sample-wise sum of the individually rendered images, so superposition is
/// exact. Sensor noise (if configured) is added to the mixture only.
RenderedScene render_scene(const MixtureScene& scene);

inline StereoWaveform render_mixture(const MixtureScene& scene) {
  return render_scene(scene).mixture;
}

/// Direct convolution via FFT; output length = x.size() + ir.size() - 1.
Waveform convolve(const Waveform& x, const Waveform& ir);

/// Per-bin interaural level (dB) and phase (radians, [-pi, pi)) grids.
struct InterauralObservation {
  ArrayXXd ild_db;    // bins x frames
  ArrayXXd ipd_rad;   // bins x frames
  BoolGrid silent;    // true where either channel magnitude < 1e-12
  Spectrogram left_spec, right_spec;

  Eigen::Index num_bins() const { return ild_db.rows(); }
  Eigen::Index num_frames() const { return ild_db.cols(); }
};

InterauralObservation interaural_spectrogram(const Spectrogram& left, const Spectrogram& right);

}  // namespace binsep
