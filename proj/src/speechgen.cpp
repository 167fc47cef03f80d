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

#include "binsep/speechgen.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "binsep/dsp.hpp"
#include "binsep/rng.hpp"

namespace binsep {
namespace {

struct Formant {
  double freq, bandwidth;
};

double formant_envelope(double f, const std::vector<Formant>& formants) {
  double env = 0.0;
  for (const auto& fm : formants) {
    const double d = (f - fm.freq) / fm.bandwidth;
    env += 1.0 / (1.0 + d * d);
  }
  return env / (1.0 + f / 1800.0);  // spectral tilt
}

// RBJ constant-peak band-pass biquad.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  Biquad(double fc, double q, double fs) {
    const double w = 2.0 * std::numbers::pi * fc / fs;
    const double alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b1 = 0.0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w) / a0;
    a2 = (1.0 - alpha) / a0;
  }

  double operator()(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

enum class SegKind { Voiced, Unvoiced, Pause };

}  // namespace

Waveform synth_utterance(double sample_rate_hz, double duration_s, uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index n = static_cast<Eigen::Index>(std::llround(sample_rate_hz * duration_s));
  ArrayXd out = ArrayXd::Zero(n);

  const double f0_base = rng.uniform(95.0, 210.0);
  std::vector<Formant> formants{{rng.uniform(320.0, 850.0), rng.uniform(70.0, 130.0)},
                                {rng.uniform(950.0, 2300.0), rng.uniform(90.0, 180.0)},
                                {rng.uniform(2400.0, 3200.0), rng.uniform(120.0, 250.0)}};
  const double vibrato_hz = rng.uniform(3.5, 6.5);
  const double vibrato_phase = rng.uniform(0.0, kTwoPi);

  double phase = rng.uniform(0.0, kTwoPi);
  double drift = 0.0;
  Eigen::Index cursor = 0;
  const Eigen::Index edge = static_cast<Eigen::Index>(0.012 * sample_rate_hz);

  while (cursor < n) {
    const double r = rng.uniform();
    const SegKind kind = r < 0.48 ? SegKind::Voiced : (r < 0.66 ? SegKind::Unvoiced : SegKind::Pause);
    const double seg_dur = kind == SegKind::Voiced    ? rng.uniform(0.12, 0.35)
                           : kind == SegKind::Unvoiced ? rng.uniform(0.05, 0.16)
                                                       : rng.uniform(0.10, 0.35);
    const Eigen::Index len = std::min<Eigen::Index>(
        n - cursor, static_cast<Eigen::Index>(std::llround(seg_dur * sample_rate_hz)));
    if (len <= 0) break;

    if (kind == SegKind::Voiced) {
      drift = 0.85 * drift + 0.15 * rng.uniform(-0.12, 0.12);
      const double f0_seg = f0_base * (1.0 + drift);
      const int num_harmonics =
          std::max(1, static_cast<int>(std::floor(0.44 * sample_rate_hz / f0_seg)));
      std::vector<double> amp(static_cast<size_t>(num_harmonics));
      for (int h = 1; h <= num_harmonics; ++h)
        amp[static_cast<size_t>(h - 1)] = formant_envelope(h * f0_seg, formants);
      const double level = rng.uniform(0.6, 1.0);

      for (Eigen::Index i = 0; i < len; ++i) {
        const double t = static_cast<double>(cursor + i) / sample_rate_hz;
        const double f0 = f0_seg * (1.0 + 0.02 * std::sin(kTwoPi * vibrato_hz * t + vibrato_phase));
        phase += kTwoPi * f0 / sample_rate_hz;
        if (phase > kTwoPi) phase -= kTwoPi;
        double s = 0.0;
        for (int h = 1; h <= num_harmonics; ++h)
          s += amp[static_cast<size_t>(h - 1)] * std::sin(h * phase);
        double gate = 1.0;
        if (i < edge) gate = 0.5 * (1.0 - std::cos(std::numbers::pi * i / edge));
        if (len - 1 - i < edge) gate *= 0.5 * (1.0 - std::cos(std::numbers::pi * (len - 1 - i) / edge));
        out(cursor + i) = level * gate * s;
      }
    } else if (kind == SegKind::Unvoiced) {
      Biquad bp(rng.uniform(2200.0, 5500.0), 1.2, sample_rate_hz);
      const double level = rng.uniform(0.15, 0.4);
      for (Eigen::Index i = 0; i < len; ++i) {
        double gate = 1.0;
        if (i < edge) gate = 0.5 * (1.0 - std::cos(std::numbers::pi * i / edge));
        if (len - 1 - i < edge) gate *= 0.5 * (1.0 - std::cos(std::numbers::pi * (len - 1 - i) / edge));
        out(cursor + i) = level * gate * bp(rng.gaussian());
      }
    }
    cursor += len;
  }

  const double rms = std::sqrt(out.square().mean());
  if (rms > 0.0) out /= rms;
  return {std::move(out), sample_rate_hz};
}

}  // namespace binsep
