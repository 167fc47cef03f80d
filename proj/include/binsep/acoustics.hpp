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

#include <cstdint>
#include <utility>
#include <vector>

#include "binsep/geometry.hpp"
#include "binsep/types.hpp"

namespace binsep {

/// A specular arrival: direct sound (order_index 0) or reflection.
/// shadow_hf_gain < 1 applies a first-order head-shadow shelf when rendering
/// (gain 1 at DC falling to shadow_hf_gain at Nyquist, knee near 1.5 kHz);
/// 1.0 renders a pure fractional-delay impulse.
struct ReflectionTap {
  double toa_s = 0.0;
  double amplitude = 0.0;
  int order_index = 0;
  double shadow_hf_gain = 1.0;
};

/// Sampled impulse-response component added at a fixed onset; holds the
/// stochastic late tail, or an arbitrary baked response.
struct SampledComponent {
  double onset_s = 0.0;
  ArrayXd left, right;

  bool empty() const { return left.size() == 0 && right.size() == 0; }
};

struct BrirGeometry {
  Vec3 source_pos{0, 0, 0};
  HeadPose head;
};

struct Brir {
  std::vector<ReflectionTap> left_taps, right_taps;
  SampledComponent tail;
  double sample_rate_hz = 0.0;
  BrirGeometry geometry;
  // Set when the earliest reflection lag falls outside the assumed [5, 40] ms.
  bool first_reflection_lag_warning = false;
};

struct Reflector {
  Plane plane;
  double coefficient = 0.0;  // frequency-flat, in [0, 1]
};

struct RoomSpec {
  std::vector<Reflector> reflectors;
  double rt60_s = 0.0;
  double tail_onset_s = 0.01;  // relative to the direct-sound TOA
  double tail_gain = 0.1;      // initial tail RMS relative to the direct amplitude
  uint64_t noise_seed = 0;

  void validate() const;
};

struct ArraySpec {
  std::vector<Vec3> mics;
  Vec3 reference{0, 0, 0};
};

/// Planar ring of microphones around `center`, first mic on +x.
ArraySpec ring_array(int num_mics = 8, double radius_m = 0.106, const Vec3& center = {0, 0, 0});

/// Direct sound + first-order image sources + decorrelated exponential
/// Gaussian tail. Amplitudes follow 1/r; reflections are scaled by the
/// reflector coefficient; the contralateral ear gets the head-shadow shelf.
Brir synthesize_brir(const RoomSpec& room, const Vec3& source_pos, const HeadPose& head,
                     double sample_rate_hz);

/// Per-microphone RIRs with the same arrival model, no head shadowing.
std::vector<Waveform> synthesize_array_rirs(const RoomSpec& room, const Vec3& source_pos,
                                            const ArraySpec& array, double sample_rate_hz);

/// One arrival for direct construction of a Brir from known positions.
struct Arrival {
  Vec3 position;
  double gain = 1.0;  // multiplies the 1/r distance attenuation
  int order_index = 0;
};

/// Builds a two-ear BRIR from explicit arrival positions (used both by
/// synthesize_brir and to construct the ILD-prior BRIR at an estimated DOA).
Brir brir_from_arrivals(const std::vector<Arrival>& arrivals, const HeadPose& head,
                        double sample_rate_hz);

/// Time span needed to render every tap (and tail) of the BRIR.
double brir_support_s(const Brir& brir);

/// The 8-point Hann-windowed sinc used for fractional-delay tap placement;
/// u is the offset from the tap position in samples, zero outside (-4, 4).
double frac_delay_kernel(double u);

/// Renders taps with 8-point windowed-sinc fractional delays plus the
/// sampled component. Throws if length_s does not cover the last tap.
StereoWaveform render_ir(const Brir& brir, double length_s);

/// Mono variant of the tap renderer (array RIRs).
Waveform render_taps(const std::vector<ReflectionTap>& taps, double sample_rate_hz, double length_s);

/// BRIR reduced to the direct sound: rendered IR under a Hamming window of
/// window_ms centered at the direct-sound TOA, returned as a baked component.
Brir direct_path_reference(const Brir& brir, double window_ms);

/// Direct-to-reverberant ratio in dB: energy in +-2.5 ms around the direct
/// TOA over the remainder. Capped at +-100 dB.
double measure_drr(const Brir& brir);

}  // namespace binsep
