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

#include <vector>

#include "binsep/acoustics.hpp"
#include "binsep/em.hpp"
#include "binsep/models.hpp"
#include "binsep/types.hpp"

namespace binsep {

/// Direct-sound and first-reflection times of arrival for one channel,
/// sub-sample refined. Peak picking stands in for a full TOA clusterer and
/// keeps its interface: direct = first local maximum above half the global
/// peak, reflection = the dominant significant peak 5-40 ms later.
struct ToaEstimate {
  double direct_s = 0.0;
  double reflection_s = 0.0;
};

std::vector<ToaEstimate> estimate_toas(const std::vector<Waveform>& rirs);

struct DoaEstimate {
  double azimuth_rad = 0.0;
  bool low_confidence = false;  // steered-power spread under 1 dB
};

/// Delay-and-sum steered response power over a 1 degree azimuth grid,
/// restricted to the [t_begin_s, t_end_s) slice of the RIRs.
DoaEstimate das_doa(const std::vector<Waveform>& rirs, const ArraySpec& array, double t_begin_s,
                    double t_end_s);

struct LocalizationResult {
  struct Localized {
    ArrayXd toa_per_channel_s;
    double azimuth_rad = 0.0;
    double radius_m = 0.0;
    Eigen::Vector2d position_m{0.0, 0.0};
    bool low_confidence = false;
  };
  Localized direct, reflection;
};

LocalizationResult localize(const std::vector<Waveform>& rirs, const ArraySpec& array);

/// Rigid in-plane translation of the localized positions (array offset from
/// the listening position).
LocalizationResult translate(LocalizationResult loc, const Eigen::Vector2d& offset);

struct HeadGeometry {
  Vec3 left_ear, right_ear, center;
  double radius_m = 0.09;
};

HeadGeometry head_geometry(const HeadPose& pose);

/// Converts localized source/image positions into the comb-model interaural
/// delays via ear path lengths, and reads tap amplitudes off the rendered
/// BRIR around the predicted per-ear arrival times.
CombParams init_comb_params(const LocalizationResult& loc, const HeadGeometry& head, const Brir& brir);

struct IldPrior {
  ArrayXd mean_db;
  double var = 100.0;
};

IldPrior init_ild_prior(const Brir& brir_at_doa, const ArrayXd& freqs_hz);

/// Anechoic synthetic BRIR at the localized source position (direct sound
/// only); feeds the ILD prior. Comb structure stays in the IPD model.
Brir brir_at_estimated_doa(const LocalizationResult& loc, const HeadPose& head,
                           double sample_rate_hz);

}  // namespace binsep
