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

#include <map>
#include <string>
#include <vector>

#include "binsep/types.hpp"

namespace binsep {

/// Source-to-distortion ratio in dB: the estimate is projected onto the
/// subspace spanned by num_taps delayed copies of the reference (least
/// squares); SDR = 10 log10(projection energy / residual energy), capped at
/// +-100 dB.
double sdr(const Waveform& estimate, const Waveform& reference, int num_taps = 512);

/// Ideal binary masks from per-source clean-image energies (left+right).
/// Exactly one mask is 1 per bin; ties go to the lowest source index.
std::vector<ArrayXXd> oracle_mask(const std::vector<ArrayXXd>& source_energies);

/// I.i.d. uniform [0, 1) mask; the complementary mask for a second source is
/// 1 - this one.
ArrayXXd random_mask(Eigen::Index bins, Eigen::Index frames, uint64_t seed);

struct SeparationScore {
  std::string scene_id;
  std::string method;
  double target_angle_deg = 0.0;
  double interferer_angle_deg = 0.0;
  double sdr_left_db = 0.0;
  double sdr_right_db = 0.0;
  uint64_t seed = 0;

  double sdr_mean_db() const { return 0.5 * (sdr_left_db + sdr_right_db); }
};

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int dof = 0;
};

/// Two-sided paired t-test on equal-length score sequences.
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta function I_x(a, b) (continued fraction).
double regularized_incomplete_beta(double a, double b, double x);

struct MethodSummary {
  std::string method;
  double mean_sdr_db = 0.0;
  Eigen::Index num_scenes = 0;
  std::map<double, double> mean_sdr_by_target_angle;
  double p_vs_baseline = 1.0;   // 1 for the baseline itself
  double t_vs_baseline = 0.0;
};

struct ExperimentReport {
  std::vector<MethodSummary> methods;
  std::string baseline;
  Eigen::Index scenes_per_method = 0;
};

ExperimentReport aggregate(const std::vector<SeparationScore>& scores,
                           const std::string& baseline = "messl");

}  // namespace binsep
