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

#include "binsep/acoustics.hpp"
#include "binsep/mixture.hpp"
#include "binsep/types.hpp"

namespace binsep {

/// Comb-filter interaural model: three interaural delays plus four fixed tap
/// amplitudes. Delays in seconds; n_ds = right/left direct-sound lag,
/// n_df = first-reflection lag after the direct at the left ear,
/// n_st = right/left lag of the first reflection.
struct CombParams {
  double n_ds_s = 0.0;
  double n_df_s = 0.0;
  double n_st_s = 0.0;
  double p01 = 1.0, p11 = 0.0, p02 = 1.0, p12 = 0.0;

  void validate() const;
};

struct CombIpdCurve {
  ArrayXd phase_rad;                       // wrapped to [-pi, pi)
  Eigen::Array<bool, Eigen::Dynamic, 1> valid;  // false where the model is undefined
};

/// Phase of (p01 + p11 e^{-jw n_df}) / (p02 e^{-jw n_ds} + p12 e^{-jw (n_df + n_st)})
/// per frequency. Bins where the denominator magnitude falls below 1e-12 are
/// flagged invalid.
CombIpdCurve comb_ipd_model(const CombParams& params, const ArrayXd& freqs_hz);

/// Wrapped difference between the observed IPD and the comb model curve.
ArrayXXd phase_residual(const InterauralObservation& obs, const CombParams& params);

/// 20 log10 of the left/right frequency-response magnitude ratio of the
/// rendered BRIR, evaluated at the given frequencies.
ArrayXd ild_model(const Brir& brir, const ArrayXd& freqs_hz);

inline constexpr double kVarianceFloor = 1e-5;  // dB^2 and rad^2
inline constexpr double kGarbageIldVarInit = 400.0;

/// Gaussian cue model for one source. IPD statistics are per (bin, grid
/// candidate); a garbage source keeps a uniform IPD density instead.
struct SourceCueModel {
  ArrayXd ild_mean_db;   // per bin
  ArrayXd ild_var;       // per bin, >= kVarianceFloor
  ArrayXXd ipd_mean_rad; // bins x candidates
  ArrayXXd ipd_var;      // bins x candidates, >= kVarianceFloor
  bool is_garbage = false;
};

SourceCueModel garbage_model(Eigen::Index num_bins);

/// Joint ILD+IPD log likelihood for grid candidate c_index.
/// comb_phase is the model curve for that candidate (ignored for garbage).
/// Silent bins contribute 0.
ArrayXXd cue_log_likelihood(const InterauralObservation& obs, const SourceCueModel& model,
                            Eigen::Index c_index, const ArrayXd& comb_phase);

/// Interaural-coherence soft mask.
struct IcMask {
  ArrayXXd gamma;  // bins x frames, in [0, 1]
  double kappa = 0.5;
};

/// Magnitude-squared coherence from recursively smoothed auto/cross spectra.
/// Recursion starts from the first frame's instantaneous estimates.
IcMask ic_mask(const Spectrogram& left, const Spectrogram& right, double kappa);

/// Alternative smoothing rule kappa = 1 / (tau * fs) with tau defaulting to 10 ms.
inline double kappa_from_time_constant(double sample_rate_hz, double tau_s = 0.01) {
  return std::min(1.0, 1.0 / (tau_s * sample_rate_hz));
}

}  // namespace binsep
