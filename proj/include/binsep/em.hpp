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
#include <string>
#include <vector>

#include "binsep/models.hpp"
#include "binsep/types.hpp"

namespace binsep {

enum class Variant { Messl, IcMessl, ErMessl, EricMessl };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

inline bool variant_uses_comb(Variant v) { return v == Variant::ErMessl || v == Variant::EricMessl; }
inline bool variant_uses_ic(Variant v) { return v == Variant::IcMessl || v == Variant::EricMessl; }

struct EmConfig {
  Variant variant = Variant::EricMessl;
  int max_iters = 16;
  int grid_steps = 5;  // odd, per delay dimension
  Eigen::Array3d grid_range_s{0.13e-3, 0.13e-3, 0.13e-3};
  double variance_floor = kVarianceFloor;
  double init_ipd_var = 1.0;
};

/// Per-source initialization: comb parameters plus the ILD prior.
struct SourceInit {
  CombParams comb;
  ArrayXd ild_mean_db;     // per frequency bin
  double ild_var = 100.0;  // dB^2
};

/// Discrete candidate set per real source. With the comb disabled the grid
/// spans n_ds only (p11 = p12 = 0, single-point n_df/n_st).
struct ParamGrid {
  std::vector<std::vector<CombParams>> per_source;
};

ParamGrid build_param_grid(const std::vector<CombParams>& inits, const Eigen::Array3d& range_s,
                           int steps, bool comb_enabled);

/// Per-bin prior weights applied in the E-step: `real` multiplies every real
/// source's likelihood, `garbage` the garbage source's.
struct BinPrior {
  ArrayXXd real, garbage;
};

inline BinPrior prior_from_ic(const IcMask& ic) { return {ic.gamma, 1.0 - ic.gamma}; }

struct EmDiagnostics {
  std::vector<double> loglik_trace;
  double max_norm_deviation = 0.0;
  Eigen::Index uniform_bins = 0;        // bins that fell back to a uniform posterior
  Eigen::Index frozen_components = 0;   // (l, C) entries carried over on zero mass
  Eigen::Index nonsilent_bins = 0;      // B in the membership update
  std::vector<int> grid_argmax;         // per real source, argmax_C of beta
};

struct EmState {
  ParamGrid grid;
  std::vector<SourceCueModel> models;  // L real sources, then the garbage source
  std::vector<ArrayXd> beta;           // per model: one weight per candidate
  std::vector<ArrayXXd> comb_phase;    // per real source: bins x candidates
  double variance_floor = kVarianceFloor;
  EmDiagnostics diag;

  Eigen::Index num_real_sources() const { return static_cast<Eigen::Index>(grid.per_source.size()); }
};

EmState init_em_state(const InterauralObservation& obs, const std::vector<SourceInit>& inits,
                      const EmConfig& config);

/// Materialized occupation: nu[l][c] is bins x frames; the garbage source is
/// the last l with a single candidate. Rows sum to 1 per non-silent bin.
struct Occupation {
  std::vector<std::vector<ArrayXXd>> nu;
  Eigen::Index uniform_bins = 0;
};

Occupation e_step(const InterauralObservation& obs, const EmState& state,
                  const BinPrior* prior = nullptr);

void m_step(const InterauralObservation& obs, const Occupation& occupation, EmState& state);

struct SoftMask {
  ArrayXXd values;  // bins x frames, in [0, 1]
  int source_id = 0;
  bool garbage = false;
};

struct EmResult {
  std::vector<SoftMask> masks;  // real sources, then the (non-emitting) garbage mask
  EmState state;
};

/// Full EM loop: alternates E and M steps max_iters times; masks marginalize
/// the occupation of the final E-step. The prior (when given) is fixed.
EmResult run_em_with_prior(const InterauralObservation& obs, const std::vector<SourceInit>& inits,
                           const EmConfig& config, const BinPrior* prior);

EmResult run_em(const InterauralObservation& obs, const std::vector<SourceInit>& inits,
                const EmConfig& config, const std::optional<IcMask>& ic = std::nullopt);

/// Masked resynthesis per source and ear.
std::vector<StereoWaveform> apply_masks(const Spectrogram& left, const Spectrogram& right,
                                        const std::vector<SoftMask>& masks, Eigen::Index length);

}  // namespace binsep
