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

#include "binsep/acoustics.hpp"
#include "binsep/em.hpp"
#include "binsep/eval.hpp"
#include "binsep/io.hpp"
#include "binsep/types.hpp"

namespace binsep {

struct ExperimentConfig {
  uint64_t seed = 1;
  double sample_rate_hz = 16000.0;
  StftParams stft;
  EmConfig em;
  double kappa = 0.5;

  RoomSpec room;
  double source_distance_m = 6.0;
  double source_height_m = 0.0;  // relative to the head center
  std::vector<double> angles_deg{0.0, 30.0, -30.0, 60.0, -60.0};
  int num_sources = 2;
  int utterances_per_pair = 3;  // U
  double min_tisa_deg = 0.0;

  double utterance_duration_s = 3.0;
  std::vector<std::string> utterance_pool;  // wav paths; empty = 15 synthetic
  int synthetic_pool_size = 15;

  std::vector<std::string> methods{"random", "messl", "ic-messl", "er-messl", "eric-messl", "oracle"};
  double tir_db = 0.0;
  std::optional<double> snr_db;

  int array_mics = 8;
  double array_radius_m = 0.106;
};

ExperimentConfig experiment_config_from_json(const Json& j);
Json to_json(const ExperimentConfig& config);

/// Number of mixtures for a full experiment: C(num_angles, L) * U.
Eigen::Index count_scenes(int num_angles, int num_sources, int utterances_per_pair);

struct SceneSpec {
  std::string scene_id;
  std::vector<double> angles_deg;    // target first
  std::vector<int> utterance_index;  // into the pool
  uint64_t seed = 0;
};

std::vector<SceneSpec> plan_scenes(const ExperimentConfig& config);

/// Static per-angle assets: the BRIR, array RIRs, and the initialization.
struct AngleAssets {
  double angle_deg = 0.0;
  Brir brir;
  std::vector<Waveform> array_rirs;
  SourceInit init;
  LocalizationResult localization;
};

AngleAssets make_angle_assets(const ExperimentConfig& config, double angle_deg);

struct EmRunDiag {
  std::string scene_id;
  std::string method;
  std::vector<double> loglik_trace;
  double max_norm_deviation = 0.0;
  bool ok = true;
  std::string error;
};

struct ExperimentOutcome {
  std::vector<SeparationScore> scores;
  std::vector<EmRunDiag> em_diags;
  ExperimentReport report;
  Json manifest;
};

ExperimentOutcome run_experiment(const ExperimentConfig& config);

void write_experiment_outputs(const ExperimentOutcome& outcome, const std::string& out_dir);

/// Number of worker threads: BINSEP_THREADS when set, else hardware concurrency.
int worker_count();

/// One-shot separation from a mixture observation.
struct SeparationRun {
  std::vector<SoftMask> masks;            // per real source (+ garbage for EM methods)
  std::vector<StereoWaveform> separated;  // real sources only
  std::optional<EmState> em_state;
};

SeparationRun separate_mixture(const StereoWaveform& mixture, const std::vector<SourceInit>& inits,
                               const std::string& method, const StftParams& stft_params,
                               const EmConfig& em_config, double kappa, uint64_t seed);

}  // namespace binsep
