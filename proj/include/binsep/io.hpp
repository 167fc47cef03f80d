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

#include <json.hpp>

#include <string>
#include <vector>

#include "binsep/acoustics.hpp"
#include "binsep/em.hpp"
#include "binsep/eval.hpp"
#include "binsep/isdar.hpp"
#include "binsep/models.hpp"
#include "binsep/types.hpp"

namespace binsep {

using Json = nlohmann::json;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

Json to_json(const CombParams& comb);
CombParams comb_params_from_json(const Json& j);

Json to_json(const StftParams& params);
StftParams stft_params_from_json(const Json& j);

/// BRIR sidecar: taps per ear, geometry, rt60, seed.
Json brir_sidecar(const Brir& brir, double rt60_s, uint64_t seed);

Json to_json(const LocalizationResult& loc);

Json to_json(const EmDiagnostics& diag, const EmState& state);

/// Flat row-major float32 matrix (frames x bins in file order) plus a JSON
/// header written next to it ("<path>.json").
void write_mask_binary(const std::string& path, const ArrayXXd& mask_bins_by_frames, int source_id);
ArrayXXd read_mask_binary(const std::string& path);

/// 8-bit PGM image of a [0, 1] mask, bins as rows (low frequency at bottom).
void write_mask_pgm(const std::string& path, const ArrayXXd& mask_bins_by_frames);

/// Per-source initialization file: comb params + ILD prior per source.
Json init_to_json(const std::vector<SourceInit>& inits, double sample_rate_hz);
std::vector<SourceInit> init_from_json(const Json& j);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

/// Fixed-header scores CSV.
inline constexpr const char* kScoresCsvHeader =
    "scene_id,method,target_angle_deg,interferer_angle_deg,sdr_db_left,sdr_db_right,seed";
std::string scores_to_csv(const std::vector<SeparationScore>& scores);
Json report_to_json(const ExperimentReport& report);

}  // namespace binsep
