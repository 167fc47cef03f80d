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

#include "binsep/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace binsep {

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json to_json(const CombParams& comb) {
  return Json{{"n_ds_s", comb.n_ds_s}, {"n_df_s", comb.n_df_s}, {"n_st_s", comb.n_st_s},
              {"p01", comb.p01},       {"p11", comb.p11},       {"p02", comb.p02},
              {"p12", comb.p12}};
}

CombParams comb_params_from_json(const Json& j) {
  CombParams c;
  c.n_ds_s = j.at("n_ds_s").get<double>();
  c.n_df_s = j.at("n_df_s").get<double>();
  c.n_st_s = j.at("n_st_s").get<double>();
  c.p01 = j.at("p01").get<double>();
  c.p11 = j.at("p11").get<double>();
  c.p02 = j.at("p02").get<double>();
  c.p12 = j.at("p12").get<double>();
  return c;
}

Json to_json(const StftParams& params) {
  return Json{{"window_len", params.window_len},
              {"hop", params.hop},
              {"window", to_string(params.window)},
              {"fft_len", params.fft_len}};
}

StftParams stft_params_from_json(const Json& j) {
  StftParams p;
  p.window_len = j.value("window_len", 1024);
  p.hop = j.value("hop", 256);
  p.window = window_kind_from_string(j.value("window", "sqrt-hann"));
  p.fft_len = j.value("fft_len", p.window_len);
  p.validate();
  return p;
}

namespace {
Json taps_to_json(const std::vector<ReflectionTap>& taps) {
  Json arr = Json::array();
  for (const auto& t : taps)
    arr.push_back(Json{{"toa_s", t.toa_s},
                       {"amplitude", t.amplitude},
                       {"order_index", t.order_index},
                       {"shadow_hf_gain", t.shadow_hf_gain}});
  return arr;
}
}  // namespace

Json brir_sidecar(const Brir& brir, double rt60_s, uint64_t seed) {
  return Json{{"sample_rate_hz", brir.sample_rate_hz},
              {"left_taps", taps_to_json(brir.left_taps)},
              {"right_taps", taps_to_json(brir.right_taps)},
              {"tail_empty", brir.tail.empty()},
              {"tail_onset_s", brir.tail.onset_s},
              {"geometry",
               Json{{"source_pos", to_json(brir.geometry.source_pos)},
                    {"head_position", to_json(brir.geometry.head.position)},
                    {"head_yaw_rad", brir.geometry.head.yaw_rad},
                    {"head_radius_m", brir.geometry.head.radius_m}}},
              {"rt60_s", rt60_s},
              {"seed", seed},
              {"first_reflection_lag_warning", brir.first_reflection_lag_warning}};
}

namespace {
Json localized_to_json(const LocalizationResult::Localized& l) {
  return Json{{"toa_per_channel_s", std::vector<double>(l.toa_per_channel_s.data(),
                                                        l.toa_per_channel_s.data() + l.toa_per_channel_s.size())},
              {"azimuth_rad", l.azimuth_rad},
              {"radius_m", l.radius_m},
              {"position_m", Json::array({l.position_m.x(), l.position_m.y()})},
              {"low_confidence", l.low_confidence}};
}
}  // namespace

Json to_json(const LocalizationResult& loc) {
  return Json{{"direct", localized_to_json(loc.direct)},
              {"reflection", localized_to_json(loc.reflection)}};
}

Json to_json(const EmDiagnostics& diag, const EmState& state) {
  Json beta = Json::array();
  for (const auto& b : state.beta)
    beta.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  Json argmax = Json::array();
  for (size_t l = 0; l < diag.grid_argmax.size(); ++l) {
    const auto& cand = state.grid.per_source[l][static_cast<size_t>(diag.grid_argmax[l])];
    argmax.push_back(Json{{"index", diag.grid_argmax[l]}, {"params", to_json(cand)}});
  }
  return Json{{"loglik_trace", diag.loglik_trace},
              {"max_norm_deviation", diag.max_norm_deviation},
              {"uniform_bins", diag.uniform_bins},
              {"frozen_components", diag.frozen_components},
              {"nonsilent_bins", diag.nonsilent_bins},
              {"beta", beta},
              {"grid_argmax", argmax}};
}

void write_mask_binary(const std::string& path, const ArrayXXd& mask, int source_id) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  // Column f of the (bins x frames) array is written contiguously: the file
  // is row-major (frames x bins).
  const Eigen::ArrayXXf f32 = mask.cast<float>();
  out.write(reinterpret_cast<const char*>(f32.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(f32.size())));
  write_json(path + ".json", Json{{"source_id", source_id},
                                  {"frames", mask.cols()},
                                  {"bins", mask.rows()},
                                  {"dtype", "float32"},
                                  {"order", "frames-major"}});
}

ArrayXXd read_mask_binary(const std::string& path) {
  const Json header = read_json(path + ".json");
  const Eigen::Index frames = header.at("frames").get<Eigen::Index>();
  const Eigen::Index bins = header.at("bins").get<Eigen::Index>();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Eigen::ArrayXXf f32(bins, frames);
  in.read(reinterpret_cast<char*>(f32.data()),
          static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(f32.size())));
  if (!in) throw std::runtime_error("truncated mask file " + path);
  return f32.cast<double>();
}

void write_mask_pgm(const std::string& path, const ArrayXXd& mask) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  const Eigen::Index bins = mask.rows(), frames = mask.cols();
  out << "P5\n" << frames << " " << bins << "\n255\n";
  for (Eigen::Index k = bins - 1; k >= 0; --k)
    for (Eigen::Index m = 0; m < frames; ++m) {
      const int v = static_cast<int>(std::lround(std::clamp(mask(k, m), 0.0, 1.0) * 255.0));
      out.put(static_cast<char>(v));
    }
}

Json init_to_json(const std::vector<SourceInit>& inits, double sample_rate_hz) {
  Json sources = Json::array();
  for (const auto& init : inits)
    sources.push_back(
        Json{{"comb", to_json(init.comb)},
             {"ild_prior_mean_db",
              std::vector<double>(init.ild_mean_db.data(), init.ild_mean_db.data() + init.ild_mean_db.size())},
             {"ild_prior_var", init.ild_var}});
  return Json{{"sample_rate_hz", sample_rate_hz}, {"sources", sources}};
}

std::vector<SourceInit> init_from_json(const Json& j) {
  std::vector<SourceInit> inits;
  for (const auto& s : j.at("sources")) {
    SourceInit init;
    init.comb = comb_params_from_json(s.at("comb"));
    const auto mean = s.at("ild_prior_mean_db").get<std::vector<double>>();
    init.ild_mean_db = Eigen::Map<const ArrayXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    init.ild_var = s.value("ild_prior_var", 100.0);
    inits.push_back(std::move(init));
  }
  if (inits.empty()) throw std::invalid_argument("init file contains no sources");
  return inits;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Json::parse(in);
}

std::string scores_to_csv(const std::vector<SeparationScore>& scores) {
  std::string csv = kScoresCsvHeader;
  csv += "\n";
  char line[512];
  for (const auto& s : scores) {
    std::snprintf(line, sizeof(line), "%s,%s,%.1f,%.1f,%.6f,%.6f,%llu\n", s.scene_id.c_str(),
                  s.method.c_str(), s.target_angle_deg, s.interferer_angle_deg, s.sdr_left_db,
                  s.sdr_right_db, static_cast<unsigned long long>(s.seed));
    csv += line;
  }
  return csv;
}

Json report_to_json(const ExperimentReport& report) {
  Json methods = Json::array();
  for (const auto& m : report.methods) {
    Json angles = Json::object();
    for (const auto& [angle, v] : m.mean_sdr_by_target_angle) {
      char key[32];
      std::snprintf(key, sizeof(key), "%.1f", angle);
      angles[key] = v;
    }
    Json entry{{"method", m.method},
               {"mean_sdr_db", m.mean_sdr_db},
               {"num_scenes", m.num_scenes},
               {"mean_sdr_by_target_angle_deg", angles}};
    if (m.method != report.baseline) {
      entry["p_vs_baseline"] = m.p_vs_baseline;
      entry["t_vs_baseline"] = m.t_vs_baseline;
    }
    methods.push_back(std::move(entry));
  }
  return Json{{"baseline", report.baseline},
              {"scenes_per_method", report.scenes_per_method},
              {"methods", methods}};
}

}  // namespace binsep
