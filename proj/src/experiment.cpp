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

#include "binsep/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <thread>

#include "binsep/dsp.hpp"
#include "binsep/isdar.hpp"
#include "binsep/mixture.hpp"
#include "binsep/rng.hpp"
#include "binsep/speechgen.hpp"
#include "binsep/wav.hpp"

namespace binsep {

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  c.seed = j.value("seed", uint64_t{1});
  c.sample_rate_hz = j.value("sample_rate_hz", 16000.0);
  if (j.contains("stft")) c.stft = stft_params_from_json(j.at("stft"));

  if (j.contains("em")) {
    const Json& e = j.at("em");
    c.em.max_iters = e.value("max_iters", 16);
    c.em.grid_steps = e.value("grid_steps", 5);
    if (e.contains("grid_range_ms")) {
      const auto r = e.at("grid_range_ms").get<std::vector<double>>();
      if (r.size() != 3) throw std::invalid_argument("grid_range_ms needs 3 entries");
      for (int i = 0; i < 3; ++i) c.em.grid_range_s(i) = r[static_cast<size_t>(i)] * 1e-3;
    }
    c.em.variance_floor = e.value("variance_floor", kVarianceFloor);
    c.em.init_ipd_var = e.value("init_ipd_var", 1.0);
  }
  c.kappa = j.value("kappa", 0.5);

  if (j.contains("room")) {
    const Json& r = j.at("room");
    c.room.rt60_s = r.value("rt60_s", 0.0);
    c.room.tail_onset_s = r.value("tail_onset_s", 0.01);
    c.room.tail_gain = r.value("tail_gain", 0.1);
    c.room.noise_seed = r.value("noise_seed", c.seed);
    if (r.contains("reflectors"))
      for (const auto& refl : r.at("reflectors"))
        c.room.reflectors.push_back(
            {{vec3_from_json(refl.at("point")), vec3_from_json(refl.at("normal"))},
             refl.at("coefficient").get<double>()});
    c.room.validate();
  }

  c.source_distance_m = j.value("source_distance_m", 6.0);
  c.source_height_m = j.value("source_height_m", 0.0);
  if (j.contains("angles_deg")) c.angles_deg = j.at("angles_deg").get<std::vector<double>>();
  c.num_sources = j.value("num_sources", 2);
  c.utterances_per_pair = j.value("utterances_per_pair", 3);
  c.min_tisa_deg = j.value("min_tisa_deg", 0.0);
  c.utterance_duration_s = j.value("utterance_duration_s", 3.0);
  if (j.contains("utterance_pool")) c.utterance_pool = j.at("utterance_pool").get<std::vector<std::string>>();
  c.synthetic_pool_size = j.value("synthetic_pool_size", 15);
  if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
  c.tir_db = j.value("tir_db", 0.0);
  if (j.contains("snr_db") && !j.at("snr_db").is_null()) c.snr_db = j.at("snr_db").get<double>();
  c.array_mics = j.value("array_mics", 8);
  c.array_radius_m = j.value("array_radius_m", 0.106);

  if (c.num_sources != 2) throw std::invalid_argument("experiments support num_sources == 2");
  if (c.utterances_per_pair < 1) throw std::invalid_argument("utterances_per_pair must be >= 1");
  std::set<double> distinct(c.angles_deg.begin(), c.angles_deg.end());
  if (distinct.size() != c.angles_deg.size()) throw std::invalid_argument("angles must be distinct");
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json reflectors = Json::array();
  for (const auto& r : c.room.reflectors)
    reflectors.push_back(Json{{"point", to_json(r.plane.point)},
                              {"normal", to_json(r.plane.normal)},
                              {"coefficient", r.coefficient}});
  Json j{{"seed", c.seed},
         {"sample_rate_hz", c.sample_rate_hz},
         {"stft", to_json(c.stft)},
         {"em",
          Json{{"max_iters", c.em.max_iters},
               {"grid_steps", c.em.grid_steps},
               {"grid_range_ms",
                Json::array({c.em.grid_range_s(0) * 1e3, c.em.grid_range_s(1) * 1e3,
                             c.em.grid_range_s(2) * 1e3})},
               {"variance_floor", c.em.variance_floor},
               {"init_ipd_var", c.em.init_ipd_var}}},
         {"kappa", c.kappa},
         {"room",
          Json{{"rt60_s", c.room.rt60_s},
               {"tail_onset_s", c.room.tail_onset_s},
               {"tail_gain", c.room.tail_gain},
               {"noise_seed", c.room.noise_seed},
               {"reflectors", reflectors}}},
         {"source_distance_m", c.source_distance_m},
         {"source_height_m", c.source_height_m},
         {"angles_deg", c.angles_deg},
         {"num_sources", c.num_sources},
         {"utterances_per_pair", c.utterances_per_pair},
         {"min_tisa_deg", c.min_tisa_deg},
         {"utterance_duration_s", c.utterance_duration_s},
         {"utterance_pool", c.utterance_pool},
         {"synthetic_pool_size", c.synthetic_pool_size},
         {"methods", c.methods},
         {"tir_db", c.tir_db},
         {"array_mics", c.array_mics},
         {"array_radius_m", c.array_radius_m}};
  if (c.snr_db) j["snr_db"] = *c.snr_db;
  else j["snr_db"] = nullptr;
  return j;
}

Eigen::Index count_scenes(int num_angles, int num_sources, int utterances_per_pair) {
  // C(num_angles, num_sources) * U
  Eigen::Index comb = 1;
  for (int i = 0; i < num_sources; ++i) comb = comb * (num_angles - i) / (i + 1);
  return comb * utterances_per_pair;
}

std::vector<SceneSpec> plan_scenes(const ExperimentConfig& config) {
  std::vector<SceneSpec> scenes;
  Eigen::Index index = 0;
  const int pool_size = config.utterance_pool.empty() ? config.synthetic_pool_size
                                                      : static_cast<int>(config.utterance_pool.size());
  for (size_t i = 0; i < config.angles_deg.size(); ++i) {
    for (size_t j = i + 1; j < config.angles_deg.size(); ++j) {
      const double a = config.angles_deg[i], b = config.angles_deg[j];
      if (std::abs(a - b) < config.min_tisa_deg) continue;
      for (int u = 0; u < config.utterances_per_pair; ++u) {
        SceneSpec spec;
        char id[32];
        std::snprintf(id, sizeof(id), "scene_%04d", static_cast<int>(index));
        spec.scene_id = id;
        spec.angles_deg = {a, b};
        spec.seed = mix_seed(config.seed, static_cast<uint64_t>(index));
        Rng rng(spec.seed);
        const int first = rng.uniform_int(0, pool_size - 1);
        int second = rng.uniform_int(0, pool_size - 2);
        if (second >= first) ++second;
        spec.utterance_index = {first, second};
        scenes.push_back(std::move(spec));
        ++index;
      }
    }
  }
  return scenes;
}

namespace {

Vec3 source_position(const ExperimentConfig& config, double angle_deg) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  return {config.source_distance_m * std::cos(a), config.source_distance_m * std::sin(a),
          config.source_height_m};
}

ArrayXd stft_bin_freqs(const ExperimentConfig& config) {
  const Eigen::Index bins = config.stft.fft_len / 2 + 1;
  return ArrayXd::LinSpaced(bins, 0.0,
                            static_cast<double>(bins - 1) * config.sample_rate_hz / config.stft.fft_len);
}

}  // namespace

AngleAssets make_angle_assets(const ExperimentConfig& config, double angle_deg) {
  AngleAssets assets;
  assets.angle_deg = angle_deg;
  const HeadPose head;  // origin, facing +x
  const Vec3 pos = source_position(config, angle_deg);

  RoomSpec room = config.room;
  room.noise_seed = mix_seed(config.room.noise_seed, static_cast<uint64_t>(std::llround(angle_deg * 10.0) + 3600));

  assets.brir = synthesize_brir(room, pos, head, config.sample_rate_hz);
  const ArraySpec array = ring_array(config.array_mics, config.array_radius_m, head.position);
  assets.array_rirs = synthesize_array_rirs(room, pos, array, config.sample_rate_hz);
  assets.localization = localize(assets.array_rirs, array);

  assets.init.comb = init_comb_params(assets.localization, head_geometry(head), assets.brir);
  const Brir prior_brir = brir_at_estimated_doa(assets.localization, head, config.sample_rate_hz);
  const IldPrior prior = init_ild_prior(prior_brir, stft_bin_freqs(config));
  assets.init.ild_mean_db = prior.mean_db;
  assets.init.ild_var = prior.var;
  return assets;
}

int worker_count() {
  if (const char* env = std::getenv("BINSEP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SeparationRun separate_mixture(const StereoWaveform& mixture, const std::vector<SourceInit>& inits,
                               const std::string& method, const StftParams& stft_params,
                               const EmConfig& em_config, double kappa, uint64_t seed) {
  SeparationRun run;
  const Spectrogram left = stft(mixture.left, stft_params);
  const Spectrogram right = stft(mixture.right, stft_params);
  const Eigen::Index length = mixture.left.samples.size();

  if (method == "random") {
    const Eigen::Index num_sources = static_cast<Eigen::Index>(inits.size());
    if (num_sources == 2) {
      const ArrayXXd m = random_mask(left.num_bins(), left.num_frames(), seed);
      run.masks.push_back({m, 0, false});
      run.masks.push_back({1.0 - m, 1, false});
    } else {
      ArrayXXd total = ArrayXXd::Zero(left.num_bins(), left.num_frames());
      std::vector<ArrayXXd> raw;
      for (Eigen::Index l = 0; l < num_sources; ++l) {
        raw.push_back(random_mask(left.num_bins(), left.num_frames(), mix_seed(seed, l)));
        total += raw.back();
      }
      for (Eigen::Index l = 0; l < num_sources; ++l)
        run.masks.push_back({raw[static_cast<size_t>(l)] / total, static_cast<int>(l), false});
    }
    run.separated = apply_masks(left, right, run.masks, length);
    return run;
  }
  if (method == "oracle")
    throw std::invalid_argument("oracle separation requires clean source images");

  EmConfig config = em_config;
  config.variant = variant_from_string(method);
  std::optional<IcMask> ic;
  if (variant_uses_ic(config.variant)) ic = ic_mask(left, right, kappa);

  EmResult result = run_em(interaural_spectrogram(left, right), inits, config, ic);
  std::vector<SoftMask> real_masks(result.masks.begin(), result.masks.end() - 1);
  run.separated = apply_masks(left, right, real_masks, length);
  run.masks = std::move(result.masks);
  run.em_state = std::move(result.state);
  return run;
}

namespace {

struct SceneResult {
  std::vector<SeparationScore> scores;
  std::vector<EmRunDiag> diags;
};

SceneResult run_scene(const ExperimentConfig& config, const SceneSpec& spec,
                      const std::vector<Waveform>& pool,
                      const std::map<double, AngleAssets>& assets) {
  SceneResult result;
  const AngleAssets& target = assets.at(spec.angles_deg[0]);
  const AngleAssets& interferer = assets.at(spec.angles_deg[1]);

  MixtureScene scene;
  scene.sources.push_back({pool[static_cast<size_t>(spec.utterance_index[0])], target.brir});
  scene.sources.push_back({pool[static_cast<size_t>(spec.utterance_index[1])], interferer.brir});
  scene.tir_db = config.tir_db;
  scene.snr_db = config.snr_db;
  scene.seed = spec.seed;

  const RenderedScene rendered = render_scene(scene);
  const Spectrogram left = stft(rendered.mixture.left, config.stft);
  const Spectrogram right = stft(rendered.mixture.right, config.stft);
  const Eigen::Index length = rendered.mixture.left.samples.size();

  // Scale-invariant SDR reference: target utterance through the windowed
  // direct path of its BRIR.
  const Brir ref_brir = direct_path_reference(target.brir, 5.0);
  const StereoWaveform ref_ir = render_ir(ref_brir, brir_support_s(ref_brir) + 1e-3);
  const Waveform target_utt = rms_normalize(scene.sources[0].utterance);
  const Waveform ref_left = convolve(target_utt, ref_ir.left);
  const Waveform ref_right = convolve(target_utt, ref_ir.right);

  const std::vector<SourceInit> inits{target.init, interferer.init};

  for (const std::string& method : config.methods) {
    EmRunDiag diag;
    diag.scene_id = spec.scene_id;
    diag.method = method;
    try {
      StereoWaveform estimate;
      if (method == "oracle") {
        // render_scene pads every image to the mixture length, so the energy
        // grids share the mixture's frame count.
        std::vector<ArrayXXd> energies;
        for (const auto& image : rendered.images) {
          const Spectrogram il = stft(image.left, config.stft);
          const Spectrogram ir = stft(image.right, config.stft);
          energies.push_back(il.bins.abs2() + ir.bins.abs2());
        }
        std::vector<ArrayXXd> ibm = oracle_mask(energies);
        estimate = apply_masks(left, right, {{ibm[0], 0, false}}, length).front();
      } else {
        SeparationRun run = separate_mixture(rendered.mixture, inits, method, config.stft,
                                             config.em, config.kappa, spec.seed);
        estimate = std::move(run.separated.front());
        if (run.em_state) {
          diag.loglik_trace = run.em_state->diag.loglik_trace;
          diag.max_norm_deviation = run.em_state->diag.max_norm_deviation;
        }
      }
      SeparationScore score;
      score.scene_id = spec.scene_id;
      score.method = method;
      score.target_angle_deg = spec.angles_deg[0];
      score.interferer_angle_deg = spec.angles_deg[1];
      score.sdr_left_db = sdr(estimate.left, ref_left);
      score.sdr_right_db = sdr(estimate.right, ref_right);
      score.seed = spec.seed;
      result.scores.push_back(std::move(score));
    } catch (const std::exception& e) {
      diag.ok = false;
      diag.error = e.what();
    }
    result.diags.push_back(std::move(diag));
  }
  return result;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();

  std::vector<Waveform> pool;
  if (config.utterance_pool.empty()) {
    for (int i = 0; i < config.synthetic_pool_size; ++i)
      pool.push_back(synth_utterance(config.sample_rate_hz, config.utterance_duration_s,
                                     mix_seed(config.seed, 9000 + static_cast<uint64_t>(i))));
  } else {
    const Eigen::Index want =
        static_cast<Eigen::Index>(std::llround(config.utterance_duration_s * config.sample_rate_hz));
    for (const auto& path : config.utterance_pool) {
      const AudioBuffer buf = read_wav(path);
      if (buf.sample_rate_hz != config.sample_rate_hz)
        throw std::invalid_argument(path + ": sample rate does not match the experiment");
      Waveform w = buf.channel(0);
      ArrayXd trimmed = ArrayXd::Zero(want);
      trimmed.head(std::min(want, w.samples.size())) = w.samples.head(std::min(want, w.samples.size()));
      pool.push_back({std::move(trimmed), config.sample_rate_hz});
    }
  }

  std::map<double, AngleAssets> assets;
  for (double angle : config.angles_deg) assets.emplace(angle, make_angle_assets(config, angle));
  const auto t_synth = std::chrono::steady_clock::now();

  const std::vector<SceneSpec> scenes = plan_scenes(config);
  std::vector<SceneResult> results(scenes.size());

  const int workers = std::min<int>(worker_count(), static_cast<int>(scenes.size()));
  std::atomic<size_t> next{0};
  auto work = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= scenes.size()) break;
      results[i] = run_scene(config, scenes[i], pool, assets);
    }
  };
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  const auto t_end = std::chrono::steady_clock::now();

  ExperimentOutcome outcome;
  for (auto& r : results) {
    outcome.scores.insert(outcome.scores.end(), r.scores.begin(), r.scores.end());
    outcome.em_diags.insert(outcome.em_diags.end(), r.diags.begin(), r.diags.end());
  }
  std::string baseline = "messl";
  if (std::find(config.methods.begin(), config.methods.end(), baseline) == config.methods.end() &&
      !config.methods.empty())
    baseline = config.methods.front();
  if (!outcome.scores.empty()) outcome.report = aggregate(outcome.scores, baseline);

  const Json config_json = to_json(config);
  outcome.manifest =
      Json{{"tool", "binsep 0.1.0"},
           {"config", config_json},
           {"config_hash", std::to_string(std::hash<std::string>{}(config_json.dump()))},
           {"num_scenes", scenes.size()},
           {"expected_scenes", count_scenes(static_cast<int>(config.angles_deg.size()),
                                            config.num_sources, config.utterances_per_pair)},
           {"wall_clock_s",
            Json{{"synthesis", std::chrono::duration<double>(t_synth - t_start).count()},
                 {"scenes", std::chrono::duration<double>(t_end - t_synth).count()},
                 {"total", std::chrono::duration<double>(t_end - t_start).count()}}}};
  return outcome;
}

void write_experiment_outputs(const ExperimentOutcome& outcome, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir + "/scores.csv", std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write scores.csv");
    csv << scores_to_csv(outcome.scores);
  }
  write_json(out_dir + "/report.json", report_to_json(outcome.report));
  write_json(out_dir + "/manifest.json", outcome.manifest);

  Json diags = Json::array();
  for (const auto& d : outcome.em_diags) {
    Json entry{{"scene_id", d.scene_id}, {"method", d.method}, {"ok", d.ok}};
    if (!d.ok) entry["error"] = d.error;
    if (!d.loglik_trace.empty()) {
      entry["loglik_trace"] = d.loglik_trace;
      entry["max_norm_deviation"] = d.max_norm_deviation;
    }
    diags.push_back(std::move(entry));
  }
  write_json(out_dir + "/em_diagnostics.json", diags);
}

}  // namespace binsep
