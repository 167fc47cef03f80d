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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "binsep/dsp.hpp"
#include "binsep/experiment.hpp"
#include "binsep/io.hpp"
#include "binsep/isdar.hpp"
#include "binsep/mixture.hpp"
#include "binsep/wav.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitUsage = 64;
constexpr int kExitNumeric = 70;

using namespace binsep;

std::string angle_tag(double angle_deg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", angle_deg < 0 ? "m" : "p",
                static_cast<int>(std::lround(std::abs(angle_deg))));
  return buf;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig config = experiment_config_from_json(read_json(config_path));
  std::filesystem::create_directories(out_dir);

  Json index = Json::array();
  for (double angle : config.angles_deg) {
    const AngleAssets assets = make_angle_assets(config, angle);
    const std::string tag = angle_tag(angle);

    const StereoWaveform ir = render_ir(assets.brir, brir_support_s(assets.brir) + 1e-3);
    const std::string brir_path = out_dir + "/brir_" + tag + ".wav";
    write_wav(brir_path, ir);
    write_json(out_dir + "/brir_" + tag + ".json",
               brir_sidecar(assets.brir, config.room.rt60_s, config.room.noise_seed));

    ArrayXXd channels(assets.array_rirs.front().samples.size(),
                      static_cast<Eigen::Index>(assets.array_rirs.size()));
    for (size_t i = 0; i < assets.array_rirs.size(); ++i)
      channels.col(static_cast<Eigen::Index>(i)) = assets.array_rirs[i].samples;
    const std::string array_path = out_dir + "/array_" + tag + ".wav";
    write_wav(array_path, channels, config.sample_rate_hz);

    write_json(out_dir + "/init_" + tag + ".json",
               init_to_json({assets.init}, config.sample_rate_hz));
    write_json(out_dir + "/localization_" + tag + ".json", to_json(assets.localization));

    index.push_back(Json{{"angle_deg", angle},
                         {"brir", brir_path},
                         {"array_rirs", array_path},
                         {"tail_empty", assets.brir.tail.empty()}});
  }

  const ArraySpec array = ring_array(config.array_mics, config.array_radius_m);
  Json mics = Json::array();
  for (const auto& m : array.mics) mics.push_back(to_json(m));
  write_json(out_dir + "/array_geometry.json",
             Json{{"mics", mics}, {"reference", to_json(array.reference)}});
  write_json(out_dir + "/synth_index.json", index);
  return kExitOk;
}

int cmd_localize(const std::string& rirs_path, const std::string& geometry_path,
                 const std::string& brir_path, const std::string& out_dir,
                 const std::string& config_path) {
  ExperimentConfig config;
  if (!config_path.empty()) config = experiment_config_from_json(read_json(config_path));

  const AudioBuffer rir_buf = read_wav(rirs_path);
  std::vector<Waveform> rirs;
  for (Eigen::Index c = 0; c < rir_buf.num_channels(); ++c) rirs.push_back(rir_buf.channel(c));

  ArraySpec array;
  const Json geom = read_json(geometry_path);
  for (const auto& m : geom.at("mics")) array.mics.push_back(vec3_from_json(m));
  if (geom.contains("reference")) array.reference = vec3_from_json(geom.at("reference"));
  if (array.mics.size() != rirs.size())
    throw std::invalid_argument("geometry lists a different microphone count than the RIR file");

  const LocalizationResult loc = localize(rirs, array);

  const AudioBuffer brir_buf = read_wav(brir_path);
  if (brir_buf.num_channels() != 2) throw std::invalid_argument("BRIR wav must have two channels");
  Brir brir;  // baked stereo IR, taps unknown
  brir.sample_rate_hz = brir_buf.sample_rate_hz;
  brir.tail.left = brir_buf.channels.col(0);
  brir.tail.right = brir_buf.channels.col(1);

  const HeadPose head;
  SourceInit init;
  init.comb = init_comb_params(loc, head_geometry(head), brir);
  const Brir prior_brir = brir_at_estimated_doa(loc, head, brir.sample_rate_hz);
  const Eigen::Index bins = config.stft.fft_len / 2 + 1;
  const ArrayXd freqs = ArrayXd::LinSpaced(
      bins, 0.0, static_cast<double>(bins - 1) * config.sample_rate_hz / config.stft.fft_len);
  const IldPrior prior = init_ild_prior(prior_brir, freqs);
  init.ild_mean_db = prior.mean_db;
  init.ild_var = prior.var;

  std::filesystem::create_directories(out_dir);
  write_json(out_dir + "/localization.json", to_json(loc));
  write_json(out_dir + "/init.json", init_to_json({init}, config.sample_rate_hz));
  return kExitOk;
}

int cmd_separate(const std::string& mixture_path, const std::string& init_path,
                 const std::string& method, const std::string& out_dir,
                 const std::vector<std::string>& image_paths, const std::string& config_path,
                 bool emit_pgm, uint64_t seed) {
  ExperimentConfig config;
  if (!config_path.empty()) config = experiment_config_from_json(read_json(config_path));

  const AudioBuffer mix_buf = read_wav(mixture_path);
  if (mix_buf.num_channels() != 2) throw std::invalid_argument("mixture must be a stereo wav");
  const StereoWaveform mixture{mix_buf.channel(0), mix_buf.channel(1)};

  std::vector<SourceInit> inits = init_from_json(read_json(init_path));
  std::filesystem::create_directories(out_dir);

  std::vector<SoftMask> masks;
  std::vector<StereoWaveform> separated;
  Json diagnostics;
  if (method == "oracle") {
    if (image_paths.size() < 2)
      throw std::invalid_argument("--method oracle needs --image for every source");
    const Spectrogram left = stft(mixture.left, config.stft);
    const Spectrogram right = stft(mixture.right, config.stft);
    std::vector<ArrayXXd> energies;
    for (const auto& path : image_paths) {
      const AudioBuffer img = read_wav(path);
      if (img.num_channels() != 2) throw std::invalid_argument(path + ": image must be stereo");
      ArrayXd l = ArrayXd::Zero(mixture.left.samples.size());
      ArrayXd r = ArrayXd::Zero(mixture.left.samples.size());
      const Eigen::Index n = std::min(img.channels.rows(), l.size());
      l.head(n) = img.channels.col(0).head(n);
      r.head(n) = img.channels.col(1).head(n);
      const Spectrogram sl = stft({l, config.sample_rate_hz}, config.stft);
      const Spectrogram sr = stft({r, config.sample_rate_hz}, config.stft);
      energies.push_back(sl.bins.abs2() + sr.bins.abs2());
    }
    const std::vector<ArrayXXd> ibm = oracle_mask(energies);
    for (size_t l = 0; l < ibm.size(); ++l) masks.push_back({ibm[l], static_cast<int>(l), false});
    separated = apply_masks(left, right, masks, mixture.left.samples.size());
    diagnostics = Json{{"method", method}, {"num_sources", ibm.size()}};
  } else {
    SeparationRun run = separate_mixture(mixture, inits, method, config.stft, config.em,
                                         config.kappa, seed);
    masks = std::move(run.masks);
    separated = std::move(run.separated);
    diagnostics = Json{{"method", method}};
    if (run.em_state) diagnostics["em"] = to_json(run.em_state->diag, *run.em_state);
  }

  for (size_t l = 0; l < separated.size(); ++l) {
    write_wav(out_dir + "/separated_" + std::to_string(l) + ".wav", separated[l]);
  }
  for (const auto& mask : masks) {
    const std::string stem = mask.garbage ? out_dir + "/mask_garbage"
                                          : out_dir + "/mask_" + std::to_string(mask.source_id);
    write_mask_binary(stem + ".f32", mask.values, mask.garbage ? -1 : mask.source_id);
    if (emit_pgm) write_mask_pgm(stem + ".pgm", mask.values);
  }
  write_json(out_dir + "/diagnostics.json", diagnostics);
  return kExitOk;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig config = experiment_config_from_json(read_json(config_path));
  const ExperimentOutcome outcome = run_experiment(config);
  write_experiment_outputs(outcome, out_dir);
  Eigen::Index failures = 0;
  for (const auto& d : outcome.em_diags)
    if (!d.ok) ++failures;
  std::cout << "scenes: " << outcome.manifest.at("num_scenes") << ", method runs: "
            << outcome.em_diags.size() << ", failures: " << failures << "\n";
  for (const auto& m : outcome.report.methods)
    std::cout << "  " << m.method << ": mean SDR " << m.mean_sdr_db << " dB over " << m.num_scenes
              << " scenes\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binsep - binaural source separation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, rirs_path, geometry_path, brir_path, mixture_path, init_path,
      method;
  std::vector<std::string> image_paths;
  bool emit_pgm = false;
  uint64_t seed = 1;

  auto* synth = app.add_subcommand("synth", "Synthesize BRIRs and array RIRs");
  synth->add_option("--config", config_path, "experiment config JSON")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* loc = app.add_subcommand("localize", "Localize direct sound and first reflection");
  loc->add_option("--rirs", rirs_path, "multichannel array RIR wav")->required();
  loc->add_option("--array", geometry_path, "array geometry JSON")->required();
  loc->add_option("--brir", brir_path, "stereo BRIR wav for amplitude readout")->required();
  loc->add_option("--out", out_dir, "output directory")->required();
  loc->add_option("--config", config_path, "experiment config JSON (STFT defaults)");

  auto* sep = app.add_subcommand("separate", "Separate a stereo mixture");
  sep->add_option("--mixture", mixture_path, "stereo mixture wav")->required();
  sep->add_option("--init", init_path, "initialization JSON")->required();
  sep->add_option("--method", method, "random | messl | ic-messl | er-messl | eric-messl | oracle")
      ->required();
  sep->add_option("--out", out_dir, "output directory")->required();
  sep->add_option("--image", image_paths, "clean stereo source image wav (oracle)");
  sep->add_option("--config", config_path, "experiment config JSON");
  sep->add_option("--seed", seed, "seed for the random method");
  sep->add_flag("--pgm", emit_pgm, "also write PGM mask images");

  auto* exp = app.add_subcommand("experiment", "Run a full seeded experiment");
  exp->add_option("--config", config_path, "experiment config JSON")->required();
  exp->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir);
    if (loc->parsed()) return cmd_localize(rirs_path, geometry_path, brir_path, out_dir, config_path);
    if (sep->parsed())
      return cmd_separate(mixture_path, init_path, method, out_dir, image_paths, config_path,
                          emit_pgm, seed);
    if (exp->parsed()) return cmd_experiment(config_path, out_dir);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
