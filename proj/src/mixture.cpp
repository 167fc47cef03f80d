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

#include "binsep/mixture.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <vector>

#include "binsep/dsp.hpp"
#include "binsep/rng.hpp"

namespace binsep {

Waveform rms_normalize(const Waveform& wave) {
  const double rms = std::sqrt(wave.samples.square().mean());
  if (!(rms > 0.0)) throw std::invalid_argument("cannot normalize an all-zero signal");
  return {wave.samples / rms, wave.sample_rate_hz};
}

Waveform convolve(const Waveform& x, const Waveform& ir) {
  if (x.sample_rate_hz != ir.sample_rate_hz) throw std::invalid_argument("sample-rate mismatch");
  const Eigen::Index out_len = x.samples.size() + ir.samples.size() - 1;
  Eigen::Index fft_len = 1;
  while (fft_len < out_len) fft_len <<= 1;

  Eigen::FFT<double> fft;
  std::vector<double> a(fft_len, 0.0), b(fft_len, 0.0);
  Eigen::Map<ArrayXd>(a.data(), x.samples.size()) = x.samples;
  Eigen::Map<ArrayXd>(b.data(), ir.samples.size()) = ir.samples;
  std::vector<std::complex<double>> fa(fft_len), fb(fft_len);
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (Eigen::Index i = 0; i < fft_len; ++i) fa[i] *= fb[i];
  std::vector<double> y(fft_len);
  fft.inv(y, fa);
  return {Eigen::Map<ArrayXd>(y.data(), out_len), x.sample_rate_hz};
}

RenderedScene render_scene(const MixtureScene& scene) {
  if (scene.sources.empty()) throw std::invalid_argument("scene needs at least one source");
  const double fs = scene.sources.front().utterance.sample_rate_hz;
  for (const auto& src : scene.sources) {
    if (src.utterance.sample_rate_hz != fs || src.brir.sample_rate_hz != fs)
      throw std::invalid_argument("sample-rate mismatch");
  }

  RenderedScene out;
  Eigen::Index max_len = 0;
  for (size_t l = 0; l < scene.sources.size(); ++l) {
    const auto& src = scene.sources[l];
    const double gain = l == 0 ? std::pow(10.0, scene.tir_db / 20.0) : 1.0;
    Waveform x = rms_normalize(src.utterance);
    x.samples *= gain;
    const double ir_len = brir_support_s(src.brir) + 1e-3;
    const StereoWaveform ir = render_ir(src.brir, ir_len);
    StereoWaveform image{convolve(x, ir.left), convolve(x, ir.right)};
    max_len = std::max(max_len, image.left.samples.size());
    out.images.push_back(std::move(image));
  }

  out.mixture.left = {ArrayXd::Zero(max_len), fs};
  out.mixture.right = {ArrayXd::Zero(max_len), fs};
  for (auto& image : out.images) {
    auto grow = [&](Waveform& w) {
      if (w.samples.size() < max_len) {
        ArrayXd padded = ArrayXd::Zero(max_len);
        padded.head(w.samples.size()) = w.samples;
        w.samples = std::move(padded);
      }
    };
    grow(image.left);
    grow(image.right);
    out.mixture.left.samples += image.left.samples;
    out.mixture.right.samples += image.right.samples;
  }

  if (scene.snr_db) {
    Rng rng(mix_seed(scene.seed, 0xabcd));
    const double mix_rms = std::sqrt(0.5 * (out.mixture.left.samples.square().mean() +
                                            out.mixture.right.samples.square().mean()));
    const double sigma = mix_rms * std::pow(10.0, -*scene.snr_db / 20.0);
    out.mixture.left.samples += sigma * rng.gaussian_vector(max_len);
    out.mixture.right.samples += sigma * rng.gaussian_vector(max_len);
  }
  return out;
}

InterauralObservation interaural_spectrogram(const Spectrogram& left, const Spectrogram& right) {
  if (left.bins.rows() != right.bins.rows() || left.bins.cols() != right.bins.cols())
    throw std::invalid_argument("spectrogram dimension mismatch");

  constexpr double kSilentEps = 1e-12;
  InterauralObservation obs;
  obs.left_spec = left;
  obs.right_spec = right;
  const ArrayXXd mag_l = left.bins.abs();
  const ArrayXXd mag_r = right.bins.abs();
  obs.silent = mag_l < kSilentEps || mag_r < kSilentEps;
  obs.ild_db = obs.silent.select(0.0, 20.0 * (mag_l.max(kSilentEps) / mag_r.max(kSilentEps)).log10());
  ArrayXXd raw = left.bins.arg() - right.bins.arg();
  obs.ipd_rad = obs.silent.select(0.0, wrap_phase(raw));
  return obs;
}

}  // namespace binsep
