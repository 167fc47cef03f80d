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

#include "binsep/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace binsep {

WindowKind window_kind_from_string(const std::string& name) {
  if (name == "sqrt-hann") return WindowKind::SqrtHann;
  if (name == "hann") return WindowKind::Hann;
  if (name == "hamming") return WindowKind::Hamming;
  throw std::invalid_argument("unknown window kind: " + name);
}

std::string to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::SqrtHann: return "sqrt-hann";
    case WindowKind::Hann: return "hann";
    case WindowKind::Hamming: return "hamming";
  }
  throw std::logic_error("bad WindowKind");
}

void StftParams::validate() const {
  if (window_len <= 0 || hop <= 0) throw std::invalid_argument("window_len and hop must be positive");
  if (hop > window_len) throw std::invalid_argument("hop must not exceed window_len");
  if (fft_len < window_len) throw std::invalid_argument("fft_len must be >= window_len");
  if (fft_len % 2 != 0) throw std::invalid_argument("fft_len must be even");
}

ArrayXd make_window(WindowKind kind, int len) {
  ArrayXd n = ArrayXd::LinSpaced(len, 0.0, static_cast<double>(len - 1));
  ArrayXd hann = 0.5 * (1.0 - (kTwoPi * n / len).cos());
  switch (kind) {
    case WindowKind::Hann: return hann;
    case WindowKind::SqrtHann: return hann.sqrt();
    case WindowKind::Hamming: return 0.54 - 0.46 * (kTwoPi * n / len).cos();
  }
  throw std::logic_error("bad WindowKind");
}

Eigen::Index stft_num_frames(Eigen::Index num_samples, const StftParams& p) {
  const Eigen::Index pad = stft_edge_pad(p);
  return (num_samples - 1 + pad) / p.hop + 1;
}

Spectrogram stft(const Waveform& wave, const StftParams& params) {
  params.validate();
  const Eigen::Index n = wave.samples.size();
  if (n < params.window_len) throw std::invalid_argument("input too short");
  if (!wave.samples.isFinite().all()) throw std::invalid_argument("non-finite samples");

  const Eigen::Index pad = stft_edge_pad(params);
  const Eigen::Index frames = stft_num_frames(n, params);
  const Eigen::Index padded_len = (frames - 1) * params.hop + params.window_len;
  ArrayXd padded = ArrayXd::Zero(padded_len);
  padded.segment(pad, n) = wave.samples;

  const ArrayXd window = make_window(params.window, params.window_len);
  const Eigen::Index bins = params.fft_len / 2 + 1;

  Spectrogram spec;
  spec.params = params;
  spec.sample_rate_hz = wave.sample_rate_hz;
  spec.bins.resize(bins, frames);

  Eigen::FFT<double> fft;
  std::vector<double> frame(params.fft_len, 0.0);
  std::vector<std::complex<double>> out(params.fft_len);
  for (Eigen::Index m = 0; m < frames; ++m) {
    Eigen::Map<ArrayXd>(frame.data(), params.window_len) =
        padded.segment(m * params.hop, params.window_len) * window;
    fft.fwd(out, frame);
    for (Eigen::Index k = 0; k < bins; ++k) spec.bins(k, m) = out[static_cast<size_t>(k)];
  }
  return spec;
}

Waveform istft(const Spectrogram& spec, Eigen::Index length) {
  const StftParams& p = spec.params;
  p.validate();
  if (spec.num_bins() != p.fft_len / 2 + 1) throw std::invalid_argument("bin count inconsistent with fft_len");

  const ArrayXd window = make_window(p.window, p.window_len);
  const Eigen::Index frames = spec.num_frames();
  const Eigen::Index pad = stft_edge_pad(p);
  const Eigen::Index padded_len = (frames - 1) * p.hop + p.window_len;

  // Constant overlap-add check on the analysis*synthesis window product.
  {
    ArrayXd weight = ArrayXd::Zero(2 * p.window_len);
    const ArrayXd wsq = window * window;
    for (Eigen::Index t = 0; t + p.window_len <= weight.size(); t += p.hop) weight.segment(t, p.window_len) += wsq;
    const ArrayXd interior = weight.segment(p.window_len - p.hop, p.hop);
    const double c = interior(0);
    if (c <= 0.0 || (interior - c).abs().maxCoeff() > 1e-9 * c)
      throw std::invalid_argument("window/hop pair does not satisfy COLA");
  }

  ArrayXd acc = ArrayXd::Zero(padded_len);
  ArrayXd weight = ArrayXd::Zero(padded_len);
  const ArrayXd wsq = window * window;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> full(p.fft_len);
  std::vector<double> frame(p.fft_len);
  const Eigen::Index bins = spec.num_bins();
  for (Eigen::Index m = 0; m < frames; ++m) {
    for (Eigen::Index k = 0; k < bins; ++k) full[static_cast<size_t>(k)] = spec.bins(k, m);
    for (Eigen::Index k = bins; k < p.fft_len; ++k)
      full[static_cast<size_t>(k)] = std::conj(full[static_cast<size_t>(p.fft_len - k)]);
    fft.inv(frame, full);
    acc.segment(m * p.hop, p.window_len) +=
        window * Eigen::Map<ArrayXd>(frame.data(), p.window_len);
    weight.segment(m * p.hop, p.window_len) += wsq;
  }

  const double weps = 1e-12 * weight.maxCoeff();
  ArrayXd synth = (weight > weps).select(acc / weight.max(weps), 0.0);

  const Eigen::Index natural = padded_len - 2 * pad;
  const Eigen::Index out_len = length < 0 ? natural : length;
  Waveform out;
  out.sample_rate_hz = spec.sample_rate_hz;
  out.samples = ArrayXd::Zero(out_len);
  const Eigen::Index avail = std::min(out_len, padded_len - pad);
  out.samples.head(avail) = synth.segment(pad, avail);
  return out;
}

}  // namespace binsep
