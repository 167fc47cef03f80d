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

#include "binsep/isdar.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "binsep/dsp.hpp"

namespace binsep {
namespace {

constexpr double kReflWindowLo = 5e-3;
constexpr double kReflWindowHi = 40e-3;
constexpr double kPeakOverNoise = 4.0;       // significance threshold, in robust sigmas
constexpr double kMadToSigma = 0.6744897501960817;

double parabolic_offset(double ym1, double y0, double yp1) {
  const double denom = ym1 - 2.0 * y0 + yp1;
  if (std::abs(denom) < 1e-30) return 0.0;
  return std::clamp(0.5 * (ym1 - yp1) / denom, -0.5, 0.5);
}

double refine_peak(const ArrayXd& mag, Eigen::Index k) {
  if (k <= 0 || k + 1 >= mag.size()) return static_cast<double>(k);
  return static_cast<double>(k) + parabolic_offset(mag(k - 1), mag(k), mag(k + 1));
}

bool is_local_max(const ArrayXd& mag, Eigen::Index k) {
  const double left = k > 0 ? mag(k - 1) : 0.0;
  const double right = k + 1 < mag.size() ? mag(k + 1) : 0.0;
  return mag(k) >= left && mag(k) >= right;
}

}  // namespace

std::vector<ToaEstimate> estimate_toas(const std::vector<Waveform>& rirs) {
  std::vector<ToaEstimate> out;
  out.reserve(rirs.size());
  for (const Waveform& rir : rirs) {
    const double fs = rir.sample_rate_hz;
    const ArrayXd mag = rir.samples.abs();
    const double global_max = mag.maxCoeff();
    if (!(global_max > 0.0)) throw std::runtime_error("RIR is all zero");

    Eigen::Index direct_idx = -1;
    for (Eigen::Index k = 0; k < mag.size(); ++k) {
      if (mag(k) > 0.5 * global_max && is_local_max(mag, k)) {
        direct_idx = k;
        break;
      }
    }
    if (direct_idx < 0) throw std::runtime_error("no direct-sound peak found");
    const double direct_s = refine_peak(mag, direct_idx) / fs;

    const Eigen::Index lo =
        std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil((direct_s + kReflWindowLo) * fs)));
    const Eigen::Index hi =
        std::min<Eigen::Index>(mag.size(), static_cast<Eigen::Index>(std::floor((direct_s + kReflWindowHi) * fs)) + 1);
    if (hi <= lo) throw std::runtime_error("no specular reflection found");

    ArrayXd window = mag.segment(lo, hi - lo);
    Eigen::Index peak_rel = 0;
    window.maxCoeff(&peak_rel);
    const Eigen::Index peak_idx = lo + peak_rel;

    std::vector<double> sorted(window.data(), window.data() + window.size());
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double noise_sigma = sorted[sorted.size() / 2] / kMadToSigma;
    if (!(mag(peak_idx) > 0.0) || !is_local_max(mag, peak_idx) ||
        mag(peak_idx) < kPeakOverNoise * noise_sigma)
      throw std::runtime_error("no specular reflection found");

    out.push_back({direct_s, refine_peak(mag, peak_idx) / fs});
  }
  return out;
}

DoaEstimate das_doa(const std::vector<Waveform>& rirs, const ArraySpec& array, double t_begin_s,
                    double t_end_s) {
  if (rirs.size() != array.mics.size() || rirs.size() < 2)
    throw std::invalid_argument("need one RIR per microphone, at least two");
  const double fs = rirs.front().sample_rate_hz;
  const Eigen::Index i0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(t_begin_s * fs)));
  const Eigen::Index i1 = static_cast<Eigen::Index>(std::ceil(t_end_s * fs));
  const Eigen::Index seg_len = i1 - i0;
  if (seg_len < 4) throw std::invalid_argument("analysis window too short");

  Eigen::Index fft_len = 8;
  while (fft_len < 2 * seg_len) fft_len <<= 1;

  Eigen::FFT<double> fft;
  const Eigen::Index bins = fft_len / 2;
  std::vector<Eigen::ArrayXcd> spectra;
  for (const Waveform& rir : rirs) {
    std::vector<double> seg(fft_len, 0.0);
    for (Eigen::Index i = 0; i < seg_len; ++i)
      if (i0 + i < rir.samples.size()) seg[static_cast<size_t>(i)] = rir.samples(i0 + i);
    std::vector<std::complex<double>> full(fft_len);
    fft.fwd(full, seg);
    spectra.emplace_back(Eigen::Map<Eigen::ArrayXcd>(full.data(), bins));
  }

  const ArrayXd omega = ArrayXd::LinSpaced(bins, 0.0, static_cast<double>(bins - 1)) * (kTwoPi * fs / fft_len);

  ArrayXd power(360);
  for (int d = 0; d < 360; ++d) {
    const double theta = (d - 180) * std::numbers::pi / 180.0;
    const Vec3 u{std::cos(theta), std::sin(theta), 0.0};
    Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(bins);
    for (size_t i = 0; i < spectra.size(); ++i) {
      const double lead = (array.mics[i] - array.reference).dot(u) / kSpeedOfSound;
      acc += spectra[i] * (std::complex<double>(0.0, -1.0) * omega * lead).exp();
    }
    power(d) = acc.abs2().sum();
  }

  Eigen::Index best = 0;
  power.maxCoeff(&best);
  const double ym1 = power((best + 359) % 360);
  const double yp1 = power((best + 1) % 360);
  const double deg = static_cast<double>(best - 180) + parabolic_offset(ym1, power(best), yp1);

  DoaEstimate est;
  est.azimuth_rad = wrap_phase(deg * std::numbers::pi / 180.0);
  const double pmin = power.minCoeff();
  est.low_confidence = !(power(best) > 0.0) || 10.0 * std::log10(power(best) / std::max(pmin, 1e-300)) < 1.0;
  return est;
}

LocalizationResult localize(const std::vector<Waveform>& rirs, const ArraySpec& array) {
  const std::vector<ToaEstimate> toas = estimate_toas(rirs);
  const double fs = rirs.front().sample_rate_hz;
  (void)fs;

  auto gather = [&](auto member) {
    ArrayXd v(static_cast<Eigen::Index>(toas.size()));
    for (size_t i = 0; i < toas.size(); ++i) v(static_cast<Eigen::Index>(i)) = toas[i].*member;
    return v;
  };

  LocalizationResult out;
  const ArrayXd direct = gather(&ToaEstimate::direct_s);
  const ArrayXd refl = gather(&ToaEstimate::reflection_s);

  auto fill = [&](LocalizationResult::Localized& dst, const ArrayXd& toa) {
    const DoaEstimate doa = das_doa(rirs, array, toa.minCoeff() - 0.5e-3, toa.maxCoeff() + 1.5e-3);
    dst.toa_per_channel_s = toa;
    dst.azimuth_rad = doa.azimuth_rad;
    dst.low_confidence = doa.low_confidence;
    dst.radius_m = (toa * kSpeedOfSound).mean();
    dst.position_m = {dst.radius_m * std::cos(dst.azimuth_rad), dst.radius_m * std::sin(dst.azimuth_rad)};
  };
  fill(out.direct, direct);
  fill(out.reflection, refl);
  return out;
}

LocalizationResult translate(LocalizationResult loc, const Eigen::Vector2d& offset) {
  for (LocalizationResult::Localized* part : {&loc.direct, &loc.reflection}) {
    part->position_m += offset;
    part->radius_m = part->position_m.norm();
    part->azimuth_rad = std::atan2(part->position_m.y(), part->position_m.x());
  }
  return loc;
}

HeadGeometry head_geometry(const HeadPose& pose) {
  return {left_ear(pose), right_ear(pose), pose.position, pose.radius_m};
}

namespace {

// Matched-kernel amplitude readout: correlates the rendered IR with the
// fractional-delay kernel near the predicted arrival time.
double read_amplitude(const ArrayXd& ir, double fs, double predicted_toa_s) {
  const double pos = predicted_toa_s * fs;
  if (pos < 0.0 || static_cast<Eigen::Index>(std::floor(pos)) + 5 >= ir.size())
    throw std::runtime_error("predicted TOA outside BRIR support");

  double best_amp = 0.0, best_score = -1.0;
  for (double dt = -2.0; dt <= 2.0; dt += 0.05) {
    const double t = pos + dt;
    const Eigen::Index base = static_cast<Eigen::Index>(std::floor(t)) - 3;
    double num = 0.0, den = 0.0;
    for (int j = 0; j < 8; ++j) {
      const Eigen::Index idx = base + j;
      if (idx < 0 || idx >= ir.size()) continue;
      const double g = frac_delay_kernel(static_cast<double>(idx) - t);
      num += ir(idx) * g;
      den += g * g;
    }
    if (den <= 0.0) continue;
    const double amp = num / den;
    if (std::abs(amp) > best_score) {
      best_score = std::abs(amp);
      best_amp = amp;
    }
  }
  return best_amp;
}

Vec3 to_head_frame(const Eigen::Vector2d& pos, const Vec3& center) {
  return center + Vec3{pos.x(), pos.y(), 0.0};
}

}  // namespace

CombParams init_comb_params(const LocalizationResult& loc, const HeadGeometry& head, const Brir& brir) {
  const Vec3 b0 = to_head_frame(loc.direct.position_m, head.center);
  const Vec3 b1 = to_head_frame(loc.reflection.position_m, head.center);

  const double d0l = (b0 - head.left_ear).norm();
  const double d0r = (b0 - head.right_ear).norm();
  const double d1l = (b1 - head.left_ear).norm();
  const double d1r = (b1 - head.right_ear).norm();

  CombParams comb;
  comb.n_ds_s = (d0r - d0l) / kSpeedOfSound;
  comb.n_df_s = std::max(0.0, (d1l - d0l) / kSpeedOfSound);
  comb.n_st_s = (d1r - d1l) / kSpeedOfSound;

  const StereoWaveform ir = render_ir(brir, brir_support_s(brir) + 1e-3);
  const double fs = brir.sample_rate_hz;
  comb.p01 = read_amplitude(ir.left.samples, fs, d0l / kSpeedOfSound);
  comb.p11 = read_amplitude(ir.left.samples, fs, d1l / kSpeedOfSound);
  comb.p02 = read_amplitude(ir.right.samples, fs, d0r / kSpeedOfSound);
  comb.p12 = read_amplitude(ir.right.samples, fs, d1r / kSpeedOfSound);
  if (comb.p01 == 0.0) comb.p01 = 1e-6;
  if (comb.p02 == 0.0) comb.p02 = 1e-6;
  return comb;
}

IldPrior init_ild_prior(const Brir& brir_at_doa, const ArrayXd& freqs_hz) {
  return {ild_model(brir_at_doa, freqs_hz), 100.0};
}

Brir brir_at_estimated_doa(const LocalizationResult& loc, const HeadPose& head,
                           double sample_rate_hz) {
  const Vec3 b0 = to_head_frame(loc.direct.position_m, head.position);
  return brir_from_arrivals({{b0, 1.0, 0}}, head, sample_rate_hz);
}

}  // namespace binsep
