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

#include "binsep/acoustics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "binsep/dsp.hpp"
#include "binsep/rng.hpp"

namespace binsep {
namespace {

constexpr int kKernelHalf = 4;  // 8-point fractional-delay kernel
constexpr double kShadowCutoffHz = 1500.0;
constexpr int kShadowTailLen = 64;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// First-order shelf: unity at DC, `hf_gain` at Nyquist, knee near 1.5 kHz.
struct Shelf {
  double b0, b1, a1;
};

Shelf shadow_shelf(double hf_gain, double fs) {
  const double k = std::tan(std::numbers::pi * kShadowCutoffHz / fs);
  return {(k + hf_gain) / (k + 1.0), (k - hf_gain) / (k + 1.0), (k - 1.0) / (k + 1.0)};
}

void add_tap(ArrayXd& out, double fs, const ReflectionTap& tap) {
  const double pos = tap.toa_s * fs;
  const Eigen::Index base = static_cast<Eigen::Index>(std::floor(pos)) - (kKernelHalf - 1);
  double raw[2 * kKernelHalf + kShadowTailLen] = {0.0};
  for (int j = 0; j < 2 * kKernelHalf; ++j)
    raw[j] = tap.amplitude * frac_delay_kernel(static_cast<double>(base + j) - pos);

  int len = 2 * kKernelHalf;
  if (tap.shadow_hf_gain < 1.0) {
    const Shelf s = shadow_shelf(tap.shadow_hf_gain, fs);
    double prev_x = 0.0, prev_y = 0.0;
    len += kShadowTailLen;
    for (int j = 0; j < len; ++j) {
      const double x = raw[j];
      const double y = s.b0 * x + s.b1 * prev_x - s.a1 * prev_y;
      prev_x = x;
      prev_y = y;
      raw[j] = y;
    }
  }
  for (int j = 0; j < len; ++j) {
    const Eigen::Index idx = base + j;
    if (idx >= 0 && idx < out.size()) out(idx) += raw[j];
  }
}

double direct_toa(const std::vector<ReflectionTap>& taps) {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& tap : taps)
    if (tap.order_index == 0) t = std::min(t, tap.toa_s);
  if (!std::isfinite(t))
    for (const auto& tap : taps) t = std::min(t, tap.toa_s);
  return t;
}

double last_tap_toa(const Brir& brir) {
  double t = 0.0;
  for (const auto& tap : brir.left_taps) t = std::max(t, tap.toa_s);
  for (const auto& tap : brir.right_taps) t = std::max(t, tap.toa_s);
  return t;
}

ArrayXd decay_envelope(double sigma0, double rt60_s, Eigen::Index len, double fs) {
  const double decay = std::log(1e6) / (2.0 * rt60_s);  // amplitude rate
  ArrayXd env(len);
  for (Eigen::Index i = 0; i < len; ++i)
    env(i) = sigma0 * std::exp(-decay * static_cast<double>(i) / fs);
  return env;
}

ArrayXd exponential_tail(Rng& rng, double sigma0, double rt60_s, Eigen::Index len, double fs) {
  return decay_envelope(sigma0, rt60_s, len, fs) * rng.gaussian_vector(len);
}

// Binaural late tail with the diffuse-field interaural coherence profile
// sinc(2 pi f d / c): coherent at low frequency, decorrelated above c/(2d).
std::pair<ArrayXd, ArrayXd> diffuse_tail_pair(Rng& rng, double sigma0, double rt60_s,
                                              Eigen::Index len, double fs, double ear_distance_m) {
  ArrayXd n1 = rng.gaussian_vector(len);
  ArrayXd n2 = rng.gaussian_vector(len);

  Eigen::Index fft_len = 4;
  while (fft_len < len) fft_len <<= 1;
  std::vector<double> a(fft_len, 0.0), b(fft_len, 0.0);
  Eigen::Map<ArrayXd>(a.data(), len) = n1;
  Eigen::Map<ArrayXd>(b.data(), len) = n2;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa(fft_len), fb(fft_len);
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (Eigen::Index i = 0; i < fft_len; ++i) {
    const double f = std::min<Eigen::Index>(i, fft_len - i) * fs / static_cast<double>(fft_len);
    const double x = kTwoPi * f * ear_distance_m / kSpeedOfSound;
    const double coh = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
    fb[i] = coh * fa[i] + std::sqrt(std::max(0.0, 1.0 - coh * coh)) * fb[i];
  }
  std::vector<double> mixed(fft_len);
  fft.inv(mixed, fb);

  const ArrayXd env = decay_envelope(sigma0, rt60_s, len, fs);
  return {env * n1, env * Eigen::Map<ArrayXd>(mixed.data(), len)};
}

}  // namespace

double frac_delay_kernel(double u) {
  if (std::abs(u) >= kKernelHalf) return 0.0;
  return sinc(u) * 0.5 * (1.0 + std::cos(std::numbers::pi * u / kKernelHalf));
}

void RoomSpec::validate() const {
  if (rt60_s < 0.0) throw std::invalid_argument("rt60_s must be non-negative");
  if (tail_onset_s <= 0.0) throw std::invalid_argument("tail_onset_s must be positive");
  for (const auto& r : reflectors)
    if (r.coefficient < 0.0 || r.coefficient > 1.0)
      throw std::invalid_argument("reflection coefficient outside [0, 1]");
}

ArraySpec ring_array(int num_mics, double radius_m, const Vec3& center) {
  if (num_mics < 2) throw std::invalid_argument("need at least 2 microphones");
  ArraySpec spec;
  spec.reference = center;
  spec.mics.reserve(num_mics);
  for (int i = 0; i < num_mics; ++i) {
    const double a = kTwoPi * i / num_mics;
    spec.mics.push_back(center + Vec3{radius_m * std::cos(a), radius_m * std::sin(a), 0.0});
  }
  return spec;
}

Brir brir_from_arrivals(const std::vector<Arrival>& arrivals, const HeadPose& head,
                        double sample_rate_hz) {
  Brir brir;
  brir.sample_rate_hz = sample_rate_hz;
  brir.geometry.head = head;
  if (!arrivals.empty()) brir.geometry.source_pos = arrivals.front().position;

  const Vec3 ears[2] = {left_ear(head), right_ear(head)};
  for (const auto& arrival : arrivals) {
    const double s = lateral_sine(head, arrival.position);
    for (int ear = 0; ear < 2; ++ear) {
      const double dist = (arrival.position - ears[ear]).norm();
      if (!(dist > 1e-9)) throw std::invalid_argument("source coincides with an ear");
      const double contralateral = ear == 0 ? std::max(0.0, -s) : std::max(0.0, s);
      ReflectionTap tap;
      tap.toa_s = dist / kSpeedOfSound;
      tap.amplitude = arrival.gain / dist;
      tap.order_index = arrival.order_index;
      tap.shadow_hf_gain = 1.0 - 0.5 * contralateral;
      (ear == 0 ? brir.left_taps : brir.right_taps).push_back(tap);
    }
  }
  return brir;
}

Brir synthesize_brir(const RoomSpec& room, const Vec3& source_pos, const HeadPose& head,
                     double sample_rate_hz) {
  room.validate();

  std::vector<Arrival> arrivals;
  arrivals.push_back({source_pos, 1.0, 0});
  std::vector<Arrival> reflections;
  for (const auto& reflector : room.reflectors) {
    if (reflector.coefficient == 0.0) continue;  // no energy, no tap
    reflections.push_back({image_source(source_pos, reflector.plane), reflector.coefficient, -1});
  }
  std::sort(reflections.begin(), reflections.end(), [&](const Arrival& a, const Arrival& b) {
    return (a.position - head.position).norm() < (b.position - head.position).norm();
  });
  for (size_t e = 0; e < reflections.size(); ++e) {
    reflections[e].order_index = static_cast<int>(e) + 1;
    arrivals.push_back(reflections[e]);
  }

  Brir brir = brir_from_arrivals(arrivals, head, sample_rate_hz);
  brir.geometry.source_pos = source_pos;

  if (!reflections.empty()) {
    const double lag = (reflections.front().position - head.position).norm() / kSpeedOfSound -
                       (source_pos - head.position).norm() / kSpeedOfSound;
    if (lag < 5e-3 || lag > 40e-3) brir.first_reflection_lag_warning = true;
  }

  if (room.rt60_s > 0.0) {
    const double t0 = direct_toa(brir.left_taps);
    const double direct_amp =
        0.5 * (std::abs(brir.left_taps.front().amplitude) + std::abs(brir.right_taps.front().amplitude));
    const double sigma0 = room.tail_gain * direct_amp;
    const Eigen::Index len = static_cast<Eigen::Index>(std::ceil(1.5 * room.rt60_s * sample_rate_hz));
    brir.tail.onset_s = t0 + room.tail_onset_s;
    Rng rng(mix_seed(room.noise_seed, 0));
    std::tie(brir.tail.left, brir.tail.right) = diffuse_tail_pair(
        rng, sigma0, room.rt60_s, len, sample_rate_hz, 2.0 * head.radius_m);
  }
  return brir;
}

std::vector<Waveform> synthesize_array_rirs(const RoomSpec& room, const Vec3& source_pos,
                                            const ArraySpec& array, double sample_rate_hz) {
  room.validate();
  if (array.mics.size() < 2) throw std::invalid_argument("array needs at least 2 microphones");

  std::vector<Vec3> positions;
  positions.push_back(source_pos);
  std::vector<std::pair<Vec3, double>> reflections;
  for (const auto& reflector : room.reflectors) {
    if (reflector.coefficient == 0.0) continue;
    reflections.emplace_back(image_source(source_pos, reflector.plane), reflector.coefficient);
  }
  std::sort(reflections.begin(), reflections.end(), [&](const auto& a, const auto& b) {
    return (a.first - array.reference).norm() < (b.first - array.reference).norm();
  });

  std::vector<Waveform> rirs;
  rirs.reserve(array.mics.size());
  double support = 0.0;
  std::vector<std::vector<ReflectionTap>> taps(array.mics.size());
  for (size_t i = 0; i < array.mics.size(); ++i) {
    const Vec3& mic = array.mics[i];
    auto add = [&](const Vec3& pos, double gain, int order) {
      const double dist = (pos - mic).norm();
      if (!(dist > 1e-9)) throw std::invalid_argument("source coincides with a microphone");
      taps[i].push_back({dist / kSpeedOfSound, gain / dist, order, 1.0});
      support = std::max(support, dist / kSpeedOfSound);
    };
    add(source_pos, 1.0, 0);
    for (size_t e = 0; e < reflections.size(); ++e)
      add(reflections[e].first, reflections[e].second, static_cast<int>(e) + 1);
  }

  const double tail_start = (source_pos - array.reference).norm() / kSpeedOfSound + room.tail_onset_s;
  const double tail_len_s = room.rt60_s > 0.0 ? 1.5 * room.rt60_s : 0.0;
  const double length_s = std::max(support, tail_start + tail_len_s) + 16.0 / sample_rate_hz;

  for (size_t i = 0; i < array.mics.size(); ++i) {
    Waveform rir = render_taps(taps[i], sample_rate_hz, length_s);
    if (room.rt60_s > 0.0) {
      const double direct_amp = std::abs(taps[i].front().amplitude);
      Rng rng(mix_seed(room.noise_seed, 100 + i));
      const Eigen::Index len = static_cast<Eigen::Index>(std::ceil(tail_len_s * sample_rate_hz));
      ArrayXd tail = exponential_tail(rng, room.tail_gain * direct_amp, room.rt60_s, len, sample_rate_hz);
      const Eigen::Index at = static_cast<Eigen::Index>(std::llround(tail_start * sample_rate_hz));
      const Eigen::Index n = std::min(len, rir.samples.size() - at);
      if (n > 0) rir.samples.segment(at, n) += tail.head(n);
    }
    rirs.push_back(std::move(rir));
  }
  return rirs;
}

double brir_support_s(const Brir& brir) {
  double t = last_tap_toa(brir) + (kKernelHalf + kShadowTailLen) / brir.sample_rate_hz;
  if (!brir.tail.empty())
    t = std::max(t, brir.tail.onset_s +
                        std::max(brir.tail.left.size(), brir.tail.right.size()) / brir.sample_rate_hz);
  return t;
}

Waveform render_taps(const std::vector<ReflectionTap>& taps, double sample_rate_hz, double length_s) {
  const Eigen::Index n = static_cast<Eigen::Index>(std::llround(length_s * sample_rate_hz));
  ArrayXd out = ArrayXd::Zero(n);
  for (const auto& tap : taps) {
    if (static_cast<Eigen::Index>(std::floor(tap.toa_s * sample_rate_hz)) + kKernelHalf >= n)
      throw std::invalid_argument("render length too short for tap");
    add_tap(out, sample_rate_hz, tap);
  }
  return {std::move(out), sample_rate_hz};
}

StereoWaveform render_ir(const Brir& brir, double length_s) {
  StereoWaveform out;
  out.left = render_taps(brir.left_taps, brir.sample_rate_hz, length_s);
  out.right = render_taps(brir.right_taps, brir.sample_rate_hz, length_s);
  if (!brir.tail.empty()) {
    const Eigen::Index at = static_cast<Eigen::Index>(std::llround(brir.tail.onset_s * brir.sample_rate_hz));
    auto add = [&](ArrayXd& dst, const ArrayXd& tail) {
      if (at < 0 || tail.size() == 0) return;
      const Eigen::Index n = std::min(tail.size(), dst.size() - at);
      if (n > 0) dst.segment(at, n) += tail.head(n);
    };
    add(out.left.samples, brir.tail.left);
    add(out.right.samples, brir.tail.right);
  }
  return out;
}

Brir direct_path_reference(const Brir& brir, double window_ms) {
  if (!(window_ms > 0.0)) throw std::invalid_argument("window_ms must be positive");
  const double fs = brir.sample_rate_hz;
  const StereoWaveform ir = render_ir(brir, brir_support_s(brir) + 1e-3);
  const Eigen::Index w = std::max<Eigen::Index>(3, static_cast<Eigen::Index>(std::llround(window_ms * 1e-3 * fs)));

  Brir ref;
  ref.sample_rate_hz = fs;
  ref.geometry = brir.geometry;

  Eigen::Index starts[2];
  const std::vector<ReflectionTap>* taps[2] = {&brir.left_taps, &brir.right_taps};
  for (int ear = 0; ear < 2; ++ear) {
    const double toa = direct_toa(*taps[ear]);
    starts[ear] = static_cast<Eigen::Index>(std::llround(toa * fs)) - w / 2;
  }
  ArrayXd window(w);
  for (Eigen::Index i = 0; i < w; ++i)
    window(i) = 0.54 - 0.46 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(w - 1));

  // Segments share one origin so the baked component preserves sample times.
  const Eigen::Index origin = std::max<Eigen::Index>(0, std::min(starts[0], starts[1]));
  const Eigen::Index end = std::max(starts[0], starts[1]) + w;
  const ArrayXd* irs[2] = {&ir.left.samples, &ir.right.samples};
  ArrayXd* dst[2] = {&ref.tail.left, &ref.tail.right};
  for (int ear = 0; ear < 2; ++ear) {
    ArrayXd seg = ArrayXd::Zero(end - origin);
    for (Eigen::Index idx = origin; idx < end; ++idx) {
      const Eigen::Index wi = idx - starts[ear];
      if (wi >= 0 && wi < w && idx >= 0 && idx < irs[ear]->size())
        seg(idx - origin) = (*irs[ear])(idx)*window(wi);
    }
    *dst[ear] = std::move(seg);
  }
  ref.tail.onset_s = static_cast<double>(origin) / fs;
  return ref;
}

double measure_drr(const Brir& brir) {
  const double fs = brir.sample_rate_hz;
  const StereoWaveform ir = render_ir(brir, brir_support_s(brir) + 1e-3);
  const double half = 2.5e-3;

  double direct_energy = 0.0, total_energy = 0.0;
  const std::vector<ReflectionTap>* taps[2] = {&brir.left_taps, &brir.right_taps};
  const ArrayXd* irs[2] = {&ir.left.samples, &ir.right.samples};
  for (int ear = 0; ear < 2; ++ear) {
    const double toa = direct_toa(*taps[ear]);
    const Eigen::Index a = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor((toa - half) * fs)));
    const Eigen::Index b =
        std::min<Eigen::Index>(irs[ear]->size(), static_cast<Eigen::Index>(std::ceil((toa + half) * fs)) + 1);
    total_energy += irs[ear]->square().sum();
    if (b > a) direct_energy += irs[ear]->segment(a, b - a).square().sum();
  }
  if (!(total_energy > 0.0)) throw std::invalid_argument("rendered IR is zero");
  const double rest = total_energy - direct_energy;
  if (rest <= 1e-20 * total_energy) return 100.0;
  return std::clamp(10.0 * std::log10(direct_energy / rest), -100.0, 100.0);
}

}  // namespace binsep
