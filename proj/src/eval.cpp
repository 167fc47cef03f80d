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

#include "binsep/eval.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "binsep/rng.hpp"

namespace binsep {
namespace {

// Linear correlations via FFT, lags 0..num_lags-1.
// auto(r, k) = sum_n r(n) r(n+k); cross(k) = sum_n e(n) r(n-k).
struct Correlations {
  ArrayXd auto_ref;
  ArrayXd cross;
};

Correlations correlations(const ArrayXd& estimate, const ArrayXd& reference, int num_lags) {
  const Eigen::Index n = reference.size();
  Eigen::Index fft_len = 1;
  while (fft_len < 2 * n) fft_len <<= 1;

  Eigen::FFT<double> fft;
  std::vector<double> buf(fft_len, 0.0);
  std::vector<std::complex<double>> fr(fft_len), fe(fft_len);
  Eigen::Map<ArrayXd>(buf.data(), n) = reference;
  fft.fwd(fr, buf);
  std::fill(buf.begin(), buf.end(), 0.0);
  Eigen::Map<ArrayXd>(buf.data(), estimate.size()) = estimate;
  fft.fwd(fe, buf);

  std::vector<std::complex<double>> prod(fft_len);
  std::vector<double> out(fft_len);
  Correlations c;

  for (Eigen::Index i = 0; i < fft_len; ++i) prod[i] = fr[i] * std::conj(fr[i]);
  fft.inv(out, prod);
  c.auto_ref = Eigen::Map<ArrayXd>(out.data(), num_lags);

  for (Eigen::Index i = 0; i < fft_len; ++i) prod[i] = fe[i] * std::conj(fr[i]);
  fft.inv(out, prod);
  c.cross = Eigen::Map<ArrayXd>(out.data(), num_lags);
  return c;
}

}  // namespace

double sdr(const Waveform& estimate, const Waveform& reference, int num_taps) {
  const Eigen::Index n = std::min(estimate.samples.size(), reference.samples.size());
  if (n < 2) throw std::invalid_argument("signals too short for SDR");
  const ArrayXd e = estimate.samples.head(n);
  const ArrayXd r = reference.samples.head(n);
  const double ref_energy = r.square().sum();
  if (!(ref_energy > 0.0)) throw std::invalid_argument("zero reference signal");
  const double est_energy = e.square().sum();
  if (!(est_energy > 0.0)) return -100.0;

  const int taps = std::min<int>(num_taps, static_cast<int>(n));
  const Correlations c = correlations(e, r, taps);

  // Exact Gram of the truncated delayed family: G(i, j) = sum_{m=0}^{n-1-max(i,j)}
  // r(m) r(m+|i-j|). Starting from the full linear autocorrelation at each lag,
  // peel one product per additional shift.
  Eigen::MatrixXd gram(taps, taps);
  for (int d = 0; d < taps; ++d) {
    double s = c.auto_ref(d);
    for (int m = d; m < taps; ++m) {
      if (m > d) s -= r(n - m) * r(n - m + d);
      gram(m, m - d) = s;
      gram(m - d, m) = s;
    }
  }
  gram.diagonal().array() += 1e-12 * c.auto_ref(0);

  const Eigen::VectorXd coeffs = gram.ldlt().solve(c.cross.matrix());
  // Projection energy via <e, proj> = coeffs . cross; residual = |e|^2 - that.
  const double proj_energy = std::max(0.0, coeffs.dot(c.cross.matrix()));
  const double resid_energy = std::max(0.0, est_energy - proj_energy);

  if (resid_energy <= 1e-20 * est_energy) return 100.0;
  if (proj_energy <= 1e-20 * est_energy) return -100.0;
  return std::clamp(10.0 * std::log10(proj_energy / resid_energy), -100.0, 100.0);
}

std::vector<ArrayXXd> oracle_mask(const std::vector<ArrayXXd>& source_energies) {
  if (source_energies.empty()) throw std::invalid_argument("need at least one source");
  const Eigen::Index bins = source_energies.front().rows();
  const Eigen::Index frames = source_energies.front().cols();
  for (const auto& e : source_energies)
    if (e.rows() != bins || e.cols() != frames) throw std::invalid_argument("energy grid size mismatch");

  std::vector<ArrayXXd> masks(source_energies.size(), ArrayXXd::Zero(bins, frames));
  for (Eigen::Index m = 0; m < frames; ++m)
    for (Eigen::Index k = 0; k < bins; ++k) {
      size_t winner = 0;
      double best = source_energies[0](k, m);
      for (size_t l = 1; l < source_energies.size(); ++l) {
        if (source_energies[l](k, m) > best) {  // strict: ties keep the lowest index
          best = source_energies[l](k, m);
          winner = l;
        }
      }
      masks[winner](k, m) = 1.0;
    }
  return masks;
}

ArrayXXd random_mask(Eigen::Index bins, Eigen::Index frames, uint64_t seed) {
  Rng rng(seed);
  ArrayXXd mask(bins, frames);
  for (Eigen::Index m = 0; m < frames; ++m)
    for (Eigen::Index k = 0; k < bins; ++k) mask(k, m) = rng.uniform();
  return mask;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Continued fraction (Lentz); converges quickly for x < (a+1)/(a+b+2).
  auto betacf = [](double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16, kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
      const int m2 = 2 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < kTiny) d = kTiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < kTiny) d = kTiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
  };
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples must have equal length");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw std::invalid_argument("need at least two pairs");

  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double var = ss / (n - 1);

  TTestResult res;
  res.dof = n - 1;
  if (var <= 0.0) {
    res.t = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() * (mean > 0 ? 1 : -1);
    res.p = mean == 0.0 ? 1.0 : 0.0;
    return res;
  }
  res.t = mean / std::sqrt(var / n);
  const double nu = static_cast<double>(res.dof);
  res.p = regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + res.t * res.t));
  return res;
}

ExperimentReport aggregate(const std::vector<SeparationScore>& scores, const std::string& baseline) {
  if (scores.empty()) throw std::invalid_argument("no scores to aggregate");

  std::map<std::string, std::map<std::string, double>> by_method_scene;
  std::map<std::string, std::map<double, std::pair<double, Eigen::Index>>> by_angle;
  for (const auto& s : scores) {
    by_method_scene[s.method][s.scene_id] = s.sdr_mean_db();
    auto& acc = by_angle[s.method][s.target_angle_deg];
    acc.first += s.sdr_mean_db();
    acc.second += 1;
  }

  ExperimentReport report;
  report.baseline = baseline;

  std::vector<double> baseline_seq;
  std::vector<std::string> scene_order;
  const auto base_it = by_method_scene.find(baseline);
  if (base_it != by_method_scene.end()) {
    for (const auto& [scene, v] : base_it->second) {
      scene_order.push_back(scene);
      baseline_seq.push_back(v);
    }
  }

  for (const auto& [method, scenes] : by_method_scene) {
    MethodSummary summary;
    summary.method = method;
    summary.num_scenes = static_cast<Eigen::Index>(scenes.size());
    double sum = 0.0;
    for (const auto& [scene, v] : scenes) sum += v;
    summary.mean_sdr_db = sum / static_cast<double>(scenes.size());
    for (const auto& [angle, acc] : by_angle[method])
      summary.mean_sdr_by_target_angle[angle] = acc.first / static_cast<double>(acc.second);

    if (method != baseline && !baseline_seq.empty() && scenes.size() == baseline_seq.size()) {
      std::vector<double> seq;
      bool complete = true;
      for (const auto& scene : scene_order) {
        const auto it = scenes.find(scene);
        if (it == scenes.end()) {
          complete = false;
          break;
        }
        seq.push_back(it->second);
      }
      if (complete) {
        const TTestResult tt = paired_ttest(seq, baseline_seq);
        summary.p_vs_baseline = tt.p;
        summary.t_vs_baseline = tt.t;
      }
    }
    report.methods.push_back(std::move(summary));
    report.scenes_per_method = std::max(report.scenes_per_method,
                                        static_cast<Eigen::Index>(scenes.size()));
  }
  return report;
}

}  // namespace binsep
