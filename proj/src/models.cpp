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

#include "binsep/models.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "binsep/dsp.hpp"

namespace binsep {

void CombParams::validate() const {
  if (n_df_s < 0.0) throw std::invalid_argument("n_df_s must be non-negative");
  if (p01 == 0.0 || p02 == 0.0) throw std::invalid_argument("direct-sound amplitudes must be non-zero");
}

CombIpdCurve comb_ipd_model(const CombParams& params, const ArrayXd& freqs_hz) {
  params.validate();
  const Eigen::Index n = freqs_hz.size();
  CombIpdCurve curve;
  curve.phase_rad.resize(n);
  curve.valid.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double w = kTwoPi * freqs_hz(k);
    const std::complex<double> num =
        params.p01 + params.p11 * std::polar(1.0, -w * params.n_df_s);
    const std::complex<double> den =
        params.p02 * std::polar(1.0, -w * params.n_ds_s) +
        params.p12 * std::polar(1.0, -w * (params.n_df_s + params.n_st_s));
    if (std::abs(den) < 1e-12) {
      curve.phase_rad(k) = 0.0;
      curve.valid(k) = false;
    } else {
      curve.phase_rad(k) = wrap_phase(std::arg(num / den));
      curve.valid(k) = true;
    }
  }
  return curve;
}

ArrayXXd phase_residual(const InterauralObservation& obs, const CombParams& params) {
  const ArrayXd freqs = obs.left_spec.bin_freqs_hz();
  if (freqs.size() != obs.num_bins()) throw std::invalid_argument("observation bin count mismatch");
  const CombIpdCurve curve = comb_ipd_model(params, freqs);
  ArrayXXd residual(obs.num_bins(), obs.num_frames());
  for (Eigen::Index m = 0; m < obs.num_frames(); ++m)
    residual.col(m) = wrap_phase(obs.ipd_rad.col(m) - curve.phase_rad);
  return residual;
}

ArrayXd ild_model(const Brir& brir, const ArrayXd& freqs_hz) {
  const StereoWaveform ir = render_ir(brir, brir_support_s(brir) + 1e-3);
  if (!ir.left.samples.isFinite().all() || !ir.right.samples.isFinite().all())
    throw std::invalid_argument("rendered IR is not finite");

  const double fs = brir.sample_rate_hz;
  const Eigen::Index n = ir.left.samples.size();
  ArrayXd out(freqs_hz.size());
  for (Eigen::Index k = 0; k < freqs_hz.size(); ++k) {
    const double w = kTwoPi * freqs_hz(k) / fs;
    std::complex<double> hl{0.0, 0.0}, hr{0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::complex<double> e = std::polar(1.0, -w * static_cast<double>(i));
      hl += ir.left.samples(i) * e;
      hr += ir.right.samples(i) * e;
    }
    const double mr = std::abs(hr);
    // Bins with a vanishing right-ear response carry no usable ratio; report 0.
    out(k) = mr < 1e-12 ? 0.0 : 20.0 * std::log10(std::abs(hl) / mr);
  }
  return out;
}

SourceCueModel garbage_model(Eigen::Index num_bins) {
  SourceCueModel model;
  model.is_garbage = true;
  model.ild_mean_db = ArrayXd::Zero(num_bins);
  model.ild_var = ArrayXd::Constant(num_bins, kGarbageIldVarInit);
  model.ipd_mean_rad = ArrayXXd::Zero(num_bins, 1);
  model.ipd_var = ArrayXXd::Ones(num_bins, 1);
  return model;
}

namespace {
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);
}

ArrayXXd cue_log_likelihood(const InterauralObservation& obs, const SourceCueModel& model,
                            Eigen::Index c_index, const ArrayXd& comb_phase) {
  if ((model.ild_var < kVarianceFloor).any())
    throw std::invalid_argument("ILD variance below floor");
  const Eigen::Index bins = obs.num_bins();
  const Eigen::Index frames = obs.num_frames();
  ArrayXXd ll(bins, frames);

  const ArrayXd ild_lognorm = -0.5 * (kLogTwoPi + model.ild_var.log());
  const ArrayXd ild_invvar = 0.5 / model.ild_var;
  for (Eigen::Index m = 0; m < frames; ++m) {
    ArrayXd col = ild_lognorm - (obs.ild_db.col(m) - model.ild_mean_db).square() * ild_invvar;
    if (model.is_garbage) {
      col += -kLogTwoPi;  // log(1 / 2 pi), uniform over the wrapped interval
    } else {
      // Linear Gaussian on the wrapped residual; the M-step moments use the
      // same convention, which keeps the EM objective consistent.
      const ArrayXd resid = wrap_phase(obs.ipd_rad.col(m) - comb_phase);
      const ArrayXd d = resid - model.ipd_mean_rad.col(c_index);
      col += -0.5 * (kLogTwoPi + model.ipd_var.col(c_index).log()) -
             d.square() * (0.5 / model.ipd_var.col(c_index));
    }
    ll.col(m) = obs.silent.col(m).select(0.0, col);
  }
  return ll;
}

IcMask ic_mask(const Spectrogram& left, const Spectrogram& right, double kappa) {
  if (kappa < 0.0 || kappa > 1.0) throw std::invalid_argument("kappa must lie in [0, 1]");
  if (left.bins.rows() != right.bins.rows() || left.bins.cols() != right.bins.cols())
    throw std::invalid_argument("spectrogram dimension mismatch");

  const Eigen::Index bins = left.bins.rows();
  const Eigen::Index frames = left.bins.cols();
  IcMask mask;
  mask.kappa = kappa;
  mask.gamma.resize(bins, frames);

  ArrayXd phi1 = left.bins.col(0).abs2();
  ArrayXd phi2 = right.bins.col(0).abs2();
  Eigen::ArrayXcd phi12 = left.bins.col(0) * right.bins.col(0).conjugate();
  for (Eigen::Index m = 0; m < frames; ++m) {
    if (m > 0) {
      phi1 = kappa * phi1 + (1.0 - kappa) * left.bins.col(m).abs2();
      phi2 = kappa * phi2 + (1.0 - kappa) * right.bins.col(m).abs2();
      phi12 = kappa * phi12 + (1.0 - kappa) * (left.bins.col(m) * right.bins.col(m).conjugate());
    }
    const ArrayXd denom = phi1 * phi2;
    mask.gamma.col(m) =
        (denom > 0.0).select((phi12.abs2() / denom.max(1e-300)).min(1.0), ArrayXd::Zero(bins));
  }
  return mask;
}

}  // namespace binsep
