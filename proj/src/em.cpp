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

#include "binsep/em.hpp"

#include <cmath>
#include <numbers>

#include "binsep/dsp.hpp"

namespace binsep {

Variant variant_from_string(const std::string& name) {
  if (name == "messl") return Variant::Messl;
  if (name == "ic-messl") return Variant::IcMessl;
  if (name == "er-messl") return Variant::ErMessl;
  if (name == "eric-messl") return Variant::EricMessl;
  throw std::invalid_argument("unknown variant: " + name);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Messl: return "messl";
    case Variant::IcMessl: return "ic-messl";
    case Variant::ErMessl: return "er-messl";
    case Variant::EricMessl: return "eric-messl";
  }
  throw std::logic_error("bad Variant");
}

ParamGrid build_param_grid(const std::vector<CombParams>& inits, const Eigen::Array3d& range_s,
                           int steps, bool comb_enabled) {
  if (steps < 1 || steps % 2 == 0) throw std::invalid_argument("grid steps must be odd");
  ParamGrid grid;
  for (const CombParams& init : inits) {
    CombParams base = init;
    Eigen::Array3d ranges = range_s;
    if (!comb_enabled) {
      base.p11 = 0.0;
      base.p12 = 0.0;
      ranges(1) = 0.0;
      ranges(2) = 0.0;
    }
    auto axis = [&](double center, double range) {
      std::vector<double> v;
      if (range == 0.0) {
        v.push_back(center);
      } else {
        for (int i = 0; i < steps; ++i)
          v.push_back(center + range * (-1.0 + 2.0 * i / (steps - 1)));
        v[static_cast<size_t>(steps / 2)] = center;  // odd grid: exact center
      }
      return v;
    };
    const std::vector<double> ds = axis(base.n_ds_s, ranges(0));
    const std::vector<double> df = axis(base.n_df_s, ranges(1));
    const std::vector<double> st = axis(base.n_st_s, ranges(2));

    std::vector<CombParams> candidates;
    candidates.reserve(ds.size() * df.size() * st.size());
    for (double vds : ds)
      for (double vdf : df)
        for (double vst : st) {
          CombParams c = base;
          c.n_ds_s = vds;
          c.n_df_s = std::max(0.0, vdf);
          c.n_st_s = vst;
          candidates.push_back(c);
        }
    grid.per_source.push_back(std::move(candidates));
  }
  return grid;
}

namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

struct Cache {
  // Per real source: bins x candidates.
  std::vector<ArrayXXd> ipd_lognorm, ipd_halfinv;
  // Per model (incl. garbage): per-bin ILD terms.
  std::vector<ArrayXd> ild_lognorm, ild_halfinv;
  std::vector<ArrayXd> log_beta;
  Eigen::Index total_components = 0;
};

Cache refresh_cache(const EmState& state) {
  Cache cache;
  const Eigen::Index num_models = static_cast<Eigen::Index>(state.models.size());
  for (Eigen::Index l = 0; l < num_models; ++l) {
    const SourceCueModel& model = state.models[l];
    cache.ild_lognorm.push_back(-0.5 * (kLogTwoPi + model.ild_var.log()));
    cache.ild_halfinv.push_back(0.5 / model.ild_var);
    cache.log_beta.push_back(state.beta[l].log());
    cache.total_components += state.beta[l].size();
    if (!model.is_garbage) {
      cache.ipd_lognorm.push_back(-0.5 * (kLogTwoPi + model.ipd_var.log()));
      cache.ipd_halfinv.push_back(0.5 / model.ipd_var);
    }
  }
  return cache;
}

// Per-frame evaluation buffers, reused across frames.
struct FrameBuffers {
  ArrayXXd scores;     // bins x components (posterior after normalization)
  ArrayXXd residuals;  // bins x total real candidates
  ArrayXd lse;         // per-bin log-sum-exp
};

struct FrameStats {
  double loglik = 0.0;
  Eigen::Index uniform_bins = 0;
  double max_norm_deviation = 0.0;
};

// Computes scores and the normalized posterior for frame m.
// Column layout: real source 0 candidates, source 1 candidates, ..., garbage.
FrameStats eval_frame(const InterauralObservation& obs, const EmState& state, const Cache& cache,
                      const BinPrior* prior, Eigen::Index m, FrameBuffers& buf) {
  const Eigen::Index bins = obs.num_bins();
  const Eigen::Index num_real = state.num_real_sources();
  const Eigen::Index total = cache.total_components;
  if (buf.scores.rows() != bins || buf.scores.cols() != total) {
    buf.scores.resize(bins, total);
    buf.residuals.resize(bins, total - 1);
    buf.lse.resize(bins);
  }

  const ArrayXd alpha = obs.ild_db.col(m);
  const ArrayXd phi = obs.ipd_rad.col(m);

  Eigen::Index col = 0;
  for (Eigen::Index l = 0; l < num_real; ++l) {
    const SourceCueModel& model = state.models[static_cast<size_t>(l)];
    const ArrayXd ild_ll =
        cache.ild_lognorm[l] - (alpha - model.ild_mean_db).square() * cache.ild_halfinv[l];
    const Eigen::Index num_c = state.beta[l].size();
    for (Eigen::Index c = 0; c < num_c; ++c, ++col) {
      ArrayXd resid = wrap_phase(phi - state.comb_phase[l].col(c));
      buf.scores.col(col) = cache.log_beta[l](c) + ild_ll + cache.ipd_lognorm[l].col(c) -
                            (resid - model.ipd_mean_rad.col(c)).square() * cache.ipd_halfinv[l].col(c);
      buf.residuals.col(col) = std::move(resid);
    }
  }
  {  // garbage: uniform IPD density
    const Eigen::Index l = num_real;
    const SourceCueModel& model = state.models[static_cast<size_t>(l)];
    buf.scores.col(col) = cache.log_beta[l](0) + cache.ild_lognorm[l] -
                          (alpha - model.ild_mean_db).square() * cache.ild_halfinv[l] - kLogTwoPi;
  }
  if (prior) {
    const ArrayXd log_real = prior->real.col(m).log();
    for (Eigen::Index c = 0; c < total - 1; ++c) buf.scores.col(c) += log_real;
    buf.scores.col(total - 1) += prior->garbage.col(m).log();
  }

  FrameStats stats;
  const auto silent = obs.silent.col(m);
  for (Eigen::Index k = 0; k < bins; ++k) {
    if (silent(k)) continue;
    const double maxv = buf.scores.row(k).maxCoeff();
    if (!std::isfinite(maxv)) {
      buf.lse(k) = maxv;
      ++stats.uniform_bins;
      continue;
    }
    const double sum = (buf.scores.row(k) - maxv).exp().sum();
    buf.lse(k) = maxv + std::log(sum);
    stats.loglik += buf.lse(k);
  }

  // Normalize into posteriors. Silent and degenerate bins fall back to the
  // uniform occupation (per source, split across its candidates).
  Eigen::Index base = 0;
  const double num_groups = static_cast<double>(num_real + 1);
  for (Eigen::Index l = 0; l <= num_real; ++l) {
    const Eigen::Index num_c = state.beta[l].size();
    const double uniform = 1.0 / (num_groups * static_cast<double>(num_c));
    for (Eigen::Index c = 0; c < num_c; ++c) {
      auto colv = buf.scores.col(base + c);
      for (Eigen::Index k = 0; k < bins; ++k)
        colv(k) = silent(k) || !std::isfinite(buf.lse(k)) ? uniform : std::exp(colv(k) - buf.lse(k));
    }
    base += num_c;
  }

  for (Eigen::Index k = 0; k < bins; ++k) {
    if (silent(k) || !std::isfinite(buf.lse(k))) continue;
    stats.max_norm_deviation =
        std::max(stats.max_norm_deviation, std::abs(buf.scores.row(k).sum() - 1.0));
  }
  return stats;
}

// Sufficient statistics for one M-step.
struct MomentSums {
  std::vector<ArrayXd> ild_s0, ild_s1, ild_s2;    // per model
  std::vector<ArrayXXd> ipd_s0, ipd_s1, ipd_s2;   // per real source
  std::vector<ArrayXd> beta_sum;                  // per model

  explicit MomentSums(const EmState& state) {
    const Eigen::Index bins = state.models.front().ild_mean_db.size();
    for (size_t l = 0; l < state.models.size(); ++l) {
      const Eigen::Index num_c = state.beta[l].size();
      ild_s0.push_back(ArrayXd::Zero(bins));
      ild_s1.push_back(ArrayXd::Zero(bins));
      ild_s2.push_back(ArrayXd::Zero(bins));
      beta_sum.push_back(ArrayXd::Zero(num_c));
      if (!state.models[l].is_garbage) {
        ipd_s0.push_back(ArrayXXd::Zero(bins, num_c));
        ipd_s1.push_back(ArrayXXd::Zero(bins, num_c));
        ipd_s2.push_back(ArrayXXd::Zero(bins, num_c));
      }
    }
  }
};

// Accumulates one frame's posterior into the moment sums; silent bins are
// excluded. `nu` and `resid` follow the eval_frame column layout.
void accumulate_frame(const InterauralObservation& obs, const EmState& state, Eigen::Index m,
                      const ArrayXXd& nu, const ArrayXXd& resid, MomentSums& sums) {
  const Eigen::Index bins = obs.num_bins();
  const Eigen::Index num_real = state.num_real_sources();
  const auto silent = obs.silent.col(m);
  ArrayXd active(bins);
  for (Eigen::Index k = 0; k < bins; ++k) active(k) = silent(k) ? 0.0 : 1.0;
  const ArrayXd alpha = obs.ild_db.col(m) * active;

  Eigen::Index base = 0;
  for (Eigen::Index l = 0; l <= num_real; ++l) {
    const Eigen::Index num_c = state.beta[l].size();
    ArrayXd group = ArrayXd::Zero(bins);
    for (Eigen::Index c = 0; c < num_c; ++c) {
      const ArrayXd w = nu.col(base + c) * active;
      group += w;
      sums.beta_sum[l](c) += w.sum();
      if (l < num_real) {
        const auto r = resid.col(base + c);
        sums.ipd_s0[l].col(c) += w;
        sums.ipd_s1[l].col(c) += w * r;
        sums.ipd_s2[l].col(c) += w * r.square();
      }
    }
    sums.ild_s0[l] += group;
    sums.ild_s1[l] += group * alpha;
    sums.ild_s2[l] += group * alpha.square();
    base += num_c;
  }
}

void apply_m_step(const MomentSums& sums, Eigen::Index nonsilent_bins, EmState& state) {
  const Eigen::Index num_real = state.num_real_sources();
  const double floor = state.variance_floor;
  Eigen::Index frozen = 0;
  for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(state.models.size()); ++l) {
    SourceCueModel& model = state.models[l];
    const ArrayXd& s0 = sums.ild_s0[l];
    for (Eigen::Index k = 0; k < s0.size(); ++k) {
      if (s0(k) > 0.0) {
        const double mu = sums.ild_s1[l](k) / s0(k);
        model.ild_mean_db(k) = mu;
        model.ild_var(k) = std::max(sums.ild_s2[l](k) / s0(k) - mu * mu, floor);
      } else {
        model.ild_var(k) = std::max(model.ild_var(k), floor);
      }
    }
    if (l < num_real) {
      for (Eigen::Index c = 0; c < state.beta[l].size(); ++c) {
        const auto t0 = sums.ipd_s0[l].col(c);
        for (Eigen::Index k = 0; k < t0.size(); ++k) {
          if (t0(k) > 0.0) {
            const double mu = sums.ipd_s1[l](k, c) / t0(k);
            model.ipd_mean_rad(k, c) = mu;
            model.ipd_var(k, c) = std::max(sums.ipd_s2[l](k, c) / t0(k) - mu * mu, floor);
          } else {
            model.ipd_var(k, c) = std::max(model.ipd_var(k, c), floor);
          }
        }
      }
    }
    if (nonsilent_bins > 0) {
      for (Eigen::Index c = 0; c < state.beta[l].size(); ++c) {
        const double mass = sums.beta_sum[l](c) / static_cast<double>(nonsilent_bins);
        if (mass == 0.0) ++frozen;  // cue parameters carried over above
        state.beta[l](c) = mass;
      }
    }
  }
  state.diag.frozen_components += frozen;
}

}  // namespace

EmState init_em_state(const InterauralObservation& obs, const std::vector<SourceInit>& inits,
                      const EmConfig& config) {
  if (inits.empty()) throw std::invalid_argument("need at least one initialized source");
  const Eigen::Index bins = obs.num_bins();

  EmState state;
  std::vector<CombParams> combs;
  for (const auto& init : inits) combs.push_back(init.comb);
  state.grid = build_param_grid(combs, config.grid_range_s, config.grid_steps,
                                variant_uses_comb(config.variant));

  const Eigen::Index num_real = static_cast<Eigen::Index>(inits.size());
  const double group_mass = 1.0 / static_cast<double>(num_real + 1);
  const ArrayXd freqs = obs.left_spec.bin_freqs_hz();
  for (Eigen::Index l = 0; l < num_real; ++l) {
    const auto& candidates = state.grid.per_source[l];
    const Eigen::Index num_c = static_cast<Eigen::Index>(candidates.size());

    SourceCueModel model;
    if (inits[l].ild_mean_db.size() != bins)
      throw std::invalid_argument("ILD prior length does not match bin count");
    model.ild_mean_db = inits[l].ild_mean_db;
    model.ild_var = ArrayXd::Constant(bins, std::max(inits[l].ild_var, config.variance_floor));
    model.ipd_mean_rad = ArrayXXd::Zero(bins, num_c);
    model.ipd_var = ArrayXXd::Constant(bins, num_c, std::max(config.init_ipd_var, config.variance_floor));
    state.models.push_back(std::move(model));
    state.beta.push_back(ArrayXd::Constant(num_c, group_mass / static_cast<double>(num_c)));

    ArrayXXd phase(bins, num_c);
    for (Eigen::Index c = 0; c < num_c; ++c)
      phase.col(c) = comb_ipd_model(candidates[static_cast<size_t>(c)], freqs).phase_rad;
    state.comb_phase.push_back(std::move(phase));
  }
  state.models.push_back(garbage_model(bins));
  state.beta.push_back(ArrayXd::Constant(1, group_mass));
  state.variance_floor = config.variance_floor;

  state.diag.nonsilent_bins = (obs.silent == false).count();
  return state;
}

Occupation e_step(const InterauralObservation& obs, const EmState& state, const BinPrior* prior) {
  const Cache cache = refresh_cache(state);
  Occupation occ;
  occ.nu.resize(state.models.size());
  for (size_t l = 0; l < state.models.size(); ++l)
    occ.nu[l].assign(static_cast<size_t>(state.beta[l].size()),
                     ArrayXXd::Zero(obs.num_bins(), obs.num_frames()));

  FrameBuffers buf;
  for (Eigen::Index m = 0; m < obs.num_frames(); ++m) {
    const FrameStats stats = eval_frame(obs, state, cache, prior, m, buf);
    occ.uniform_bins += stats.uniform_bins;
    Eigen::Index col = 0;
    for (size_t l = 0; l < occ.nu.size(); ++l)
      for (auto& grid_nu : occ.nu[l]) grid_nu.col(m) = buf.scores.col(col++);
  }
  return occ;
}

void m_step(const InterauralObservation& obs, const Occupation& occupation, EmState& state) {
  MomentSums sums(state);
  const Eigen::Index bins = obs.num_bins();
  const Eigen::Index num_real = state.num_real_sources();
  Eigen::Index total = 1;
  for (Eigen::Index l = 0; l < num_real; ++l) total += state.beta[l].size();

  ArrayXXd nu(bins, total), resid(bins, total - 1);
  for (Eigen::Index m = 0; m < obs.num_frames(); ++m) {
    Eigen::Index col = 0;
    for (Eigen::Index l = 0; l <= num_real; ++l)
      for (Eigen::Index c = 0; c < state.beta[l].size(); ++c, ++col) {
        nu.col(col) = occupation.nu[static_cast<size_t>(l)][static_cast<size_t>(c)].col(m);
        if (l < num_real)
          resid.col(col) = wrap_phase(obs.ipd_rad.col(m) - state.comb_phase[l].col(c));
      }
    accumulate_frame(obs, state, m, nu, resid, sums);
  }
  apply_m_step(sums, state.diag.nonsilent_bins, state);
}

EmResult run_em_with_prior(const InterauralObservation& obs, const std::vector<SourceInit>& inits,
                           const EmConfig& config, const BinPrior* prior) {
  if (config.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  EmState state = init_em_state(obs, inits, config);
  const Eigen::Index bins = obs.num_bins();
  const Eigen::Index frames = obs.num_frames();
  const Eigen::Index num_real = state.num_real_sources();

  std::vector<SoftMask> masks;
  for (Eigen::Index l = 0; l < num_real; ++l)
    masks.push_back({ArrayXXd::Zero(bins, frames), static_cast<int>(l), false});
  masks.push_back({ArrayXXd::Zero(bins, frames), static_cast<int>(num_real), true});

  FrameBuffers buf;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const Cache cache = refresh_cache(state);
    MomentSums sums(state);
    double loglik = 0.0;
    for (Eigen::Index m = 0; m < frames; ++m) {
      const FrameStats stats = eval_frame(obs, state, cache, prior, m, buf);
      loglik += stats.loglik;
      state.diag.uniform_bins += stats.uniform_bins;
      state.diag.max_norm_deviation = std::max(state.diag.max_norm_deviation, stats.max_norm_deviation);

      Eigen::Index base = 0;
      for (Eigen::Index l = 0; l <= num_real; ++l) {
        const Eigen::Index num_c = state.beta[l].size();
        ArrayXd group = buf.scores.col(base);
        for (Eigen::Index c = 1; c < num_c; ++c) group += buf.scores.col(base + c);
        masks[static_cast<size_t>(l)].values.col(m) = group;
        base += num_c;
      }
      accumulate_frame(obs, state, m, buf.scores, buf.residuals, sums);
    }
    if (!std::isfinite(loglik))
      throw std::runtime_error("non-finite log-likelihood at EM iteration " + std::to_string(iter));
    state.diag.loglik_trace.push_back(loglik);
    apply_m_step(sums, state.diag.nonsilent_bins, state);
  }

  state.diag.grid_argmax.clear();
  for (Eigen::Index l = 0; l < num_real; ++l) {
    Eigen::Index arg = 0;
    state.beta[l].maxCoeff(&arg);
    state.diag.grid_argmax.push_back(static_cast<int>(arg));
  }
  return {std::move(masks), std::move(state)};
}

EmResult run_em(const InterauralObservation& obs, const std::vector<SourceInit>& inits,
                const EmConfig& config, const std::optional<IcMask>& ic) {
  if (variant_uses_ic(config.variant)) {
    if (!ic) throw std::invalid_argument(to_string(config.variant) + " requires an IC mask");
    const BinPrior prior = prior_from_ic(*ic);
    return run_em_with_prior(obs, inits, config, &prior);
  }
  return run_em_with_prior(obs, inits, config, nullptr);
}

std::vector<StereoWaveform> apply_masks(const Spectrogram& left, const Spectrogram& right,
                                        const std::vector<SoftMask>& masks, Eigen::Index length) {
  std::vector<StereoWaveform> out;
  for (const auto& mask : masks) {
    if (mask.values.rows() != left.bins.rows() || mask.values.cols() != left.bins.cols())
      throw std::invalid_argument("mask dimensions do not match the spectrogram");
    Spectrogram ml = left, mr = right;
    ml.bins *= mask.values;
    mr.bins *= mask.values;
    out.push_back({istft(ml, length), istft(mr, length)});
  }
  return out;
}

}  // namespace binsep
