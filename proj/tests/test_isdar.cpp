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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "binsep/acoustics.hpp"
#include "binsep/isdar.hpp"

using namespace binsep;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Waveform two_tap_rir(double fs, double t0, double a0, double t1, double a1, double len_s) {
  return render_taps({{t0, a0, 0, 1.0}, {t1, a1, 1, 1.0}}, fs, len_s);
}

struct TruthDelays {
  double n_ds, n_df, n_st;
};

TruthDelays truth_from_brir(const Brir& brir) {
  return {brir.right_taps[0].toa_s - brir.left_taps[0].toa_s,
          brir.left_taps[1].toa_s - brir.left_taps[0].toa_s,
          brir.right_taps[1].toa_s - brir.left_taps[1].toa_s};
}

// Tall-hall floor scene: ears well above the floor so the first reflection
// lags the direct sound by > 5 ms.
RoomSpec floor_room() {
  RoomSpec room;
  room.reflectors = {{{{0, 0, -3.08}, {0, 0, 1}}, 0.8}};
  return room;
}

Vec3 floor_source(double azimuth_deg) {
  return {10.0 * std::cos(azimuth_deg * kDeg), 10.0 * std::sin(azimuth_deg * kDeg), 0.0};
}

// Lateral-wall scene: nearer source, wall beyond the sources.
RoomSpec wall_room() {
  RoomSpec room;
  room.reflectors = {{{{0, 4.0, 0}, {0, 1, 0}}, 0.8}};
  return room;
}

Vec3 wall_source(double azimuth_deg) {
  return {2.5 * std::cos(azimuth_deg * kDeg), 2.5 * std::sin(azimuth_deg * kDeg), 0.0};
}

}  // namespace

TEST_CASE("estimate_toas: integer-sample taps are recovered exactly") {
  const double fs = 16000.0;
  const std::vector<Waveform> rirs{two_tap_rir(fs, 160.0 / fs, 1.0, 288.0 / fs, 0.6, 0.05)};
  const auto toas = estimate_toas(rirs);
  CHECK(toas[0].direct_s == doctest::Approx(0.010).epsilon(1e-12));
  CHECK(toas[0].reflection_s == doctest::Approx(0.018).epsilon(1e-12));
}

TEST_CASE("estimate_toas: fractional taps within 0.02 ms") {
  const double fs = 16000.0;
  const std::vector<Waveform> rirs{two_tap_rir(fs, 10.3e-3, 1.0, 18.45e-3, 0.5, 0.05)};
  const auto toas = estimate_toas(rirs);
  CHECK(std::abs(toas[0].direct_s - 10.3e-3) < 0.02e-3);
  CHECK(std::abs(toas[0].reflection_s - 18.45e-3) < 0.02e-3);
}

TEST_CASE("estimate_toas: reflection buried in a long tail raises") {
  const double fs = 16000.0;
  RoomSpec room;
  room.rt60_s = 0.9;
  room.tail_onset_s = 0.006;
  room.tail_gain = 0.1;
  room.noise_seed = 5;
  room.reflectors = {{{{0, 0, -3.08}, {0, 0, 1}}, 0.05}};
  const ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  const std::vector<Waveform> rirs = synthesize_array_rirs(room, {2.5, 0, 0}, array, fs);
  CHECK_THROWS_WITH_AS(estimate_toas(rirs), "no specular reflection found", std::runtime_error);
}

TEST_CASE("estimate_toas rejects empty RIRs") {
  CHECK_THROWS_AS(estimate_toas({Waveform{ArrayXd::Zero(100), 16000.0}}), std::runtime_error);
}

TEST_CASE("das_doa finds ring-array azimuths within a degree or two") {
  const double fs = 16000.0;
  const ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  RoomSpec anechoic;
  for (double angle : {0.0, 30.0, -60.0}) {
    const Vec3 src{4.0 * std::cos(angle * kDeg), 4.0 * std::sin(angle * kDeg), 0.0};
    const std::vector<Waveform> rirs = synthesize_array_rirs(anechoic, src, array, fs);
    const DoaEstimate doa = das_doa(rirs, array, 4.0 / kSpeedOfSound - 1e-3, 4.0 / kSpeedOfSound + 2e-3);
    CHECK_FALSE(doa.low_confidence);
    const double tol = angle == 0.0 ? 1.0 : 2.0;
    CHECK(std::abs(doa.azimuth_rad / kDeg - angle) < tol);
  }
}

TEST_CASE("das_doa: mirrored sources give mirrored estimates") {
  const double fs = 16000.0;
  const ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  RoomSpec anechoic;
  auto estimate = [&](double angle) {
    const Vec3 src{3.0 * std::cos(angle * kDeg), 3.0 * std::sin(angle * kDeg), 0.0};
    const auto rirs = synthesize_array_rirs(anechoic, src, array, fs);
    return das_doa(rirs, array, 3.0 / kSpeedOfSound - 1e-3, 3.0 / kSpeedOfSound + 2e-3).azimuth_rad;
  };
  CHECK(std::abs(estimate(40.0) + estimate(-40.0)) < 1.0 * kDeg);
}

TEST_CASE("das_doa flags an all-zero window as low confidence") {
  const double fs = 16000.0;
  const ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  std::vector<Waveform> rirs(8, Waveform{ArrayXd::Zero(800), fs});
  const DoaEstimate doa = das_doa(rirs, array, 0.01, 0.02);
  CHECK(doa.low_confidence);
}

TEST_CASE("localize: source at 2 m, 0 degrees") {
  const double fs = 16000.0;
  const ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  const std::vector<Waveform> rirs = synthesize_array_rirs(wall_room(), {2.5, 0, 0}, array, fs);
  const LocalizationResult loc = localize(rirs, array);
  CHECK(std::abs(loc.direct.position_m.x() - 2.5) < 0.05);
  CHECK(std::abs(loc.direct.position_m.y() - 0.0) < 0.07);
  // reflection: image at (2.5, 8) seen from the origin
  const double refl_dist = std::hypot(2.5, 8.0);
  CHECK(std::abs(loc.reflection.radius_m - refl_dist) < 0.05);
  CHECK(std::abs(loc.reflection.azimuth_rad - std::atan2(8.0, 2.5)) < 2.0 * kDeg);
}

TEST_CASE("localize: doubling all TOAs doubles the radius") {
  const double fs = 16000.0;
  const ArraySpec array = ring_array(4, 0.1, {0, 0, 0});
  std::vector<Waveform> near, far;
  for (int i = 0; i < 4; ++i) {
    near.push_back(two_tap_rir(fs, 160.0 / fs, 1.0, 320.0 / fs, 0.5, 0.1));
    far.push_back(two_tap_rir(fs, 320.0 / fs, 1.0, 640.0 / fs, 0.5, 0.1));
  }
  const LocalizationResult a = localize(near, array);
  const LocalizationResult b = localize(far, array);
  CHECK(b.direct.radius_m == doctest::Approx(2.0 * a.direct.radius_m).epsilon(1e-9));
  CHECK(b.reflection.radius_m == doctest::Approx(2.0 * a.reflection.radius_m).epsilon(1e-9));
}

TEST_CASE("translate applies a rigid offset") {
  const double fs = 16000.0;
  const ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  const std::vector<Waveform> rirs = synthesize_array_rirs(wall_room(), {2.5, 0, 0}, array, fs);
  const LocalizationResult loc = localize(rirs, array);
  const LocalizationResult moved = translate(loc, {1.0, -0.5});
  CHECK(moved.direct.position_m.x() == doctest::Approx(loc.direct.position_m.x() + 1.0));
  CHECK(moved.direct.position_m.y() == doctest::Approx(loc.direct.position_m.y() - 0.5));
  CHECK(moved.direct.radius_m == doctest::Approx(moved.direct.position_m.norm()));
}

TEST_CASE("init_comb_params: frontal symmetry zeroes the interaural delays") {
  const double fs = 16000.0;
  const HeadPose head;
  const Vec3 src = floor_source(0.0);
  const Brir brir = synthesize_brir(floor_room(), src, head, fs);
  const ArraySpec array = ring_array(8, 0.106, head.position);
  const std::vector<Waveform> rirs = synthesize_array_rirs(floor_room(), src, array, fs);
  const CombParams comb = init_comb_params(localize(rirs, array), head_geometry(head), brir);
  CHECK(std::abs(comb.n_ds_s) < 0.02e-3);
  CHECK(std::abs(comb.n_st_s) < 0.02e-3);
}

TEST_CASE("init_comb_params: delays within one sample and amplitudes within 10%") {
  const double fs = 16000.0;
  const HeadPose head;
  const Vec3 src = wall_source(30.0);
  const Brir brir = synthesize_brir(wall_room(), src, head, fs);
  const ArraySpec array = ring_array(8, 0.106, head.position);
  const std::vector<Waveform> rirs = synthesize_array_rirs(wall_room(), src, array, fs);
  const CombParams comb = init_comb_params(localize(rirs, array), head_geometry(head), brir);
  const TruthDelays truth = truth_from_brir(brir);
  CHECK(std::abs(comb.n_ds_s - truth.n_ds) * fs <= 1.0);
  CHECK(std::abs(comb.n_df_s - truth.n_df) * fs <= 1.0);
  CHECK(std::abs(comb.n_st_s - truth.n_st) * fs <= 1.0);
  // the +30 source is on the left: the right-ear taps carry the shadow, so
  // check amplitude recovery on the unshadowed left ear
  CHECK(comb.p01 == doctest::Approx(brir.left_taps[0].amplitude).epsilon(0.10));
  CHECK(comb.p11 == doctest::Approx(brir.left_taps[1].amplitude).epsilon(0.10));
}

TEST_CASE("init_comb_params rejects predicted TOAs outside the BRIR") {
  const double fs = 16000.0;
  const HeadPose head;
  const ArraySpec array = ring_array(8, 0.106, head.position);
  const std::vector<Waveform> rirs = synthesize_array_rirs(wall_room(), wall_source(0.0), array, fs);
  Brir tiny;
  tiny.sample_rate_hz = fs;
  tiny.left_taps = {{0.001, 1.0, 0, 1.0}};
  tiny.right_taps = tiny.left_taps;
  CHECK_THROWS_WITH_AS(init_comb_params(localize(rirs, array), head_geometry(head), tiny),
                       "predicted TOA outside BRIR support", std::runtime_error);
}

TEST_CASE("init_ild_prior: symmetric frontal BRIR has a zero-dB mean") {
  const double fs = 16000.0;
  Brir brir;
  brir.sample_rate_hz = fs;
  brir.left_taps = {{0.005, 0.5, 0, 1.0}};
  brir.right_taps = brir.left_taps;
  const ArrayXd freqs = ArrayXd::LinSpaced(129, 0.0, 8000.0);
  const IldPrior prior = init_ild_prior(brir, freqs);
  CHECK(prior.mean_db.abs().maxCoeff() < 1e-9);
  CHECK(prior.var == 100.0);
}

TEST_CASE("init_ild_prior: lateral source favors the near ear above the shadow knee") {
  const double fs = 16000.0;
  const HeadPose head;
  const Vec3 src = wall_source(45.0);  // on the left
  const ArraySpec array = ring_array(8, 0.106, head.position);
  const std::vector<Waveform> rirs = synthesize_array_rirs(wall_room(), src, array, fs);
  const LocalizationResult loc = localize(rirs, array);
  const Brir at_doa = brir_at_estimated_doa(loc, head, fs);
  const ArrayXd freqs = ArrayXd::LinSpaced(257, 0.0, 8000.0);
  const IldPrior prior = init_ild_prior(at_doa, freqs);
  for (Eigen::Index k = 0; k < freqs.size(); ++k)
    if (freqs(k) > 1500.0) CHECK(prior.mean_db(k) > 0.0);  // left ear louder
}

TEST_CASE("end-to-end init accuracy across azimuths and reflector types") {
  const double fs = 16000.0;
  const HeadPose head;
  const ArraySpec array = ring_array(8, 0.106, head.position);
  for (const bool use_floor : {true, false}) {
    for (const double angle : {0.0, 30.0, -30.0, 60.0, -60.0, 90.0, -90.0}) {
      CAPTURE(use_floor);
      CAPTURE(angle);
      const RoomSpec room = use_floor ? floor_room() : wall_room();
      const Vec3 src = use_floor ? floor_source(angle) : wall_source(angle);
      const Brir brir = synthesize_brir(room, src, head, fs);
      REQUIRE_FALSE(brir.first_reflection_lag_warning);
      const std::vector<Waveform> rirs = synthesize_array_rirs(room, src, array, fs);
      const LocalizationResult loc = localize(rirs, array);
      CHECK(std::abs(loc.direct.azimuth_rad - angle * kDeg) < 5.0 * kDeg);

      const CombParams comb = init_comb_params(loc, head_geometry(head), brir);
      const TruthDelays truth = truth_from_brir(brir);
      CHECK(std::abs(comb.n_ds_s - truth.n_ds) * fs <= 2.0);
      CHECK(std::abs(comb.n_df_s - truth.n_df) * fs <= 2.0);
      CHECK(std::abs(comb.n_st_s - truth.n_st) * fs <= 2.0);
    }
  }
}

TEST_CASE("mirror consistency: negating the azimuth negates n_ds") {
  const double fs = 16000.0;
  const HeadPose head;
  const ArraySpec array = ring_array(8, 0.106, head.position);
  auto init_at = [&](double angle) {
    const Vec3 src = floor_source(angle);
    const Brir brir = synthesize_brir(floor_room(), src, head, fs);
    const auto rirs = synthesize_array_rirs(floor_room(), src, array, fs);
    return init_comb_params(localize(rirs, array), head_geometry(head), brir);
  };
  const CombParams plus = init_at(45.0);
  const CombParams minus = init_at(-45.0);
  CHECK(std::abs(plus.n_ds_s + minus.n_ds_s) * fs < 0.5);
}
