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
#include "binsep/rng.hpp"

using namespace binsep;

namespace {

// Independent copy of the documented kernel definition.
double oracle_kernel(double u) {
  if (std::abs(u) >= 4.0) return 0.0;
  const double s = u == 0.0 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
  return s * 0.5 * (1.0 + std::cos(std::numbers::pi * u / 4.0));
}

double oracle_kernel_energy(double frac) {
  double e = 0.0;
  for (int j = -4; j <= 4; ++j) {
    const double v = oracle_kernel(static_cast<double>(j) - frac);
    e += v * v;
  }
  return e;
}

Brir two_tap_brir(double fs, double toa0, double a0, double toa1, double a1) {
  Brir brir;
  brir.sample_rate_hz = fs;
  brir.left_taps = {{toa0, a0, 0, 1.0}, {toa1, a1, 1, 1.0}};
  brir.right_taps = brir.left_taps;
  return brir;
}

}  // namespace

TEST_CASE("image_source mirrors across planes") {
  const Plane floor{{0, 0, 0}, {0, 0, 1}};
  CHECK((image_source({1, 0, 1.5}, floor) - Vec3{1, 0, -1.5}).norm() == 0.0);
  const Plane wall{{0, 0, 0}, {1, 0, 0}};
  CHECK((image_source({2, 1, 1}, wall) - Vec3{-2, 1, 1}).norm() == 0.0);
}

TEST_CASE("image_source involution on random planes") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 s{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    Plane p{{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)},
            {rng.gaussian(), rng.gaussian(), rng.gaussian()}};
    if (p.normal.norm() < 1e-3) continue;
    CHECK((image_source(image_source(s, p), p) - s).norm() < 1e-12);
  }
}

TEST_CASE("image_source rejects degenerate normals") {
  CHECK_THROWS_AS(image_source({1, 2, 3}, Plane{{0, 0, 0}, {0, 0, 0}}), std::invalid_argument);
}

TEST_CASE("frontal source with floor reflector gives symmetric ears") {
  RoomSpec room;
  room.reflectors = {{{{0, 0, -1.8}, {0, 0, 1}}, 0.5}};
  const Brir brir = synthesize_brir(room, {2, 0, 0}, HeadPose{}, 16000.0);
  REQUIRE(brir.left_taps.size() == 2);
  REQUIRE(brir.right_taps.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(brir.left_taps[i].toa_s - brir.right_taps[i].toa_s) < 1e-12);
    CHECK(std::abs(brir.left_taps[i].amplitude - brir.right_taps[i].amplitude) < 1e-12);
  }
  CHECK(brir.tail.empty());  // rt60 = 0
}

TEST_CASE("zero reflection coefficient leaves exactly one tap per ear") {
  RoomSpec room;
  room.reflectors = {{{{0, 0, -1.8}, {0, 0, 1}}, 0.0}};
  const Brir brir = synthesize_brir(room, {2, 0, 0}, HeadPose{}, 16000.0);
  CHECK(brir.left_taps.size() == 1);
  CHECK(brir.right_taps.size() == 1);
}

TEST_CASE("direct tap is strictly earliest and lag warning fires") {
  RoomSpec room;
  room.reflectors = {{{{0, 0, -1.5}, {0, 0, 1}}, 0.7}};
  const Brir brir = synthesize_brir(room, {2, 0, 0}, HeadPose{}, 16000.0);
  CHECK(brir.left_taps[0].order_index == 0);
  CHECK(brir.left_taps[0].toa_s < brir.left_taps[1].toa_s);
  // source 2 m, floor 1.5 m below: lag ~4.7 ms, outside [5, 40] ms
  CHECK(brir.first_reflection_lag_warning);

  RoomSpec room_ok;
  room_ok.reflectors = {{{{0, 0, -2.5}, {0, 0, 1}}, 0.7}};
  CHECK_FALSE(synthesize_brir(room_ok, {6, 0, 0}, HeadPose{}, 16000.0).first_reflection_lag_warning);
}

TEST_CASE("source coinciding with an ear is rejected") {
  RoomSpec room;
  const HeadPose head;
  CHECK_THROWS_AS(synthesize_brir(room, left_ear(head), head, 16000.0), std::invalid_argument);
}

TEST_CASE("interaural direct TOA difference bounded by head diameter") {
  Rng rng(17);
  RoomSpec room;
  const HeadPose head;
  for (int i = 0; i < 50; ++i) {
    const double az = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double r = rng.uniform(0.5, 8.0);
    const Brir brir = synthesize_brir(room, {r * std::cos(az), r * std::sin(az), rng.uniform(-1, 1)},
                                      head, 16000.0);
    const double dt = std::abs(brir.left_taps[0].toa_s - brir.right_taps[0].toa_s);
    CHECK(dt <= 2.0 * head.radius_m / kSpeedOfSound + 1e-12);
  }
}

TEST_CASE("render_ir: integer tap is an exact unit impulse") {
  Brir brir;
  brir.sample_rate_hz = 16000.0;
  const int k = 100;
  brir.left_taps = {{k / 16000.0, 1.0, 0, 1.0}};
  brir.right_taps = brir.left_taps;
  const StereoWaveform ir = render_ir(brir, 0.02);
  CHECK(ir.left.samples(k) == doctest::Approx(1.0).epsilon(1e-12));
  ArrayXd rest = ir.left.samples;
  rest(k) = 0.0;
  CHECK(rest.abs().maxCoeff() < 1e-12);
}

TEST_CASE("render_ir: half-sample tap matches the kernel oracle") {
  Brir brir;
  brir.sample_rate_hz = 16000.0;
  const double toa = 100.5 / 16000.0;
  brir.left_taps = {{toa, 2.0, 0, 1.0}};
  brir.right_taps = brir.left_taps;
  const StereoWaveform ir = render_ir(brir, 0.02);
  for (int j = -3; j <= 4; ++j) {
    const double expected = 2.0 * oracle_kernel(static_cast<double>(100 + j) - 100.5);
    CHECK(ir.left.samples(100 + j) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(ir.left.samples(100) == ir.left.samples(101));  // symmetric lobes
}

TEST_CASE("render_ir is linear in taps") {
  Rng rng(5);
  Brir a, b, merged;
  a.sample_rate_hz = b.sample_rate_hz = merged.sample_rate_hz = 16000.0;
  for (int i = 0; i < 4; ++i) {
    const ReflectionTap tap{rng.uniform(0.002, 0.02), rng.uniform(-1, 1), i, rng.uniform(0.5, 1.0)};
    (i % 2 == 0 ? a : b).left_taps.push_back(tap);
    (i % 2 == 0 ? a : b).right_taps.push_back(tap);
    merged.left_taps.push_back(tap);
    merged.right_taps.push_back(tap);
  }
  const StereoWaveform ira = render_ir(a, 0.05);
  const StereoWaveform irb = render_ir(b, 0.05);
  const StereoWaveform irm = render_ir(merged, 0.05);
  CHECK((ira.left.samples + irb.left.samples - irm.left.samples).abs().maxCoeff() < 1e-12);
  CHECK((ira.right.samples + irb.right.samples - irm.right.samples).abs().maxCoeff() < 1e-12);
}

TEST_CASE("render_ir rejects too-short lengths") {
  Brir brir;
  brir.sample_rate_hz = 16000.0;
  brir.left_taps = {{0.05, 1.0, 0, 1.0}};
  brir.right_taps = brir.left_taps;
  CHECK_THROWS_AS(render_ir(brir, 0.01), std::invalid_argument);
}

TEST_CASE("head shadow attenuates the contralateral ear above the knee") {
  RoomSpec room;
  const Brir brir = synthesize_brir(room, {6.0 * std::cos(1.0), 6.0 * std::sin(1.0), 0.0},
                                    HeadPose{}, 16000.0);
  // source on the left: right ear shadowed
  CHECK(brir.left_taps[0].shadow_hf_gain == doctest::Approx(1.0));
  CHECK(brir.right_taps[0].shadow_hf_gain < 0.999);
  const StereoWaveform ir = render_ir(brir, brir_support_s(brir) + 1e-3);
  // energy of the shadowed tap is below the (1/r-matched) unshadowed one
  const double el = ir.left.samples.square().sum() / (brir.left_taps[0].amplitude * brir.left_taps[0].amplitude);
  const double er = ir.right.samples.square().sum() / (brir.right_taps[0].amplitude * brir.right_taps[0].amplitude);
  CHECK(er < el);
}

TEST_CASE("direct_path_reference keeps the direct sound and drops the reflection") {
  const double fs = 16000.0;
  const Brir brir = two_tap_brir(fs, 128.0 / fs, 1.0, 256.0 / fs, 0.8);  // 8 ms, 16 ms
  const Brir ref = direct_path_reference(brir, 5.0);
  CHECK(ref.left_taps.empty());
  const StereoWaveform ir = render_ir(ref, 0.03);
  CHECK(ir.left.samples(128) == doctest::Approx(1.0).epsilon(1e-2));  // hamming center ~ 1
  for (Eigen::Index i = 250; i < 262; ++i) CHECK(std::abs(ir.left.samples(i)) < 1e-9);
}

TEST_CASE("direct_path_reference windowed energy matches brute force") {
  const double fs = 16000.0;
  const Brir brir = two_tap_brir(fs, 100.25 / fs, 1.0, 180.0 / fs, 0.5);
  const double window_ms = 6.0;
  const Brir ref = direct_path_reference(brir, window_ms);
  const StereoWaveform out = render_ir(ref, 0.03);

  // brute force: render the full IR, apply the same hamming by hand
  const StereoWaveform full = render_ir(brir, 0.03);
  const Eigen::Index w = static_cast<Eigen::Index>(std::llround(window_ms * 1e-3 * fs));
  const Eigen::Index start = 100 - w / 2;
  double expected = 0.0;
  for (Eigen::Index i = 0; i < w; ++i) {
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (w - 1));
    const double v = full.left.samples(start + i) * window;
    expected += v * v;
  }
  CHECK(out.left.samples.square().sum() == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("direct_path_reference with a window covering the whole IR") {
  const double fs = 16000.0;
  const Brir brir = two_tap_brir(fs, 64.0 / fs, 1.0, 96.0 / fs, 0.5);
  const Brir ref = direct_path_reference(brir, 1000.0);
  const StereoWaveform out = render_ir(ref, 0.1);
  // window ~= 1 near its center, so both taps survive scaled by the window
  CHECK(out.left.samples(64) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(out.left.samples(96) == doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("measure_drr on two hand-built taps") {
  const double fs = 16000.0;
  const Brir brir = two_tap_brir(fs, 100.0 / fs, 1.0, 256.0 / fs, 0.5);
  CHECK(measure_drr(brir) == doctest::Approx(10.0 * std::log10(1.0 / 0.25)).epsilon(1e-6));
}

TEST_CASE("measure_drr caps at +100 dB without reverberant energy") {
  const double fs = 16000.0;
  Brir brir;
  brir.sample_rate_hz = fs;
  brir.left_taps = {{0.01, 1.0, 0, 1.0}};
  brir.right_taps = brir.left_taps;
  CHECK(measure_drr(brir) == 100.0);
}

TEST_CASE("synthesized DRR matches the closed-form tap/tail energy sum") {
  const double fs = 16000.0;
  RoomSpec room;
  room.rt60_s = 0.32;
  room.tail_onset_s = 0.010;
  room.tail_gain = 0.02;
  room.noise_seed = 99;
  room.reflectors = {{{{0, 0, -1.8}, {0, 0, 1}}, 0.5}};  // about -6 dB after 1/r
  const Vec3 source{2, 0, 0};
  const Brir brir = synthesize_brir(room, source, HeadPose{}, fs);
  const double measured = measure_drr(brir);

  // closed form, per ear (frontal source: ears identical)
  const double d_direct = (source - left_ear(HeadPose{})).norm();
  const Vec3 image = image_source(source, room.reflectors[0].plane);
  const double d_refl = (image - left_ear(HeadPose{})).norm();
  const double a_direct = 1.0 / d_direct;
  const double a_refl = room.reflectors[0].coefficient / d_refl;
  const double frac_d = d_direct / kSpeedOfSound * fs - std::floor(d_direct / kSpeedOfSound * fs);
  const double frac_r = d_refl / kSpeedOfSound * fs - std::floor(d_refl / kSpeedOfSound * fs);
  const double e_direct = a_direct * a_direct * oracle_kernel_energy(frac_d);
  const double e_refl = a_refl * a_refl * oracle_kernel_energy(frac_r);
  const double lambda_amp = std::log(1e6) / (2.0 * room.rt60_s);
  const double rho = std::exp(-2.0 * lambda_amp / fs);
  const double sigma0 = room.tail_gain * a_direct;
  const double e_tail = sigma0 * sigma0 / (1.0 - rho);
  const double expected = 10.0 * std::log10(e_direct / (e_refl + e_tail));
  CHECK(std::abs(measured - expected) < 0.5);
}

TEST_CASE("DRR can be calibrated to the 17.8 dB room descriptor") {
  const double fs = 16000.0;
  const Vec3 source{2, 0, 0};
  const Plane floor{{0, 0, -1.8}, {0, 0, 1}};
  const double d_direct = (source - left_ear(HeadPose{})).norm();
  const double d_refl = (image_source(source, floor) - left_ear(HeadPose{})).norm();
  const double a_direct = 1.0 / d_direct;
  const double frac_d = d_direct / kSpeedOfSound * fs - std::floor(d_direct / kSpeedOfSound * fs);
  const double frac_r = d_refl / kSpeedOfSound * fs - std::floor(d_refl / kSpeedOfSound * fs);
  const double e_direct = a_direct * a_direct * oracle_kernel_energy(frac_d);

  RoomSpec room;
  room.rt60_s = 0.32;
  room.tail_onset_s = 0.010;
  room.tail_gain = 0.005;
  room.noise_seed = 7;

  const double lambda_amp = std::log(1e6) / (2.0 * room.rt60_s);
  const double rho = std::exp(-2.0 * lambda_amp / fs);
  const double e_tail = room.tail_gain * room.tail_gain * a_direct * a_direct / (1.0 - rho);
  const double target = 17.8;
  // calibrate the reflection coefficient for the target DRR
  const double e_refl = e_direct / std::pow(10.0, target / 10.0) - e_tail;
  REQUIRE(e_refl > 0.0);
  const double coeff = std::sqrt(e_refl / oracle_kernel_energy(frac_r)) * d_refl;
  room.reflectors = {{floor, coeff}};

  const Brir brir = synthesize_brir(room, source, HeadPose{}, fs);
  CHECK(std::abs(measure_drr(brir) - target) < 1.0);
}

TEST_CASE("tail decays 60 dB over rt60 (Schroeder regression)") {
  const double fs = 16000.0;
  RoomSpec room;
  room.rt60_s = 0.4;
  room.tail_onset_s = 0.008;
  room.tail_gain = 0.1;
  room.noise_seed = 1234;
  const Brir brir = synthesize_brir(room, {3, 0, 0}, HeadPose{}, fs);
  REQUIRE_FALSE(brir.tail.empty());

  const ArrayXd& tail = brir.tail.left;
  ArrayXd schroeder(tail.size());
  double acc = 0.0;
  for (Eigen::Index i = tail.size() - 1; i >= 0; --i) {
    acc += tail(i) * tail(i);
    schroeder(i) = acc;
  }
  const ArrayXd db = 10.0 * (schroeder / schroeder(0)).log10();
  // least-squares slope over the -5..-35 dB stretch
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < db.size(); ++i) {
    if (db(i) > -5.0 || db(i) < -35.0) continue;
    const double x = static_cast<double>(i) / fs;
    sx += x;
    sy += db(i);
    sxx += x * x;
    sxy += x * db(i);
    ++count;
  }
  REQUIRE(count > 100);
  const double slope = (sxy - sx * sy / count) / (sxx - sx * sx / count);
  const double decay_over_rt60 = slope * room.rt60_s;
  CHECK(std::abs(decay_over_rt60 + 60.0) < 1.0);
}

TEST_CASE("array RIRs: equidistant mics share the direct TOA") {
  RoomSpec room;
  ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  const std::vector<Waveform> rirs = synthesize_array_rirs(room, {0, 3, 0}, array, 16000.0);
  REQUIRE(rirs.size() == 8);
  // mics 1 ( +45 deg ... ) hmm: mics at k*45 deg; mics 2 and 6 are +y/-y.
  // Pick the pair symmetric about the y axis: indices 1 (45) and 3 (135).
  Eigen::Index p1, p3;
  rirs[1].samples.abs().maxCoeff(&p1);
  rirs[3].samples.abs().maxCoeff(&p3);
  CHECK(p1 == p3);
}

TEST_CASE("array RIR TOA differences match geometry within half a sample") {
  RoomSpec room;
  const double fs = 16000.0;
  ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  const Vec3 source{4.0, 1.0, 0.0};
  const std::vector<Waveform> rirs = synthesize_array_rirs(room, source, array, fs);
  for (size_t i = 0; i < rirs.size(); ++i) {
    Eigen::Index peak;
    rirs[i].samples.abs().maxCoeff(&peak);
    const double expected = (source - array.mics[i]).norm() / kSpeedOfSound * fs;
    CHECK(std::abs(static_cast<double>(peak) - expected) <= 0.5);
  }
}

TEST_CASE("array RIR symmetry for a source on the +x axis") {
  RoomSpec room;
  ArraySpec array = ring_array(8, 0.106, {0, 0, 0});
  const std::vector<Waveform> rirs = synthesize_array_rirs(room, {5, 0, 0}, array, 16000.0);
  // mics k and 8-k mirror across the x axis
  for (size_t k : {1u, 2u, 3u}) {
    Eigen::Index pa, pb;
    rirs[k].samples.abs().maxCoeff(&pa);
    rirs[8 - k].samples.abs().maxCoeff(&pb);
    CHECK(pa == pb);
  }
}

TEST_CASE("ring_array validation") {
  CHECK_THROWS_AS(ring_array(1, 0.1, {0, 0, 0}), std::invalid_argument);
  const ArraySpec a = ring_array(8, 0.106, {1, 2, 0});
  CHECK(a.mics.size() == 8);
  CHECK((a.mics[0] - Vec3{1.106, 2, 0}).norm() < 1e-12);
}

TEST_CASE("room spec validation") {
  RoomSpec room;
  room.rt60_s = -1.0;
  CHECK_THROWS_AS(room.validate(), std::invalid_argument);
  room = RoomSpec{};
  room.reflectors = {{{{0, 0, 0}, {0, 0, 1}}, 1.5}};
  CHECK_THROWS_AS(room.validate(), std::invalid_argument);
}
