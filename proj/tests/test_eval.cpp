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

#include "binsep/eval.hpp"
#include "binsep/rng.hpp"

using namespace binsep;

namespace {
Waveform noise(Eigen::Index n, uint64_t seed) {
  Rng rng(seed);
  return {rng.gaussian_vector(n), 16000.0};
}
}  // namespace

TEST_CASE("sdr: perfect and scaled estimates hit the cap") {
  const Waveform ref = noise(16000, 1);
  CHECK(sdr(ref, ref) == 100.0);
  Waveform scaled = ref;
  scaled.samples *= 0.5;
  CHECK(sdr(scaled, ref) == 100.0);
}

TEST_CASE("sdr is invariant to positive scaling") {
  const Waveform ref = noise(16000, 2);
  Waveform est = ref;
  Rng rng(3);
  est.samples += 0.3 * rng.gaussian_vector(est.samples.size());
  const double base = sdr(est, ref);
  est.samples *= 7.25;
  CHECK(std::abs(sdr(est, ref) - base) < 1e-9);
}

TEST_CASE("sdr: equal-power independent noise lands near 0 dB") {
  const Waveform ref = noise(48000, 4);
  Waveform est = ref;
  Rng rng(5);
  ArrayXd perturb = rng.gaussian_vector(est.samples.size());
  perturb *= std::sqrt(ref.samples.square().sum() / perturb.square().sum());
  est.samples += perturb;
  CHECK(std::abs(sdr(est, ref)) < 0.2);
}

TEST_CASE("sdr absorbs a delay within the projection span") {
  const Waveform ref = noise(32000, 6);
  Waveform est{ArrayXd::Zero(32000), 16000.0};
  est.samples.tail(32000 - 100) = ref.samples.head(32000 - 100);  // 100-sample delay
  CHECK(sdr(est, ref) > 60.0);
}

TEST_CASE("sdr rejects a zero reference") {
  const Waveform est = noise(1000, 7);
  CHECK_THROWS_AS(sdr(est, Waveform{ArrayXd::Zero(1000), 16000.0}), std::invalid_argument);
}

TEST_CASE("oracle mask: dominance, ties, partition") {
  ArrayXXd e0(2, 2), e1(2, 2);
  e0 << 2.0, 1.0, 0.5, 0.7;
  e1 << 1.0, 1.0, 0.6, 0.7;
  const auto masks = oracle_mask({e0, e1});
  CHECK(masks[0](0, 0) == 1.0);  // strictly louder
  CHECK(masks[0](0, 1) == 1.0);  // tie -> lowest index
  CHECK(masks[1](0, 1) == 0.0);
  CHECK(masks[1](1, 0) == 1.0);
  CHECK(masks[0](1, 1) == 1.0);  // tie again

  Rng rng(8);
  std::vector<ArrayXXd> energies;
  for (int l = 0; l < 3; ++l)
    energies.push_back(ArrayXXd::NullaryExpr(32, 17, [&]() { return rng.uniform(0, 1); }));
  const auto random_masks = oracle_mask(energies);
  ArrayXXd total = ArrayXXd::Zero(32, 17);
  for (const auto& m : random_masks) {
    CHECK(((m == 0.0) || (m == 1.0)).all());
    total += m;
  }
  CHECK((total == 1.0).all());
}

TEST_CASE("random mask: determinism, range, complement, mean") {
  const ArrayXXd a = random_mask(64, 100, 42);
  const ArrayXXd b = random_mask(64, 100, 42);
  CHECK((a == b).all());
  CHECK((random_mask(64, 100, 43) != a).any());
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() < 1.0);
  const ArrayXXd complement = 1.0 - a;
  CHECK(((a + complement) == 1.0).all());

  const ArrayXXd big = random_mask(1000, 1000, 7);
  CHECK(big.mean() > 0.499);
  CHECK(big.mean() < 0.501);
}

TEST_CASE("paired t-test reproduces the classic sleep-data example") {
  const std::vector<double> drug1{0.7, -1.6, -0.2, -1.2, -0.1, 3.4, 3.7, 0.8, 0.0, 2.0};
  const std::vector<double> drug2{1.9, 0.8, 1.1, 0.1, -0.1, 4.4, 5.5, 1.6, 4.6, 3.4};
  const TTestResult res = paired_ttest(drug2, drug1);
  CHECK(res.dof == 9);
  CHECK(res.t == doctest::Approx(4.0621).epsilon(1e-5));
  CHECK(res.p == doctest::Approx(0.00283289).epsilon(1e-4));
}

TEST_CASE("paired t-test edge cases") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  CHECK(paired_ttest(a, a).p == 1.0);

  std::vector<double> shifted, base;
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const double x = rng.gaussian();
    base.push_back(x);
    shifted.push_back(x + 1.0 + 0.01 * rng.gaussian());
  }
  CHECK(paired_ttest(shifted, base).p < 0.001);

  const std::vector<double> b{2.0, 3.0, 4.0};
  CHECK(paired_ttest(b, a).p == 0.0);  // constant shift, zero variance
  CHECK_THROWS_AS(paired_ttest(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("regularized incomplete beta against frozen references") {
  CHECK(regularized_incomplete_beta(4.5, 0.5, 0.3) == doctest::Approx(0.001322950584267495).epsilon(1e-10));
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.7) == doctest::Approx(0.9163).epsilon(1e-10));
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("aggregate: means, angle breakdown, counting, p-values") {
  std::vector<SeparationScore> scores;
  auto add = [&](const std::string& scene, const std::string& method, double angle, double sdr_val) {
    scores.push_back({scene, method, angle, -angle, sdr_val, sdr_val, 1});
  };
  add("s0", "messl", 0.0, 3.0);
  add("s1", "messl", 30.0, 4.0);
  add("s2", "messl", 30.0, 5.0);
  add("s0", "eric-messl", 0.0, 3.5);
  add("s1", "eric-messl", 30.0, 4.6);
  add("s2", "eric-messl", 30.0, 5.4);

  const ExperimentReport report = aggregate(scores, "messl");
  CHECK(report.scenes_per_method == 3);
  for (const auto& m : report.methods) {
    if (m.method == "messl") {
      CHECK(m.mean_sdr_db == doctest::Approx(4.0));
      CHECK(m.mean_sdr_by_target_angle.at(30.0) == doctest::Approx(4.5));
    } else {
      CHECK(m.method == "eric-messl");
      CHECK(m.mean_sdr_db == doctest::Approx(4.5));
      CHECK(m.p_vs_baseline < 0.05);  // consistent +0.5 shift
      CHECK(m.t_vs_baseline > 0.0);
    }
  }

  SUBCASE("single score aggregates to itself") {
    const ExperimentReport single = aggregate({scores[0]}, "messl");
    CHECK(single.methods.size() == 1);
    CHECK(single.methods[0].mean_sdr_db == doctest::Approx(3.0));
  }
}
