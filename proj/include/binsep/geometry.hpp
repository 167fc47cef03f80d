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

#pragma once

#include <cmath>

#include "binsep/types.hpp"

namespace binsep {

inline constexpr double kSpeedOfSound = 343.0;  // m/s

struct Plane {
  Vec3 point;
  Vec3 normal;
};

/// Mirror image of a source across a reflecting plane.
inline Vec3 image_source(const Vec3& source, const Plane& plane) {
  const double nn = plane.normal.squaredNorm();
  if (!(nn > 1e-24)) throw std::invalid_argument("degenerate plane normal");
  const Vec3 n = plane.normal / std::sqrt(nn);
  return source - 2.0 * (source - plane.point).dot(n) * n;
}

/// Listener head: two point ears on a sphere, facing +x at yaw 0, +y to the
/// listener's left, yaw counterclockwise about +z.
struct HeadPose {
  Vec3 position{0.0, 0.0, 0.0};
  double yaw_rad = 0.0;
  double radius_m = 0.09;  // ear separation 0.18 m
};

inline Vec3 left_axis(const HeadPose& head) {
  return {-std::sin(head.yaw_rad), std::cos(head.yaw_rad), 0.0};
}

inline Vec3 left_ear(const HeadPose& head) { return head.position + head.radius_m * left_axis(head); }
inline Vec3 right_ear(const HeadPose& head) { return head.position - head.radius_m * left_axis(head); }

/// Lateral sine of an arrival direction in the head frame: +1 hard left,
/// -1 hard right, 0 in the median plane.
inline double lateral_sine(const HeadPose& head, const Vec3& arrival_from) {
  const Vec3 d = arrival_from - head.position;
  const double r = d.norm();
  if (!(r > 1e-12)) throw std::invalid_argument("arrival position coincides with head center");
  return d.dot(left_axis(head)) / r;
}

}  // namespace binsep
