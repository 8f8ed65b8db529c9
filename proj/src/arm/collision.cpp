#include "morphic/arm/collision.hpp"

#include <algorithm>
#include <cmath>

namespace morphic::arm {

std::vector<Capsule> arm_capsules(const ArmModel& model,
                                  const LinkFrames& frames) {
  std::vector<Capsule> caps;
  caps.reserve(kNumJoints);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto k = static_cast<std::size_t>(i);
    caps.push_back({frames.point[k], frames.point[k + 1],
                    model.collision_radius[k]});
  }
  return caps;
}

double segment_distance(const Eigen::Vector3d& a0, const Eigen::Vector3d& a1,
                        const Eigen::Vector3d& b0, const Eigen::Vector3d& b1) {
  // Ericson, Real-Time Collision Detection, closest point of two segments.
  const Eigen::Vector3d d1 = a1 - a0;
  const Eigen::Vector3d d2 = b1 - b0;
  const Eigen::Vector3d r = a0 - b0;
  const double la = d1.squaredNorm();
  const double lb = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0, t = 0.0;
  constexpr double kEps = 1e-12;

  if (la <= kEps && lb <= kEps) {
    return r.norm();
  }
  if (la <= kEps) {
    t = std::clamp(f / lb, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (lb <= kEps) {
      s = std::clamp(-c / la, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = la * lb - b * b;
      if (denom > kEps) {
        s = std::clamp((b * f - c * lb) / denom, 0.0, 1.0);
      }
      t = (b * s + f) / lb;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / la, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / la, 0.0, 1.0);
      }
    }
  }
  return ((a0 + s * d1) - (b0 + t * d2)).norm();
}

namespace {

double point_box_distance(const Eigen::Vector3d& p,
                          const Eigen::AlignedBox3d& box) {
  Eigen::Vector3d c = p.cwiseMax(box.min()).cwiseMin(box.max());
  return (p - c).norm();
}

}  // namespace

double segment_box_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Eigen::AlignedBox3d& box) {
  // Distance from a segment to a convex set is convex in the segment
  // parameter, so ternary search converges to the minimum.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double d1 = point_box_distance(a + m1 * (b - a), box);
    const double d2 = point_box_distance(a + m2 * (b - a), box);
    if (d1 < d2) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return point_box_distance(a + 0.5 * (lo + hi) * (b - a), box);
}

bool in_collision(const std::vector<Capsule>& arm, const CollisionEnv& env) {
  const std::size_t n = arm.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {  // skip adjacent links
      const double d = segment_distance(arm[i].a, arm[i].b, arm[j].a, arm[j].b);
      if (d < arm[i].radius + arm[j].radius + env.contact_distance) return true;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    // Link 0 shares a joint with the pedestal mount; treat it as adjacent.
    for (std::size_t s = 0; s < env.static_capsules.size(); ++s) {
      if (i == 0) continue;
      const auto& sc = env.static_capsules[s];
      const double d = segment_distance(arm[i].a, arm[i].b, sc.a, sc.b);
      if (d < arm[i].radius + sc.radius + env.contact_distance) return true;
    }
    if (env.has_table) {
      const double d = segment_box_distance(arm[i].a, arm[i].b, env.table);
      if (d < arm[i].radius + env.contact_distance) return true;
    }
    const double zmin = std::min(arm[i].a.z(), arm[i].b.z());
    if (zmin - arm[i].radius < env.floor_z) return true;
  }
  return false;
}

}  // namespace morphic::arm
