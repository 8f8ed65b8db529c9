#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "morphic/arm/collision.hpp"
#include "morphic/arm/ik.hpp"
#include "morphic/arm/kinematics.hpp"
#include "morphic/arm/types.hpp"
#include "morphic/util/rng.hpp"

using namespace morphic;

namespace {

// Independent forward-kinematics oracle: plain homogeneous 4x4 matrix
// products with Rodrigues rotation matrices, no quaternion code shared with
// the implementation.
Eigen::Matrix4d rot_about(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d a = axis.normalized();
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  const Eigen::Matrix3d r =
      c * Eigen::Matrix3d::Identity() + s * k + (1 - c) * (a * a.transpose());
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = r;
  return t;
}

Eigen::Matrix4d translate_z(double d) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t(2, 3) = d;
  return t;
}

Eigen::Matrix4d oracle_fk(const arm::ArmModel& model,
                          const arm::MorphologyParams& m,
                          const arm::ArmState& state) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = model.base_pose.q.toRotationMatrix();
  t.topRightCorner<3, 1>() = model.base_pose.p;
  for (int i = 0; i < arm::kNumJoints; ++i) {
    const auto k = static_cast<std::size_t>(i);
    t = t * rot_about(model.joint_axes[k], state.q[k]) *
        translate_z(model.link_length(m, i));
  }
  return t;
}

arm::ArmState random_state(const arm::ArmModel& model, util::Rng& rng,
                           double limit_fraction = 1.0) {
  arm::ArmState s;
  for (int i = 0; i < arm::kNumJoints; ++i) {
    const auto k = static_cast<std::size_t>(i);
    s.q[k] = rng.uniform(limit_fraction * model.limit_lo[k],
                         limit_fraction * model.limit_hi[k]);
  }
  s.finger = rng.uniform();
  return s;
}

arm::MorphologyParams random_morph(const arm::ArmModel& model, util::Rng& rng) {
  arm::MorphologyParams m;
  for (int i = 0; i < arm::kNumJoints; ++i) {
    const auto k = static_cast<std::size_t>(i);
    m.deltas[k] = rng.uniform(model.link_ranges[k].lo, model.link_ranges[k].hi);
  }
  return m;
}

}  // namespace

TEST_CASE("fk matches independent matrix-product oracle") {
  const auto model = arm::default_arm();
  util::Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_morph(model, rng);
    const auto s = random_state(model, rng);
    const auto frames = arm::forward_kinematics(model, m, s);
    const Eigen::Matrix4d t = oracle_fk(model, m, s);

    worst = std::max(worst, (frames.ee.p - t.topRightCorner<3, 1>()).norm());
    const Eigen::Matrix3d rd =
        frames.ee.q.toRotationMatrix() - t.topLeftCorner<3, 3>();
    worst = std::max(worst, rd.norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("fk straight chain at zero joints") {
  const auto model = arm::default_arm();
  const arm::MorphologyParams m;  // baseline
  arm::ArmState s;
  s.q.fill(0.0);
  const auto frames = arm::forward_kinematics(model, m, s);

  double total = 0.0;
  for (double l : model.base_lengths) total += l;
  const Eigen::Vector3d expect = model.base_pose.p + Eigen::Vector3d(0, 0, total);
  CHECK((frames.ee.p - expect).norm() < 1e-12);
  CHECK(arm::orientation_distance(frames.ee.q, model.base_pose.q) < 1e-12);

  // intermediate points stack up the link lengths
  double acc = 0.0;
  for (int i = 0; i <= arm::kNumJoints; ++i) {
    const auto k = static_cast<std::size_t>(i);
    CHECK(std::abs(frames.point[k].z() - (model.base_pose.p.z() + acc)) < 1e-12);
    if (i < arm::kNumJoints) acc += model.base_lengths[k];
  }
}

TEST_CASE("fk stays finite over in-range fuzz") {
  const auto model = arm::default_arm();
  util::Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = random_morph(model, rng);
    const auto s = random_state(model, rng);
    const auto frames = arm::forward_kinematics(model, m, s);
    CHECK(frames.ee.p.allFinite());
    CHECK(std::isfinite(frames.ee.q.norm()));
  }
}

TEST_CASE("jacobian matches central finite differences") {
  const auto model = arm::default_arm();
  util::Rng rng(202);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_morph(model, rng);
    const auto s = random_state(model, rng, 0.9);
    const auto j = arm::ee_jacobian(model, m, s);

    for (int i = 0; i < arm::kNumJoints; ++i) {
      const auto k = static_cast<std::size_t>(i);
      arm::ArmState sp = s, sm = s;
      sp.q[k] += h;
      sm.q[k] -= h;
      const auto fp = arm::forward_kinematics(model, m, sp);
      const auto fm = arm::forward_kinematics(model, m, sm);

      const Eigen::Vector3d lin_fd = (fp.ee.p - fm.ee.p) / (2 * h);
      const Eigen::Vector3d ang_fd =
          arm::orientation_error(fp.ee.q, fm.ee.q) / (2 * h);

      worst = std::max(worst, (j.block<3, 1>(0, i) - lin_fd).norm());
      worst = std::max(worst, (j.block<3, 1>(3, i) - ang_fd).norm());
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("two-link planar chain matches analytic jacobian") {
  // Two y-axis joints, links along local +z: the chain moves in the xz
  // plane with x = l1 s1 + l2 s12, z = l1 c1 + l2 c12.
  const Eigen::Vector3d y(0, 1, 0);
  const std::array<Eigen::Vector3d, 2> axes{y, y};
  const std::array<double, 2> lengths{0.8, 0.5};

  util::Rng rng(303);
  for (int trial = 0; trial < 20; ++trial) {
    const std::array<double, 2> q{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const auto frames = arm::detail::fk_chain(arm::Pose::identity(), axes,
                                              lengths, q);
    const auto j = arm::detail::jacobian_chain(frames, axes);

    const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
    const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
    const double l1 = lengths[0], l2 = lengths[1];

    CHECK(frames.ee.p.x() == doctest::Approx(l1 * s1 + l2 * s12).epsilon(1e-12));
    CHECK(frames.ee.p.z() == doctest::Approx(l1 * c1 + l2 * c12).epsilon(1e-12));

    // dx/dq, dz/dq
    CHECK(j(0, 0) == doctest::Approx(l1 * c1 + l2 * c12).epsilon(1e-9));
    CHECK(j(0, 1) == doctest::Approx(l2 * c12).epsilon(1e-9));
    CHECK(j(2, 0) == doctest::Approx(-l1 * s1 - l2 * s12).epsilon(1e-9));
    CHECK(j(2, 1) == doctest::Approx(-l2 * s12).epsilon(1e-9));
    // no motion out of plane
    CHECK(std::abs(j(1, 0)) < 1e-12);
    CHECK(std::abs(j(1, 1)) < 1e-12);
  }
}

TEST_CASE("ik round trip on reachable poses") {
  const auto model = arm::default_arm();
  const arm::IkConfig cfg;
  const arm::CollisionEnv env;  // free space
  util::Rng rng(404);

  int converged = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    // Reachable means collision-free too; rejection-sample the truth state.
    auto m = random_morph(model, rng);
    auto truth = random_state(model, rng, 0.7);
    while (arm::in_collision(
        arm::arm_capsules(model, arm::forward_kinematics(model, m, truth)), env)) {
      m = random_morph(model, rng);
      truth = random_state(model, rng, 0.7);
    }
    const auto target = arm::forward_kinematics(model, m, truth).ee;

    arm::ArmState init = truth;
    for (auto& qi : init.q) qi += rng.uniform(-0.3, 0.3);

    const auto sol = arm::solve_ik(model, m, target, init, cfg, env);
    REQUIRE(sol.ok());
    ++converged;

    const auto reached = arm::forward_kinematics(model, m, sol.value()).ee;
    CHECK((reached.p - target.p).norm() < cfg.tol_pos);
    CHECK(arm::orientation_distance(reached.q, target.q) < cfg.tol_rot * 1.5);
    for (int i = 0; i < arm::kNumJoints; ++i) {
      const auto k = static_cast<std::size_t>(i);
      CHECK(sol.value().q[k] >= model.limit_lo[k]);
      CHECK(sol.value().q[k] <= model.limit_hi[k]);
    }
    CHECK(sol.value().finger == doctest::Approx(init.finger));
  }
  CHECK(converged == trials);
}

TEST_CASE("ik reports unreachable targets") {
  const auto model = arm::default_arm();
  const arm::IkConfig cfg;
  const arm::CollisionEnv env;
  const arm::MorphologyParams m;

  arm::Pose target;
  target.p = Eigen::Vector3d(5.0, 0.0, 0.5);
  const auto sol = arm::solve_ik(model, m, target, arm::ArmState{}, cfg, env);
  REQUIRE(!sol.ok());
  CHECK(sol.error() == arm::IkError::NoConvergence);
}

TEST_CASE("ik rejects solutions colliding with the table") {
  const auto model = arm::default_arm();
  const arm::IkConfig cfg;
  const arm::MorphologyParams m;

  arm::CollisionEnv env;
  env.has_table = true;
  env.table = Eigen::AlignedBox3d(Eigen::Vector3d(0.30, -0.50, 0.75),
                                  Eigen::Vector3d(0.90, 0.50, 0.80));
  env.floor_z = 0.0;

  // Reachable pose whose gripper would sink into the table slab.
  arm::Pose target;
  target.p = Eigen::Vector3d(0.55, 0.0, 0.78);
  target.q = Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitY()));

  arm::ArmState init;
  init.q = {0.0, 0.4, 0.8, 1.0, 0.0, 0.5, 0.0};
  const auto sol = arm::solve_ik(model, m, target, init, cfg, env);
  REQUIRE(!sol.ok());
  CHECK(sol.error() == arm::IkError::Collision);

  // Same pose without the table is fine.
  const arm::CollisionEnv free_env;
  const auto sol2 = arm::solve_ik(model, m, target, init, cfg, free_env);
  CHECK(sol2.ok());
}

TEST_CASE("morphology sampling covers ranges uniformly") {
  const auto model = arm::default_arm();
  util::Rng rng(505);

  constexpr int kSamples = 20000;
  constexpr int kBins = 10;
  std::array<std::array<int, kBins>, arm::kNumJoints> hist{};

  for (int s = 0; s < kSamples; ++s) {
    const auto m = arm::sample_morphology(rng, model.link_ranges);
    for (int i = 0; i < arm::kNumJoints; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const auto& r = model.link_ranges[k];
      REQUIRE(m.deltas[k] >= r.lo);
      REQUIRE(m.deltas[k] < r.hi);
      int bin = static_cast<int>((m.deltas[k] - r.lo) / (r.hi - r.lo) * kBins);
      bin = std::min(bin, kBins - 1);
      hist[k][static_cast<std::size_t>(bin)]++;
    }
  }

  // chi-square with 9 dof; 21.67 is the p = 0.01 critical value. The seed is
  // fixed, so this is a regression check, not a flaky statistical test.
  const double expect = static_cast<double>(kSamples) / kBins;
  for (int i = 0; i < arm::kNumJoints; ++i) {
    double chi2 = 0.0;
    for (int b = 0; b < kBins; ++b) {
      const double d = hist[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] - expect;
      chi2 += d * d / expect;
    }
    CHECK(chi2 < 21.67);
  }
}

TEST_CASE("segment distance basics") {
  using V = Eigen::Vector3d;
  CHECK(arm::segment_distance(V(0, 0, 0), V(1, 0, 0), V(0, 1, 0), V(1, 1, 0)) ==
        doctest::Approx(1.0));
  CHECK(arm::segment_distance(V(0, 0, 0), V(1, 0, 0), V(2, 0, 0), V(3, 0, 0)) ==
        doctest::Approx(1.0));
  // crossing segments
  CHECK(arm::segment_distance(V(-1, 0, 0), V(1, 0, 0), V(0, -1, 1), V(0, 1, 1)) ==
        doctest::Approx(1.0));
}

TEST_CASE("segment box distance") {
  const Eigen::AlignedBox3d box(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 1, 1));
  using V = Eigen::Vector3d;
  CHECK(arm::segment_box_distance(V(2, 0.5, 0.5), V(3, 0.5, 0.5), box) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(arm::segment_box_distance(V(-1, 0.5, 0.5), V(2, 0.5, 0.5), box) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(arm::segment_box_distance(V(2, -1, 0.5), V(2, 2, 0.5), box) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pose compose and inverse round trip") {
  util::Rng rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    arm::Pose a{Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)),
                Eigen::Quaterniond(Eigen::AngleAxisd(
                    rng.uniform(-3, 3), Eigen::Vector3d(rng.uniform(-1, 1),
                                                        rng.uniform(-1, 1),
                                                        rng.uniform(-1, 1))
                                            .normalized()))};
    const arm::Pose id = a.compose(a.inverse());
    CHECK(id.p.norm() < 1e-12);
    CHECK(arm::orientation_distance(id.q, Eigen::Quaterniond::Identity()) < 1e-12);
  }
}

TEST_CASE("orientation error is consistent with distance") {
  const Eigen::Quaterniond a(Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitZ()));
  const Eigen::Quaterniond b = Eigen::Quaterniond::Identity();
  CHECK(arm::orientation_distance(a, b) == doctest::Approx(0.7));
  const Eigen::Vector3d e = arm::orientation_error(a, b);
  CHECK(e.norm() == doctest::Approx(0.7));
  CHECK(e.normalized().z() == doctest::Approx(1.0));

  // double cover: -q is the same rotation
  Eigen::Quaterniond an = a;
  an.coeffs() *= -1.0;
  CHECK(arm::orientation_distance(an, b) == doctest::Approx(0.7));
  CHECK((arm::orientation_error(an, b) - e).norm() < 1e-12);
}
