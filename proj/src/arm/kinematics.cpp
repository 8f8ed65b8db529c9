#include "morphic/arm/kinematics.hpp"

#include <cmath>

namespace morphic::arm {

double orientation_distance(const Eigen::Quaterniond& a,
                            const Eigen::Quaterniond& b) {
  double d = std::abs(a.dot(b));
  if (d > 1.0) d = 1.0;
  return 2.0 * std::acos(d);
}

Eigen::Vector3d orientation_error(const Eigen::Quaterniond& target,
                                  const Eigen::Quaterniond& current) {
  Eigen::Quaterniond rel = target * current.conjugate();
  if (rel.w() < 0.0) rel.coeffs() *= -1.0;  // shorter arc of the double cover
  const Eigen::AngleAxisd aa(rel);
  return aa.angle() * aa.axis();
}

namespace detail {

ChainFrames fk_chain(const Pose& base, std::span<const Eigen::Vector3d> axes,
                     std::span<const double> lengths,
                     std::span<const double> q) {
  ChainFrames out;
  const std::size_t n = axes.size();
  out.joint_pose.resize(n);
  out.point.resize(n + 1);

  Pose t = base;
  out.point[0] = t.p;
  for (std::size_t i = 0; i < n; ++i) {
    t.q = (t.q * Eigen::Quaterniond(Eigen::AngleAxisd(q[i], axes[i]))).normalized();
    out.joint_pose[i] = t;
    t.p += t.q * Eigen::Vector3d(0.0, 0.0, lengths[i]);
    out.point[i + 1] = t.p;
  }
  out.ee = t;
  return out;
}

Eigen::MatrixXd jacobian_chain(const ChainFrames& frames,
                               std::span<const Eigen::Vector3d> axes) {
  const std::size_t n = axes.size();
  Eigen::MatrixXd j(6, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d w = frames.joint_pose[i].q * axes[i];
    j.block<3, 1>(0, static_cast<Eigen::Index>(i)) =
        w.cross(frames.ee.p - frames.joint_pose[i].p);
    j.block<3, 1>(3, static_cast<Eigen::Index>(i)) = w;
  }
  return j;
}

}  // namespace detail

LinkFrames forward_kinematics(const ArmModel& model, const MorphologyParams& m,
                              const ArmState& state) {
  std::array<double, kNumJoints> lengths;
  for (int i = 0; i < kNumJoints; ++i) lengths[static_cast<std::size_t>(i)] = model.link_length(m, i);

  const auto chain = detail::fk_chain(model.base_pose, model.joint_axes,
                                      lengths, state.q);
  LinkFrames out;
  for (int i = 0; i < kNumJoints; ++i) {
    out.joint_pose[static_cast<std::size_t>(i)] = chain.joint_pose[static_cast<std::size_t>(i)];
    out.point[static_cast<std::size_t>(i)] = chain.point[static_cast<std::size_t>(i)];
  }
  out.point[kNumJoints] = chain.point[kNumJoints];
  out.ee = chain.ee;
  return out;
}

Eigen::Matrix<double, 6, kNumJoints> ee_jacobian(const ArmModel& model,
                                                 const MorphologyParams& m,
                                                 const ArmState& state) {
  std::array<double, kNumJoints> lengths;
  for (int i = 0; i < kNumJoints; ++i) lengths[static_cast<std::size_t>(i)] = model.link_length(m, i);

  const auto chain = detail::fk_chain(model.base_pose, model.joint_axes,
                                      lengths, state.q);
  return detail::jacobian_chain(chain, model.joint_axes);
}

}  // namespace morphic::arm
