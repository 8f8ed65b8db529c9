#include "morphic/arm/ik.hpp"

#include <algorithm>
#include <cmath>

namespace morphic::arm {

namespace {

struct AttemptResult {
  bool converged = false;
  bool collided = false;
  ArmState state;
};

struct TaskError {
  Eigen::Matrix<double, 6, 1> e;
  double pos = 0.0;
  double rot = 0.0;
  // position plus rotation scalarized for line-search comparisons
  double scalar() const { return pos + 0.2 * rot; }
};

TaskError task_error(const Pose& target, const Pose& current) {
  TaskError t;
  t.e.head<3>() = target.p - current.p;
  t.e.tail<3>() = orientation_error(target.q, current.q);
  t.pos = t.e.head<3>().norm();
  t.rot = t.e.tail<3>().norm();
  return t;
}

AttemptResult run_attempt(const ArmModel& model, const MorphologyParams& m,
                          const Pose& target, ArmState state,
                          const IkConfig& cfg, const CollisionEnv& env) {
  std::array<double, kNumJoints> lengths;
  for (int i = 0; i < kNumJoints; ++i) {
    lengths[static_cast<std::size_t>(i)] = model.link_length(m, i);
    state.q[static_cast<std::size_t>(i)] =
        std::clamp(state.q[static_cast<std::size_t>(i)],
                   model.limit_lo[static_cast<std::size_t>(i)],
                   model.limit_hi[static_cast<std::size_t>(i)]);
  }

  const auto fk = [&](const std::array<double, kNumJoints>& q) {
    return detail::fk_chain(model.base_pose, model.joint_axes, lengths, q);
  };

  AttemptResult out;
  auto chain = fk(state.q);
  TaskError err = task_error(target, chain.ee);

  for (int iter = 0; iter <= cfg.max_iterations; ++iter) {
    if (err.pos < cfg.tol_pos && err.rot < cfg.tol_rot) {
      LinkFrames frames;
      for (int i = 0; i < kNumJoints; ++i) {
        frames.joint_pose[static_cast<std::size_t>(i)] =
            chain.joint_pose[static_cast<std::size_t>(i)];
        frames.point[static_cast<std::size_t>(i)] =
            chain.point[static_cast<std::size_t>(i)];
      }
      frames.point[kNumJoints] = chain.point[kNumJoints];
      frames.ee = chain.ee;
      if (in_collision(arm_capsules(model, frames), env)) {
        out.collided = true;
        return out;
      }
      out.converged = true;
      out.state = state;
      return out;
    }
    if (iter == cfg.max_iterations) break;

    // Resolved-rate style error capping: far targets are approached in
    // bounded task-space increments, which keeps the damped step from
    // overshooting through singular regions.
    Eigen::Matrix<double, 6, 1> e = err.e;
    if (err.pos > 0.3) e.head<3>() *= 0.3 / err.pos;
    if (err.rot > 0.7) e.tail<3>() *= 0.7 / err.rot;

    const Eigen::MatrixXd j = detail::jacobian_chain(chain, model.joint_axes);
    Eigen::Matrix<double, 6, 6> a = j * j.transpose();
    // lambda governs far from the target; damping shrinks with the residual
    // so near-singular directions still converge inside the iteration budget
    // (the step cap and line search below bound the resulting steps).
    const double damping =
        std::min(cfg.lambda * cfg.lambda, err.e.squaredNorm()) + 1e-6;
    a.diagonal().array() += damping;
    Eigen::Matrix<double, kNumJoints, 1> dq =
        j.transpose() * a.ldlt().solve(e);

    const double step = dq.cwiseAbs().maxCoeff();
    if (step > cfg.max_joint_step) dq *= cfg.max_joint_step / step;

    // Backtracking keeps the damped step from limit-cycling near joint
    // limits; if no scale improves the error, the full step is taken anyway
    // so the iterate can leave a plateau.
    double alpha = 1.0;
    std::array<double, kNumJoints> best_q = state.q;
    detail::ChainFrames best_chain = chain;
    TaskError best_err = err;
    bool improved = false;
    for (int ls = 0; ls < 4; ++ls) {
      std::array<double, kNumJoints> trial = state.q;
      for (int i = 0; i < kNumJoints; ++i) {
        const auto k = static_cast<std::size_t>(i);
        trial[k] = std::clamp(trial[k] + alpha * dq[i], model.limit_lo[k],
                              model.limit_hi[k]);
      }
      auto trial_chain = fk(trial);
      const TaskError trial_err = task_error(target, trial_chain.ee);
      if (trial_err.scalar() < err.scalar()) {
        best_q = trial;
        best_chain = std::move(trial_chain);
        best_err = trial_err;
        improved = true;
        break;
      }
      if (ls == 0) {  // remember the full step as the plateau escape
        best_q = trial;
        best_chain = std::move(trial_chain);
        best_err = trial_err;
      }
      alpha *= 0.5;
    }
    (void)improved;
    state.q = best_q;
    chain = std::move(best_chain);
    err = best_err;
  }
  return out;
}

}  // namespace

util::Expected<ArmState, IkError> solve_ik(const ArmModel& model,
                                           const MorphologyParams& m,
                                           const Pose& target,
                                           const ArmState& init,
                                           const IkConfig& cfg,
                                           const CollisionEnv& env) {
  bool any_collision = false;
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    ArmState start = init;
    if (attempt > 0) {
      // Restarts are keyed by attempt index only, keeping solve_ik a pure
      // function of its arguments. The first two restarts jitter around the
      // caller's initial state (nearby basins), the rest sample uniformly.
      util::Rng rng(util::substream(cfg.restart_seed,
                                    static_cast<std::uint64_t>(attempt)));
      for (int i = 0; i < kNumJoints; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (attempt <= 2) {
          start.q[k] = std::clamp(init.q[k] + rng.uniform(-0.6, 0.6),
                                  model.limit_lo[k], model.limit_hi[k]);
        } else {
          start.q[k] =
              rng.uniform(0.8 * model.limit_lo[k], 0.8 * model.limit_hi[k]);
        }
      }
    }
    const AttemptResult r = run_attempt(model, m, target, start, cfg, env);
    if (r.converged) return r.state;
    any_collision = any_collision || r.collided;
  }
  return util::err(any_collision ? IkError::Collision : IkError::NoConvergence);
}

MorphologyParams sample_morphology(
    util::Rng& rng, const std::array<LinkRange, kNumJoints>& ranges) {
  MorphologyParams m;
  for (int i = 0; i < kNumJoints; ++i) {
    const auto k = static_cast<std::size_t>(i);
    m.deltas[k] = rng.uniform(ranges[k].lo, ranges[k].hi);
  }
  return m;
}

}  // namespace morphic::arm
