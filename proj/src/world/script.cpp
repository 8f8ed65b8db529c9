#include "morphic/world/script.hpp"

#include <algorithm>
#include <cmath>

namespace morphic::world {

namespace {

Waypoint down_at(const Eigen::Vector3d& p, double finger) {
  return {{p, kDownQuat}, finger};
}

}  // namespace

std::vector<Waypoint> script_waypoints(const Task& task,
                                       const WorldState& s) {
  const auto& ws = workspace();
  std::vector<Waypoint> out;

  switch (task.kind) {
    case TaskKind::Reach: {
      out.push_back({{s.goal.p + Eigen::Vector3d{0.0, 0.0, 0.08}, s.goal.q}, 1.0});
      out.push_back({s.goal, 1.0});
      break;
    }
    case TaskKind::Pick: {
      const Eigen::Vector3d o = s.object.p;
      out.push_back(down_at(o + Eigen::Vector3d{0.0, 0.0, 0.14}, 1.0));
      // Hover with the gripper just above the sphere while the fingers close;
      // attachment latches before the fingers bottom out.
      out.push_back(down_at(o + Eigen::Vector3d{0.0, 0.0, 0.07}, 0.0));
      out.push_back(down_at(o + Eigen::Vector3d{0.0, 0.0, 0.35}, 0.0));
      break;
    }
    case TaskKind::Place: {
      const auto k = static_cast<std::size_t>(s.target_cabinet);
      const double cy = ws.cabinet_interior[k].center().y();
      out.push_back(down_at({0.50, cy, 1.00}, 0.1));
      out.push_back(down_at({0.74, cy, 0.98}, 0.1));
      out.push_back(down_at({0.74, cy, 0.98}, 1.0));  // release
      out.push_back(down_at({0.50, cy, 1.02}, 1.0));
      break;
    }
    case TaskKind::Close: {
      const int k = s.target_cabinet;
      const double step = 25.0 * M_PI / 180.0;
      double theta = s.door_angle[static_cast<std::size_t>(k)];
      while (theta > 0.0) {
        out.push_back(down_at(ws.handle_pos(k, theta), 0.0));
        theta -= step;
      }
      out.push_back(down_at(ws.handle_pos(k, 0.0), 0.0));
      out.push_back(
          down_at(ws.handle_pos(k, 0.0) + Eigen::Vector3d{-0.15, 0.0, 0.10}, 1.0));
      break;
    }
  }
  return out;
}

}  // namespace morphic::world
