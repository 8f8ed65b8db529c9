#include "morphic/world/geometry.hpp"

namespace morphic::world {

Eigen::Isometry3d Workspace::door_frame(int cabinet, double theta) const {
  const Eigen::Vector2d u = door_dir(cabinet, theta);
  const Eigen::Vector3d ux{u.x(), u.y(), 0.0};
  const Eigen::Vector3d uz{0.0, 0.0, 1.0};
  const Eigen::Vector3d uy = uz.cross(ux);  // panel normal
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear().col(0) = ux;
  t.linear().col(1) = uy;
  t.linear().col(2) = uz;
  const Eigen::Vector2d h = hinge[static_cast<std::size_t>(cabinet)];
  t.translation() = Eigen::Vector3d{h.x(), h.y(), door_zlo};
  return t;
}

double Workspace::support_z(double x, double y, double from_z) const {
  for (const auto& interior : cabinet_interior) {
    if (interior.contains_xy(x, y) && from_z < interior.hi.z()) {
      return interior.lo.z();
    }
  }
  for (const auto& body : cabinet_body) {
    if (body.contains_xy(x, y) && from_z >= body.hi.z()) return body.hi.z();
  }
  if (table.contains_xy(x, y) && from_z >= table.hi.z()) return table.hi.z();
  return 0.0;
}

const Workspace& workspace() {
  static const Workspace ws;
  return ws;
}

}  // namespace morphic::world
