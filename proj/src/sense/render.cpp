#include "morphic/sense/render.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "morphic/arm/collision.hpp"
#include "morphic/arm/kinematics.hpp"

namespace morphic::sense {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-9;

std::atomic<std::uint64_t> g_render_count{0};

double ray_sphere(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                  const Eigen::Vector3d& c, double r) {
  const Eigen::Vector3d oc = o - c;
  const double b = oc.dot(d);
  const double disc = b * b - (oc.squaredNorm() - r * r);
  if (disc < 0.0) return kInf;
  const double t = -b - std::sqrt(disc);
  return t > kEps ? t : kInf;
}

double ray_aabb(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  double tmin = -kInf;
  double tmax = kInf;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < lo[i] || o[i] > hi[i]) return kInf;
      continue;
    }
    const double inv = 1.0 / d[i];
    double t1 = (lo[i] - o[i]) * inv;
    double t2 = (hi[i] - o[i]) * inv;
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return kInf;
  }
  return tmin > kEps ? tmin : kInf;
}

double ray_capsule(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                   const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                   double r) {
  const Eigen::Vector3d ba = b - a;
  const Eigen::Vector3d oa = o - a;
  const double baba = ba.squaredNorm();
  const double bard = ba.dot(d);
  const double baoa = ba.dot(oa);
  const double rdoa = d.dot(oa);
  const double oaoa = oa.squaredNorm();

  double best = kInf;
  const double qa = baba - bard * bard;
  const double qb = baba * rdoa - baoa * bard;
  const double qc = baba * oaoa - baoa * baoa - r * r * baba;
  if (qa > 1e-12) {
    const double disc = qb * qb - qa * qc;
    if (disc >= 0.0) {
      const double t = (-qb - std::sqrt(disc)) / qa;
      const double y = baoa + t * bard;
      if (t > kEps && y >= 0.0 && y <= baba) best = t;
    }
  }
  best = std::min(best, ray_sphere(o, d, a, r));
  best = std::min(best, ray_sphere(o, d, b, r));
  return best;
}

struct Prim {
  enum Kind { Sphere, CapsuleSeg, Aabb, Obb } kind;
  Category cat;
  Eigen::Vector3d a, b;  // sphere center / capsule ends
  double r = 0.0;
  Eigen::Vector3d lo, hi;        // aabb / obb local bounds
  Eigen::Isometry3d world_from_local = Eigen::Isometry3d::Identity();
  Eigen::Isometry3d local_from_world = Eigen::Isometry3d::Identity();
};

std::vector<Prim> build_scene(const world::WorldState& s,
                              const arm::ArmModel& model,
                              const arm::MorphologyParams& params,
                              const RenderContent& content) {
  const auto& ws = world::workspace();
  std::vector<Prim> prims;
  if (content.statics) {
    Prim table{Prim::Aabb, Category::Table, {}, {}, 0.0, ws.table.lo,
               ws.table.hi};
    prims.push_back(table);
    for (const auto& body : ws.cabinet_body) {
      Prim p{Prim::Aabb, Category::Cabinet, {}, {}, 0.0, body.lo, body.hi};
      prims.push_back(p);
    }
    for (int k = 0; k < 2; ++k) {
      Prim p;
      p.kind = Prim::Obb;
      p.cat = Category::Door;
      p.lo = {0.0, -0.5 * ws.door_thickness, 0.0};
      p.hi = {ws.door_width, 0.5 * ws.door_thickness, ws.door_zhi - ws.door_zlo};
      p.world_from_local =
          ws.door_frame(k, s.door_angle[static_cast<std::size_t>(k)]);
      p.local_from_world = p.world_from_local.inverse();
      prims.push_back(p);
    }
  }
  if (content.object) {
    Prim obj;
    obj.kind = Prim::Sphere;
    obj.cat = Category::Object;
    obj.a = s.object.p + Eigen::Vector3d{0.0, 0.0, ws.object_radius};
    obj.r = ws.object_radius;
    prims.push_back(obj);
  }
  if (content.arm) {
    const auto frames = arm::forward_kinematics(model, params, s.arm);
    for (const auto& cap : arm::arm_capsules(model, frames)) {
      Prim p;
      p.kind = Prim::CapsuleSeg;
      p.cat = Category::Arm;
      p.a = cap.a;
      p.b = cap.b;
      p.r = cap.radius;
      prims.push_back(p);
    }
  }
  return prims;
}

struct Hit {
  double t = kInf;
  Category cat = Category::Background;
};

Hit cast(const std::vector<Prim>& prims, const Eigen::Vector3d& o,
         const Eigen::Vector3d& d) {
  Hit best;
  for (const auto& p : prims) {
    double t = kInf;
    switch (p.kind) {
      case Prim::Sphere:
        t = ray_sphere(o, d, p.a, p.r);
        break;
      case Prim::CapsuleSeg:
        t = ray_capsule(o, d, p.a, p.b, p.r);
        break;
      case Prim::Aabb:
        t = ray_aabb(o, d, p.lo, p.hi);
        break;
      case Prim::Obb: {
        const Eigen::Vector3d ol = p.local_from_world * o;
        const Eigen::Vector3d dl = p.local_from_world.linear() * d;
        t = ray_aabb(ol, dl, p.lo, p.hi);
        break;
      }
    }
    if (t < best.t) {
      best.t = t;
      best.cat = p.cat;
    }
  }
  return best;
}

void validate_camera(const CameraModel& camera, bool need_channels) {
  if (camera.height < 8 || camera.width < 8) {
    throw std::invalid_argument("camera resolution must be at least 8x8");
  }
  if (need_channels && camera.channels != 1 && camera.channels != 2) {
    throw std::invalid_argument("camera channels must be 1 or 2");
  }
}

// Shared rasterizer: per-pixel nearest hit.
template <typename Fn>
void for_each_pixel_hit(const std::vector<Prim>& prims,
                        const CameraModel& camera, Fn&& fn) {
  const double tan_half = std::tan(0.5 * camera.fov_deg * M_PI / 180.0);
  const Eigen::Vector3d origin = camera.pose.p;
  for (int y = 0; y < camera.height; ++y) {
    const double v =
        (1.0 - 2.0 * (y + 0.5) / camera.height) * tan_half;
    for (int x = 0; x < camera.width; ++x) {
      const double u = (2.0 * (x + 0.5) / camera.width - 1.0) * tan_half;
      const Eigen::Vector3d dir =
          (camera.pose.q * Eigen::Vector3d{u, v, 1.0}.normalized());
      fn(y, x, cast(prims, origin, dir));
    }
  }
}

}  // namespace

double category_albedo(Category c) {
  switch (c) {
    case Category::Background: return 0.0;
    case Category::Table: return 0.25;
    case Category::Cabinet: return 0.4;
    case Category::Door: return 0.5;
    case Category::Object: return 0.9;
    case Category::Arm: return 0.65;
  }
  return 0.0;
}

Image render(const world::WorldState& state, const arm::ArmModel& model,
             const arm::MorphologyParams& params, const CameraModel& camera,
             const RenderContent& content) {
  validate_camera(camera, /*need_channels=*/true);
  g_render_count.fetch_add(1, std::memory_order_relaxed);
  const auto prims = build_scene(state, model, params, content);
  Image img(camera.height, camera.width, camera.channels);
  for_each_pixel_hit(prims, camera, [&](int y, int x, const Hit& h) {
    if (!std::isfinite(h.t)) return;  // background stays 0
    const double shade = 1.0 / (1.0 + h.t);
    img.at(0, y, x) = category_albedo(h.cat) * shade;
    if (camera.channels > 1) img.at(1, y, x) = shade;
  });
  return img;
}

std::vector<Category> render_categories(const world::WorldState& state,
                                        const arm::ArmModel& model,
                                        const arm::MorphologyParams& params,
                                        const CameraModel& camera,
                                        const RenderContent& content) {
  validate_camera(camera, /*need_channels=*/false);
  g_render_count.fetch_add(1, std::memory_order_relaxed);
  const auto prims = build_scene(state, model, params, content);
  std::vector<Category> out(
      static_cast<std::size_t>(camera.height) *
          static_cast<std::size_t>(camera.width),
      Category::Background);
  for_each_pixel_hit(prims, camera, [&](int y, int x, const Hit& h) {
    out[static_cast<std::size_t>(y) * static_cast<std::size_t>(camera.width) +
        static_cast<std::size_t>(x)] = h.cat;
  });
  return out;
}

util::Expected<double, SenseError> occlusion_fraction(
    const world::WorldState& state, const arm::ArmModel& model,
    const arm::MorphologyParams& params, const CameraModel& camera) {
  RenderContent no_arm;
  no_arm.arm = false;
  const auto base = render_categories(state, model, params, camera, no_arm);
  const auto full = render_categories(state, model, params, camera);
  std::size_t visible = 0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i] != Category::Object) continue;
    ++visible;
    if (full[i] == Category::Arm) ++covered;
  }
  if (visible == 0) return util::err(SenseError::ObjectNotInFrustum);
  return static_cast<double>(covered) / static_cast<double>(visible);
}

std::uint64_t render_count() {
  return g_render_count.load(std::memory_order_relaxed);
}

void reset_render_count() {
  g_render_count.store(0, std::memory_order_relaxed);
}

}  // namespace morphic::sense
