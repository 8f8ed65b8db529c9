#pragma once

#include <cstdint>
#include <vector>

#include "morphic/sense/camera.hpp"
#include "morphic/util/expected.hpp"
#include "morphic/world/world.hpp"

namespace morphic::sense {

enum class Category : std::uint8_t {
  Background = 0,
  Table,
  Cabinet,
  Door,
  Object,
  Arm,
};

double category_albedo(Category c);

// Scene-content switches; rendering with everything off gives the background.
struct RenderContent {
  bool arm = true;
  bool object = true;
  bool statics = true;  // table, cabinets, doors
};

// One ray per pixel, nearest hit wins. Channel 0 is the hit category's albedo
// shaded by distance (albedo / (1 + t)); channel 1 is inverse depth
// (1 / (1 + t)); misses are 0 in both.
Image render(const world::WorldState& state, const arm::ArmModel& model,
             const arm::MorphologyParams& params, const CameraModel& camera,
             const RenderContent& content = {});

// Per-pixel nearest-hit categories, row-major.
std::vector<Category> render_categories(const world::WorldState& state,
                                        const arm::ArmModel& model,
                                        const arm::MorphologyParams& params,
                                        const CameraModel& camera,
                                        const RenderContent& content = {});

enum class SenseError { ObjectNotInFrustum };

// Fraction of the object's visible silhouette (rendered with the arm removed)
// that arm links cover when the arm is present. Diagnostic only.
util::Expected<double, SenseError> occlusion_fraction(
    const world::WorldState& state, const arm::ArmModel& model,
    const arm::MorphologyParams& params, const CameraModel& camera);

// Process-wide count of frames produced by render/render_categories, for
// asserting that privileged evaluation never touches the camera.
std::uint64_t render_count();
void reset_render_count();

}  // namespace morphic::sense
