#pragma once

#include <vector>

#include "morphic/world/world.hpp"

namespace morphic::world {

// Scripted reference path for a freshly reset episode. Waypoints depend only
// on quantities realized at reset (goal, object spawn, door angles), so the
// path is deterministic given the reset. The world advances the stage pointer
// as waypoints are met; trackers hold at the final waypoint.
std::vector<Waypoint> script_waypoints(const Task& task,
                                       const WorldState& at_reset);

}  // namespace morphic::world
