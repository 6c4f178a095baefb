#pragma once

#include "negoplan/geometry.hpp"

namespace negoplan {

/// Path-relative kinematic state.
struct FrenetState {
  double s = 0.0;
  double s_dot = 0.0;
  double s_ddot = 0.0;
  double d = 0.0;
  double d_dot = 0.0;
  double d_ddot = 0.0;

  bool operator==(const FrenetState&) const = default;
};

/// World-frame pose with footprint dimensions.
struct VehiclePose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // >= 0, no reverse
  double accel = 0.0;
  double length = 4.6;
  double width = 1.8;

  Vec2 position() const { return {x, y}; }
  OrientedBox footprint() const { return {position(), heading, length, width}; }

  bool operator==(const VehiclePose&) const = default;
};

}  // namespace negoplan
