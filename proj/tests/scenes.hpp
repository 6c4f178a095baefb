#pragma once

// Hand-built planner scenes shared by unit and acceptance tests.

#include <algorithm>
#include <random>

#include "negoplan/planner.hpp"
#include "negoplan/world.hpp"

namespace scenes {

using namespace negoplan;

/// Ego waiting 13.35 m before the corridor at 4 m/s while the social vehicle
/// is already inside it, driving toward the ego at 3 m/s.
inline WorldState head_on_conflict(const CorridorMap& map) {
  EpisodeConfig cfg;
  cfg.social_start_dist = 1.0;
  WorldState w = reset(cfg, map);
  auto set_motion = [&](VehicleState& v, const ReferencePath& path, double s, double speed) {
    v.frenet = {s, speed, 0.0, 0.0, 0.0, 0.0};
    const Vec2 p = path.to_world(s, 0.0);
    v.pose.x = p.x();
    v.pose.y = p.y();
    v.pose.heading = wrap_angle(path.heading(s));
    v.pose.speed = speed;
  };
  set_motion(w.ego, map.ego_path, map.corridor_entry_s - 13.35, 4.0);
  // 3 m into the corridor from the social side.
  set_motion(w.social, map.social_path, map.corridor_entry_s + 3.0, 3.0);
  return w;
}

/// Signed gap between the corridor entry and the ego footprint's leading
/// edge over the plan; negative once any sample reaches into the corridor.
inline double min_gap_to_corridor(const CandidateTrajectory& plan, const CorridorMap& map) {
  double gap = 1e300;
  for (const TrajectorySample& smp : plan.samples)
    for (const Vec2& c : smp.pose.footprint().corners()) gap = std::min(gap, map.corridor_entry_s - c.x());
  return gap;
}

/// Random two-vehicle scene on the corridor map for property tests.
inline WorldState random_scene(const CorridorMap& map, std::mt19937_64& rng) {
  EpisodeConfig cfg;
  WorldState w = reset(cfg, map);
  std::uniform_real_distribution<double> ego_s(10.0, map.corridor_exit_s()), soc_s(10.0, map.corridor_exit_s());
  std::uniform_real_distribution<double> speed(0.0, 6.0);
  auto set_motion = [&](VehicleState& v, const ReferencePath& path, double s, double v0) {
    v.frenet = {s, v0, 0.0, 0.0, 0.0, 0.0};
    const Vec2 p = path.to_world(s, 0.0);
    v.pose.x = p.x();
    v.pose.y = p.y();
    v.pose.heading = wrap_angle(path.heading(s));
    v.pose.speed = v0;
  };
  set_motion(w.ego, map.ego_path, ego_s(rng), speed(rng));
  set_motion(w.social, map.social_path, soc_s(rng), speed(rng));
  return w;
}

}  // namespace scenes
