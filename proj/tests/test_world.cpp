#include <doctest.h>

#include <random>

#include "negoplan/world.hpp"
#include "oracles.hpp"

using namespace negoplan;

namespace {

const CorridorMap& default_map() {
  static const CorridorMap map = build_map(ScenarioParams{});
  return map;
}

// A plan that moves the vehicle to `next` in one step.
CandidateTrajectory jump_to(const VehicleState& from, const VehicleState& next, double dt) {
  CandidateTrajectory c;
  c.samples.resize(2);
  c.samples[0].frenet = from.frenet;
  c.samples[0].pose = from.pose;
  c.samples[1].t = dt;
  c.samples[1].frenet = next.frenet;
  c.samples[1].pose = next.pose;
  return c;
}

VehicleState at(const ReferencePath& path, double s, double speed) {
  VehicleState v;
  v.frenet = {s, speed, 0.0, 0.0, 0.0, 0.0};
  const Vec2 p = path.to_world(s, 0.0);
  v.pose = {p.x(), p.y(), wrap_angle(path.heading(s)), speed};
  return v;
}

}  // namespace

TEST_CASE("both lane centerlines clear the parked rows") {
  const CorridorMap& map = default_map();
  CHECK(map.static_obstacles.size() == 6);  // three parked cars per side
  for (double s = 0.0; s <= map.corridor_exit_s() + 30.0; s += 0.05) {
    for (const ReferencePath* path : {&map.ego_path, &map.social_path}) {
      const VehicleState v = at(*path, s, 0.0);
      for (const OrientedBox& o : map.static_obstacles) CHECK_FALSE(oracle::boxes_overlap(v.pose.footprint(), o));
    }
  }
}

TEST_CASE("the corridor admits only one vehicle at a time") {
  const CorridorMap& map = default_map();
  const double mid = map.corridor_entry_s + 0.5 * map.corridor_length;
  // Inside the corridor both paths run on the same axis.
  CHECK(map.ego_path.to_world(map.corridor_entry_s, 0.0).y() == doctest::Approx(0.0));
  CHECK(map.social_path.to_world(map.corridor_entry_s, 0.0).y() == doctest::Approx(0.0));
  CHECK(map.ego_path.to_world(mid, 0.0).x() == doctest::Approx(map.social_path.to_world(mid, 0.0).x()));
  CHECK(map.free_width < map.ego_width + map.social_width);
  // Corridor entry along the ego path is at x = corridor_entry_s.
  CHECK(map.ego_path.to_world(map.corridor_entry_s, 0.0).x() == doctest::Approx(map.corridor_entry_s).epsilon(1e-4));
  // Outside it the lanes are side by side and do not interfere.
  const VehicleState e = at(map.ego_path, 10.0, 0.0);
  const VehicleState s = at(map.social_path, map.social_path.project({e.pose.x, 1.5}).first, 0.0);
  CHECK(s.pose.y == doctest::Approx(1.5));
  CHECK(e.pose.y == doctest::Approx(-1.5));
  CHECK_FALSE(oracle::boxes_overlap(e.pose.footprint(), s.pose.footprint()));
}

TEST_CASE("invalid corridor geometry is rejected") {
  ScenarioParams p;
  p.free_width = 1.9;
  CHECK_THROWS_AS(build_map(p), InvalidGeometry);
  p.free_width = 3.7;
  CHECK_THROWS_AS(build_map(p), InvalidGeometry);
  p = ScenarioParams{};
  p.corridor_length = 0.0;
  CHECK_THROWS_AS(build_map(p), InvalidGeometry);
  p = ScenarioParams{};
  p.corridor_entry_s = 3.0;
  CHECK_THROWS_AS(build_map(p), InvalidGeometry);
}

TEST_CASE("reset places both vehicles at their start distances") {
  const CorridorMap& map = default_map();
  EpisodeConfig cfg;
  cfg.social_start_dist = 15.0;
  const WorldState w = reset(cfg, map);
  CHECK(w.step == 0);
  CHECK(map.corridor_entry_s - w.ego.frenet.s == doctest::Approx(13.35));
  CHECK(map.corridor_entry_s - w.social.frenet.s == doctest::Approx(15.0));
  CHECK(w.ego.pose.heading == doctest::Approx(0.0));
  CHECK(std::abs(w.social.pose.heading) == doctest::Approx(std::numbers::pi));
  CHECK(w.ego.pose.speed == 0.0);
}

TEST_CASE("unset social start is drawn from the style range, reproducibly") {
  const CorridorMap& map = default_map();
  for (DrivingStyle style : {DrivingStyle::conservative, DrivingStyle::aggressive}) {
    EpisodeConfig cfg;
    cfg.social_style = style;
    const DistanceRange r = style == DrivingStyle::aggressive ? cfg.aggressive_range : cfg.conservative_range;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      cfg.rng_seed = seed;
      const WorldState a = reset(cfg, map);
      CHECK(r.contains(a.social_start_dist));
      CHECK(reset(cfg, map) == a);
    }
  }
}

TEST_CASE("episode config validation") {
  EpisodeConfig cfg;
  CHECK(cfg.max_steps() == 200);
  cfg.time_limit = 40.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EpisodeConfig{};
  cfg.step_dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EpisodeConfig{};
  cfg.social_start_dist = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("rewards take one of three values") {
  StepOutcome o;
  CHECK(compute_reward(o) == kStepPenalty);
  o.timed_out = true;
  CHECK(compute_reward(o) == kStepPenalty);
  o.both_reached = true;
  CHECK(compute_reward(o) == kArrivalReward);
  o.collided = true;
  CHECK(compute_reward(o) == kCollisionPenalty);
  CHECK(o.label() == "collision");
}

TEST_CASE("step follows the first plan sample and detects collisions") {
  const CorridorMap& map = default_map();
  EpisodeConfig cfg;
  cfg.social_start_dist = 15.0;
  const WorldState w = reset(cfg, map);
  const VehicleState ego_next = at(map.ego_path, w.ego.frenet.s + 1.0, 5.0);
  const VehicleState soc_next = at(map.social_path, w.social.frenet.s + 1.0, 5.0);
  auto [n, out] = step(w, jump_to(w.ego, ego_next, 0.2), jump_to(w.social, soc_next, 0.2), cfg, map);
  CHECK(n.step == 1);
  CHECK(n.t == doctest::Approx(0.2));
  CHECK(n.ego.frenet == ego_next.frenet);
  CHECK(n.ego.travel() == doctest::Approx(1.0));
  CHECK_FALSE(out.terminal());
  CHECK(out.reward == kStepPenalty);

  // Both in the corridor, face to face.
  const VehicleState ego_in = at(map.ego_path, map.corridor_entry_s + 4.0, 2.0);
  const VehicleState soc_in = at(map.social_path, map.corridor_entry_s + 4.0, 2.0);
  auto [m, hit] = step(w, jump_to(w.ego, ego_in, 0.2), jump_to(w.social, soc_in, 0.2), cfg, map);
  CHECK(hit.collided);
  CHECK(hit.reward == kCollisionPenalty);

  CandidateTrajectory stale = jump_to(w.ego, ego_next, 0.4);
  CHECK_THROWS_AS(step(w, stale, jump_to(w.social, soc_next, 0.2), cfg, map), StaleTrajectory);
}

TEST_CASE("vehicles park at their targets and the episode succeeds when both arrive") {
  const CorridorMap& map = default_map();
  EpisodeConfig cfg;
  cfg.social_start_dist = 15.0;
  WorldState w = reset(cfg, map);
  w.ego = at(map.ego_path, map.ego_target_s - 0.5, 3.0);
  w.social = at(map.social_path, map.social_target_s - 5.0, 3.0);
  auto [a, o1] = step(w, jump_to(w.ego, at(map.ego_path, map.ego_target_s + 0.1, 3.0), 0.2),
                      jump_to(w.social, at(map.social_path, map.social_target_s - 4.4, 3.0), 0.2), cfg, map);
  CHECK(a.ego.reached);
  CHECK(a.ego.pose.speed == 0.0);
  CHECK_FALSE(o1.terminal());
  // A parked vehicle ignores its plan.
  auto [b, o2] = step(a, CandidateTrajectory{},
                      jump_to(a.social, at(map.social_path, map.social_target_s + 0.2, 3.0), 0.2), cfg, map);
  CHECK(b.ego.frenet.s == a.ego.frenet.s);
  CHECK(o2.both_reached);
  CHECK(o2.reward == kArrivalReward);
}

TEST_CASE("time limit ends the episode") {
  const CorridorMap& map = default_map();
  EpisodeConfig cfg;
  cfg.social_start_dist = 15.0;
  cfg.time_limit = 0.4;
  WorldState w = reset(cfg, map);
  auto hold = [&](const VehicleState& v) { return jump_to(v, v, 0.2); };
  auto [a, o1] = step(w, hold(w.ego), hold(w.social), cfg, map);
  CHECK_FALSE(o1.timed_out);
  auto [b, o2] = step(a, hold(a.ego), hold(a.social), cfg, map);
  CHECK(o2.timed_out);
  CHECK(o2.reward == kStepPenalty);
  CHECK(o2.label() == "timeout");
}

TEST_CASE("suspend count ignores a leading standstill") {
  CHECK(suspend_count(std::vector<double>{0, 0, 1, 2, 0.05, 0.0, 1, 0, 2}) == 2);
  CHECK(suspend_count(std::vector<double>{0, 0, 0}) == 0);
  CHECK(suspend_count(std::vector<double>{1, 2, 3}) == 0);
  CHECK(suspend_count(std::vector<double>{1, 0.09, 1}) == 1);
  CHECK(suspend_count(std::vector<double>{1, 0.1, 1}) == 0);
}

TEST_CASE("style names round-trip") {
  for (DrivingStyle s : {DrivingStyle::conservative, DrivingStyle::aggressive}) CHECK(parse_style(to_string(s)) == s);
  CHECK_THROWS_AS(parse_style("timid"), std::invalid_argument);
}
