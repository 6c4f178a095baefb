#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "negoplan/planner.hpp"
#include "negoplan/world.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

using namespace negoplan;

namespace {

const ReferencePath& straight() {
  static const ReferencePath path({{0.0, 0.0}, {300.0, 0.0}});
  return path;
}

const ReferencePath& straight_reversed() {
  static const ReferencePath path({{300.0, 0.0}, {0.0, 0.0}});
  return path;
}

CandidateTrajectory cruise(double speed, const PlannerSettings& base) {
  PlannerSettings s = base;
  s.reference_speed = speed;
  s.grids = {{0.0}, {1.0}, {6.0}};
  FrenetState st;
  st.s_dot = speed;
  return sample_candidates(st, straight(), 4.6, 1.8, 0.0, s).front();
}

}  // namespace

TEST_CASE("candidate count is the product of the grids") {
  PlannerSettings s;
  s.reference_speed = 2.0;
  s.grids = {{-1.0, 0.0, 1.0}, {0.0, 1.0}, {3.0, 6.0}};
  const auto c = sample_candidates(FrenetState{}, straight(), 4.6, 1.8, 0.0, s);
  CHECK(c.size() == 12);
  std::set<int> indices;
  for (const auto& x : c) {
    indices.insert(x.index);
    CHECK(x.samples.size() == static_cast<std::size_t>(s.plan_steps) + 1);
    CHECK(x.samples.front().t == 0.0);
    CHECK(x.samples.back().t == doctest::Approx(6.0));
  }
  CHECK(indices.size() == 12);
}

TEST_CASE("stay-in-place candidate has no jerk and passes dynamics") {
  PlannerSettings s;
  s.grids = {{0.0}, {0.0}, {4.0}};
  const auto c = sample_candidates(FrenetState{}, straight(), 4.6, 1.8, 0.0, s).front();
  CHECK(c.lateral.squared_jerk_integral() == 0.0);
  CHECK(c.longitudinal.squared_jerk_integral() == 0.0);
  CHECK(check_dynamics(c, s.limits));
  s.reference_speed = 0.0;
  CHECK(trajectory_cost(c, s.limits, 0.0) == doctest::Approx(s.limits.weight_duration * 4.0));
}

TEST_CASE("dynamics check rejects a 50 m/s^2 start") {
  PlannerSettings s;
  FrenetState st;
  st.s_ddot = 50.0;
  for (const auto& c : sample_candidates(st, straight(), 4.6, 1.8, 0.0, s)) {
    double peak = 0.0;
    for (double t = 0.0; t <= c.longitudinal.duration; t += 0.01) peak = std::max(peak, c.longitudinal.second(t));
    CHECK(peak > s.limits.max_accel);
    CHECK_FALSE(check_dynamics(c, s.limits));
  }
}

TEST_CASE("dynamics bounds are closed") {
  PlannerSettings s;
  CandidateTrajectory c = cruise(3.0, s);
  PlannerLimits at_limit = s.limits;
  at_limit.max_speed = 3.0;
  CHECK(check_dynamics(c, at_limit));
  at_limit.max_speed = 3.0 - 1e-6;
  CHECK_FALSE(check_dynamics(c, at_limit));
}

TEST_CASE("constant-speed prediction advances speed * dt per step") {
  VehiclePose other{10.0, 0.0, 0.0, 2.0};
  const PredictedTrajectory p = predict_other(other, straight(), 10, 0.2);
  REQUIRE(p.steps.size() == 10);
  CHECK(p.horizon_steps == 10);
  CHECK(p.steps.back().center.x() - other.x == doctest::Approx(4.0));
  CHECK(predict_other(other, straight(), 0, 0.2).steps.empty());
  VehiclePose parked{10.0, 0.0, 0.0, 0.0};
  for (const OrientedBox& b : predict_other(parked, straight(), 5, 0.2).steps)
    CHECK((b.center - parked.position()).norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(predict_other(other, straight(), -1, 0.2), std::invalid_argument);
}

TEST_CASE("time-aligned collision check respects the horizon") {
  PlannerSettings s;
  const CandidateTrajectory ego = cruise(5.0, s);
  // Oncoming at 5 m/s from 18 m: centers close 2 m per step, first overlap at step 7.
  const VehiclePose other{18.0, 0.0, wrap_angle(std::numbers::pi), 5.0};
  const PredictedTrajectory pred = predict_other(other, straight_reversed(), 30, s.step_dt);
  int first = -1;
  for (int k = 1; k <= 30 && first < 0; ++k)
    if (oracle::boxes_overlap(ego.samples[k].pose.footprint(), pred.steps[k - 1])) first = k;
  REQUIRE(first == 7);
  CHECK_FALSE(collision_free(ego, pred, {}, 30));
  CHECK(collision_free(ego, pred, {}, 5));
  CHECK(collision_free(ego, PredictedTrajectory{}, {}, 30));
}

TEST_CASE("static obstacles are checked over the whole plan") {
  PlannerSettings s;
  const CandidateTrajectory ego = cruise(5.0, s);
  const std::vector<OrientedBox> wall{{{28.0, 0.0}, 0.0, 1.0, 1.0}};
  CHECK_FALSE(collision_free(ego, PredictedTrajectory{}, wall, 0));
  const std::vector<OrientedBox> beyond{{{40.0, 0.0}, 0.0, 1.0, 1.0}};
  CHECK(collision_free(ego, PredictedTrajectory{}, beyond, 0));
}

TEST_CASE("straight cruise at the reference speed costs only its duration") {
  PlannerSettings s;
  const CandidateTrajectory c = cruise(5.0, s);
  CHECK(c.longitudinal.squared_jerk_integral() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.lateral.squared_jerk_integral() == 0.0);
  CHECK(trajectory_cost(c, s.limits, 5.0) == doctest::Approx(s.limits.weight_duration * 6.0));
}

TEST_CASE("doubling every weight doubles every cost") {
  PlannerSettings s;
  FrenetState st;
  st.s_dot = 2.0;
  st.d = 0.3;
  PlannerLimits doubled = s.limits;
  doubled.weight_jerk *= 2;
  doubled.weight_duration *= 2;
  doubled.weight_lateral *= 2;
  doubled.weight_speed *= 2;
  for (const auto& c : sample_candidates(st, straight(), 4.6, 1.8, 0.0, s))
    CHECK(trajectory_cost(c, doubled, 5.0) == doctest::Approx(2.0 * trajectory_cost(c, s.limits, 5.0)));
}

TEST_CASE("empty road: the reference-speed candidate on the path wins and is optimal") {
  PlannerSettings s;
  PlanningScene scene;
  scene.path = &straight();
  scene.state.s_dot = s.reference_speed;
  const PlanResult r = plan_detailed(scene, 30, s);
  CHECK_FALSE(r.chosen.fallback);
  CHECK(r.chosen.target_speed == doctest::Approx(s.reference_speed));
  CHECK(r.chosen.samples.back().frenet.d == doctest::Approx(0.0));
  for (const auto& c : r.candidates)
    if (c.valid) CHECK(r.chosen.cost <= c.cost);
}

TEST_CASE("plan is deterministic and breaks ties by index") {
  PlannerSettings s;
  s.grids = {{0.0, 0.0}, {1.0}, {4.0}};  // two identical candidates
  PlanningScene scene;
  scene.path = &straight();
  const PlanResult r = plan_detailed(scene, 0, s);
  CHECK(r.chosen.index == 0);
  const CandidateTrajectory again = plan(scene, 0, s);
  CHECK(again.index == r.chosen.index);
  CHECK(again.cost == r.chosen.cost);
}

TEST_CASE("oncoming vehicle in the corridor: long horizon stops short, zero horizon proceeds") {
  const CorridorMap map = build_map(ScenarioParams{});
  const WorldState w = scenes::head_on_conflict(map);
  PlannerSettings s;
  const PlanningScene scene = ego_scene(w, map);
  const CandidateTrajectory careful = plan(scene, 30, s);
  const CandidateTrajectory bold = plan(scene, 0, s);
  CHECK(scenes::min_gap_to_corridor(careful, map) > 0.0);
  CHECK(scenes::min_gap_to_corridor(bold, map) < 0.0);
}

TEST_CASE("returned plans are safe with respect to the model") {
  const CorridorMap map = build_map(ScenarioParams{});
  PlannerSettings s;
  std::mt19937_64 rng(17);
  for (int i = 0; i < 40; ++i) {
    const WorldState w = scenes::random_scene(map, rng);
    const PlanningScene scene = ego_scene(w, map);
    for (int h : {0, 10, 30}) {
      const CandidateTrajectory c = plan(scene, h, s);
      if (c.fallback) continue;
      const PredictedTrajectory pred = predict_other(w.social.pose, map.social_path, h, s.step_dt);
      for (int k = 1; k <= h; ++k)
        CHECK_FALSE(oracle::boxes_overlap(c.samples[k].pose.footprint(), pred.steps[k - 1]));
      for (const TrajectorySample& smp : c.samples)
        for (const OrientedBox& o : map.static_obstacles) CHECK_FALSE(oracle::boxes_overlap(smp.pose.footprint(), o));
    }
  }
}

TEST_CASE("collision-free sets shrink as the prediction horizon grows") {
  const CorridorMap map = build_map(ScenarioParams{});
  PlannerSettings s;
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const WorldState w = scenes::random_scene(map, rng);
    const PlanningScene scene = ego_scene(w, map);
    std::vector<std::set<int>> free_sets;
    for (int h : {0, 10, 20, 30}) {
      std::set<int> ok;
      for (const auto& c : plan_detailed(scene, h, s).candidates)
        if (c.collision_ok) ok.insert(c.index);
      free_sets.push_back(ok);
    }
    for (std::size_t k = 1; k < free_sets.size(); ++k)
      CHECK(std::includes(free_sets[k - 1].begin(), free_sets[k - 1].end(), free_sets[k].begin(), free_sets[k].end()));
  }
}

TEST_CASE("emergency stop brakes at max_decel and holds still") {
  PlannerSettings s;
  FrenetState st;
  st.s = 5.0;
  st.s_dot = 4.0;
  const CandidateTrajectory c = emergency_stop(st, straight(), 4.6, 1.8, 0.0, s);
  CHECK(c.fallback);
  CHECK(c.samples.back().frenet.s == doctest::Approx(5.0 + 4.0 * 4.0 / (2 * s.limits.max_decel)));
  CHECK(c.samples.back().frenet.s_dot == 0.0);
  for (std::size_t k = 1; k < c.samples.size(); ++k) CHECK(c.samples[k].frenet.s >= c.samples[k - 1].frenet.s);
}

TEST_CASE("plan rejects horizons beyond the plan length") {
  PlanningScene scene;
  scene.path = &straight();
  CHECK_THROWS_AS(plan(scene, 31, PlannerSettings{}), std::invalid_argument);
  CHECK_THROWS_AS(plan(scene, -1, PlannerSettings{}), std::invalid_argument);
}
