#include "negoplan/world.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace negoplan {

std::string to_string(DrivingStyle style) {
  return style == DrivingStyle::aggressive ? "aggressive" : "conservative";
}

DrivingStyle parse_style(const std::string& text) {
  if (text == "aggressive") return DrivingStyle::aggressive;
  if (text == "conservative") return DrivingStyle::conservative;
  throw std::invalid_argument("unknown driving style '" + text + "'");
}

namespace {

// Smooth lateral transition from 0 to `offset` over `length`.
double ramp_profile(double u, double offset) {
  return offset * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

double ramp_arc_length(double length, double offset) {
  constexpr int n = 4000;
  double arc = 0.0;
  double prev = ramp_profile(0.0, offset);
  for (int i = 1; i <= n; ++i) {
    const double y = ramp_profile(static_cast<double>(i) / n, offset);
    arc += std::hypot(length / n, y - prev);
    prev = y;
  }
  return arc;
}

}  // namespace

CorridorMap build_map(const ScenarioParams& p) {
  const double max_width = std::max(p.ego_width, p.social_width);
  if (!(p.lane_width > 0 && p.corridor_length > 0 && p.ramp_length > 0 && p.ramp_gap >= 0))
    throw InvalidGeometry("corridor dimensions must be positive");
  if (p.free_width < max_width + p.clearance_margin)
    throw InvalidGeometry("corridor free width " + std::to_string(p.free_width) + " m does not admit a " +
                          std::to_string(max_width) + " m vehicle with clearance");
  if (p.free_width >= p.ego_width + p.social_width)
    throw InvalidGeometry("corridor free width " + std::to_string(p.free_width) +
                          " m admits two vehicles abreast");
  if (p.free_width >= p.lane_width) throw InvalidGeometry("parked rows leave no narrowing");
  if (p.ego_target_beyond <= 0 || p.social_target_beyond <= 0 ||
      p.tail_length < std::max(p.ego_target_beyond, p.social_target_beyond))
    throw InvalidGeometry("targets must lie beyond the corridor exit on the path");
  if (p.corridor_entry_s < p.ramp_length + p.ramp_gap)
    throw InvalidGeometry("approach too short for the lane ramp");

  const double lane_offset = -0.25 * p.lane_width;  // ego lane center
  const double x_entry = p.corridor_entry_s;
  const double x_exit = x_entry + p.corridor_length;
  const double ramp_arc = ramp_arc_length(p.ramp_length, -lane_offset);
  const double x_start = x_entry - p.corridor_entry_s + (ramp_arc - p.ramp_length);
  const double x_end = x_exit + p.tail_length;

  const double ramp_in_begin = x_entry - p.ramp_gap - p.ramp_length;
  const double ramp_in_end = x_entry - p.ramp_gap;
  const double ramp_out_begin = x_exit + p.ramp_gap;
  const double ramp_out_end = x_exit + p.ramp_gap + p.ramp_length;
  auto ego_y = [&](double x) {
    if (x <= ramp_in_begin || x >= ramp_out_end) return lane_offset;
    if (x < ramp_in_end) return lane_offset + ramp_profile((x - ramp_in_begin) / p.ramp_length, -lane_offset);
    if (x <= ramp_out_begin) return 0.0;
    return ramp_profile((x - ramp_out_begin) / p.ramp_length, lane_offset);
  };

  constexpr double spacing = 0.1;
  std::vector<Vec2> ego_pts;
  const int n = static_cast<int>(std::ceil((x_end - x_start) / spacing));
  for (int i = 0; i <= n; ++i) {
    const double x = std::min(x_start + i * spacing, x_end);
    ego_pts.emplace_back(x, ego_y(x));
  }
  // The social lane is the ego lane rotated half a turn about the corridor center.
  const Vec2 pivot{0.5 * (x_entry + x_exit), 0.0};
  std::vector<Vec2> social_pts;
  social_pts.reserve(ego_pts.size());
  for (const Vec2& q : ego_pts) social_pts.push_back(2.0 * pivot - q);

  CorridorMap map;
  map.lane_width = p.lane_width;
  map.free_width = p.free_width;
  map.corridor_length = p.corridor_length;
  map.corridor_entry_s = p.corridor_entry_s;
  map.ego_length = p.ego_length;
  map.ego_width = p.ego_width;
  map.social_length = p.social_length;
  map.social_width = p.social_width;
  map.ego_target_s = p.corridor_entry_s + p.corridor_length + p.ego_target_beyond;
  map.social_target_s = p.corridor_entry_s + p.corridor_length + p.social_target_beyond;
  map.ego_path = ReferencePath(std::move(ego_pts));
  map.social_path = ReferencePath(std::move(social_pts));

  const double parked_width = 0.5 * (p.lane_width - p.free_width);
  const int cars = std::max(1, static_cast<int>(std::ceil((p.corridor_length + p.parked_gap) /
                                                          (p.parked_length + p.parked_gap))));
  const double car_len = (p.corridor_length - p.parked_gap * (cars - 1)) / cars;
  for (double side : {-1.0, 1.0}) {
    const double y = side * (0.5 * p.free_width + 0.5 * parked_width);
    for (int i = 0; i < cars; ++i) {
      const double x = x_entry + i * (car_len + p.parked_gap) + 0.5 * car_len;
      map.static_obstacles.push_back({{x, y}, 0.0, car_len, parked_width});
    }
  }
  return map;
}

void EpisodeConfig::validate() const {
  if (!(step_dt > 0)) throw std::invalid_argument("step_dt must be positive");
  if (!(time_limit > 0)) throw std::invalid_argument("time_limit must be positive");
  const double ratio = time_limit / step_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw std::invalid_argument("time_limit must be a multiple of step_dt");
  if (!(ego_start_dist > 0)) throw std::invalid_argument("ego start distance must be positive");
  if (social_start_dist && !(*social_start_dist > 0))
    throw std::invalid_argument("social start distance must be positive");
  if (initial_speed < 0) throw std::invalid_argument("initial speed must be nonnegative");
}

int EpisodeConfig::max_steps() const { return static_cast<int>(std::lround(time_limit / step_dt)); }

bool WorldState::operator==(const WorldState& o) const {
  auto same = [](const VehicleState& a, const VehicleState& b) {
    return a.frenet == b.frenet && a.pose == b.pose && a.start_s == b.start_s && a.reached == b.reached;
  };
  return step == o.step && t == o.t && same(ego, o.ego) && same(social, o.social) &&
         social_start_dist == o.social_start_dist;
}

std::string StepOutcome::label() const {
  if (collided) return "collision";
  if (both_reached) return "success";
  if (timed_out) return "timeout";
  return "running";
}

double compute_reward(const StepOutcome& outcome) {
  if (outcome.collided) return kCollisionPenalty;
  if (outcome.both_reached) return kArrivalReward;
  return kStepPenalty;
}

bool check_collision(const OrientedBox& a, const OrientedBox& b) { return boxes_intersect(a, b); }

namespace {

VehicleState place(const ReferencePath& path, double s, double speed, double length, double width) {
  VehicleState v;
  v.frenet = {s, speed, 0.0, 0.0, 0.0, 0.0};
  v.start_s = s;
  const Vec2 p = path.to_world(s, 0.0);
  v.pose = {p.x(), p.y(), wrap_angle(path.heading(s)), speed, 0.0, length, width};
  return v;
}

void park(VehicleState& v) {
  v.frenet.s_dot = v.frenet.s_ddot = 0.0;
  v.frenet.d_dot = v.frenet.d_ddot = 0.0;
  v.pose.speed = v.pose.accel = 0.0;
}

}  // namespace

WorldState reset(const EpisodeConfig& config, const CorridorMap& map) {
  config.validate();
  WorldState w;
  double social_dist = 0.0;
  if (config.social_start_dist) {
    social_dist = *config.social_start_dist;
  } else {
    std::mt19937_64 rng(config.rng_seed);
    const DistanceRange r =
        config.social_style == DrivingStyle::aggressive ? config.aggressive_range : config.conservative_range;
    social_dist = std::uniform_real_distribution<double>(r.min, r.max)(rng);
  }
  w.social_start_dist = social_dist;
  w.ego = place(map.ego_path, map.corridor_entry_s - config.ego_start_dist, config.initial_speed,
                map.ego_length, map.ego_width);
  w.social = place(map.social_path, map.corridor_entry_s - social_dist, config.initial_speed, map.social_length,
                   map.social_width);
  return w;
}

std::pair<WorldState, StepOutcome> step(const WorldState& world, const CandidateTrajectory& ego_plan,
                                        const CandidateTrajectory& social_plan, const EpisodeConfig& config,
                                        const CorridorMap& map) {
  WorldState next = world;
  auto advance = [&](VehicleState& v, const CandidateTrajectory& plan, const char* who) {
    if (v.reached) return;
    if (plan.samples.size() < 2 || plan.samples[1].t < config.step_dt - 1e-9 ||
        plan.samples[1].t > config.step_dt + 1e-9)
      throw StaleTrajectory(std::string(who) + " plan does not cover one step");
    const TrajectorySample& smp = plan.samples[1];
    v.frenet = smp.frenet;
    v.pose = smp.pose;
  };
  advance(next.ego, ego_plan, "ego");
  advance(next.social, social_plan, "social");
  next.step = world.step + 1;
  next.t = next.step * config.step_dt;

  if (!next.ego.reached && next.ego.frenet.s >= map.ego_target_s) {
    next.ego.reached = true;
    park(next.ego);
  }
  if (!next.social.reached && next.social.frenet.s >= map.social_target_s) {
    next.social.reached = true;
    park(next.social);
  }

  StepOutcome out;
  out.step_index = next.step;
  const OrientedBox ego_fp = next.ego.pose.footprint();
  const OrientedBox soc_fp = next.social.pose.footprint();
  out.collided = check_collision(ego_fp, soc_fp);
  for (const OrientedBox& o : map.static_obstacles) {
    if (out.collided) break;
    out.collided = check_collision(ego_fp, o) || check_collision(soc_fp, o);
  }
  if (!out.collided) out.both_reached = next.ego.reached && next.social.reached;
  if (!out.collided && !out.both_reached) out.timed_out = next.step >= config.max_steps();
  out.reward = compute_reward(out);
  return {next, out};
}

PlanningScene ego_scene(const WorldState& world, const CorridorMap& map) {
  PlanningScene scene;
  scene.path = &map.ego_path;
  scene.state = world.ego.frenet;
  scene.heading = world.ego.pose.heading;
  scene.vehicle_length = world.ego.pose.length;
  scene.vehicle_width = world.ego.pose.width;
  scene.static_obstacles = map.static_obstacles;
  scene.other = OtherVehicle{world.social.pose, &map.social_path};
  return scene;
}

PlanningScene social_scene(const WorldState& world, const CorridorMap& map) {
  PlanningScene scene;
  scene.path = &map.social_path;
  scene.state = world.social.frenet;
  scene.heading = world.social.pose.heading;
  scene.vehicle_length = world.social.pose.length;
  scene.vehicle_width = world.social.pose.width;
  scene.static_obstacles = map.static_obstacles;
  scene.other = OtherVehicle{world.ego.pose, &map.ego_path};
  return scene;
}

int suspend_count(const std::vector<double>& speeds, double threshold) {
  int runs = 0;
  bool in_run = false;
  bool leading = true;
  for (double v : speeds) {
    const bool slow = v < threshold;
    if (slow && !in_run && !leading) ++runs;
    if (!slow) leading = false;
    in_run = slow;
  }
  return runs;
}

}  // namespace negoplan
