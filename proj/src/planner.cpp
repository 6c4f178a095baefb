#include "negoplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace negoplan {

namespace {

constexpr double kBoundTol = 1e-9;
constexpr double kHeadingBlendSpeed = 1.0;
constexpr double kMinArcForCurvature = 1e-2;

}  // namespace

void PlannerLimits::validate() const {
  if (!(max_accel > 0 && max_decel > 0 && max_speed > 0 && max_curvature > 0))
    throw std::invalid_argument("planner limits must be positive");
  if (weight_jerk < 0 || weight_duration < 0 || weight_lateral < 0 || weight_speed < 0)
    throw std::invalid_argument("planner cost weights must be nonnegative");
  if (weight_jerk + weight_duration + weight_lateral + weight_speed <= 0)
    throw std::invalid_argument("at least one planner cost weight must be positive");
}

QuinticSegment<double> quintic_connect(const AxisState<double>& start, const AxisState<double>& end,
                                       double duration) {
  return quintic_connect<double>(start, end, duration);
}

void fill_poses(const ReferencePath& path, double length, double width, double initial_heading,
                std::vector<TrajectorySample>& samples) {
  for (std::size_t k = 0; k < samples.size(); ++k) {
    TrajectorySample& smp = samples[k];
    const FrenetState& f = smp.frenet;
    const double ref_heading = path.heading(f.s);
    const double one_minus = 1.0 - path.curvature(f.s) * f.d;
    const double v_long = std::max(0.0, f.s_dot * one_minus);
    const Vec2 p = path.to_world(f.s, f.d);
    VehiclePose& pose = smp.pose;
    pose.x = p.x();
    pose.y = p.y();
    pose.speed = std::hypot(v_long, f.d_dot);
    pose.accel = f.s_ddot;
    pose.length = length;
    pose.width = width;
    // Below kHeadingBlendSpeed the velocity direction is ill-conditioned, so the
    // offset from the path heading shrinks with speed instead. A vehicle at rest
    // with no lateral motion is aligned with its path.
    const double offset = std::atan2(f.d_dot, std::max(v_long, kHeadingBlendSpeed));
    pose.heading = k == 0 ? initial_heading : wrap_angle(ref_heading + offset);
    smp.curvature = 0.0;
    if (k > 0) {
      const VehiclePose& prev = samples[k - 1].pose;
      const double arc = std::hypot(pose.x - prev.x, pose.y - prev.y);
      if (arc > kMinArcForCurvature) smp.curvature = wrap_angle(pose.heading - prev.heading) / arc;
    }
  }
}

namespace {

CandidateTrajectory make_candidate(const QuinticSegment<double>& lat, const QuinticSegment<double>& lon,
                                   double target_speed, const ReferencePath& path, double length, double width,
                                   double initial_heading, const PlannerSettings& settings) {
  CandidateTrajectory c;
  c.lateral = lat;
  c.longitudinal = lon;
  c.target_speed = target_speed;
  c.samples.resize(static_cast<std::size_t>(settings.plan_steps) + 1);
  for (int k = 0; k <= settings.plan_steps; ++k) {
    const double t = k * settings.step_dt;
    TrajectorySample& smp = c.samples[static_cast<std::size_t>(k)];
    smp.t = t;
    smp.frenet = {lon.value(t), lon.first(t), lon.second(t), lat.value(t), lat.first(t), lat.second(t)};
  }
  fill_poses(path, length, width, initial_heading, c.samples);
  return c;
}

}  // namespace

std::vector<CandidateTrajectory> sample_candidates(const FrenetState& current, const ReferencePath& path,
                                                   double vehicle_length, double vehicle_width,
                                                   double initial_heading, const PlannerSettings& settings) {
  const SamplingGrids& g = settings.grids;
  if (g.lateral_offsets.empty() || g.speed_fractions.empty() || g.durations.empty())
    throw std::invalid_argument("sample_candidates: sampling grids must be nonempty");
  for (double T : g.durations)
    if (!(T > 0)) throw std::invalid_argument("sample_candidates: durations must be positive");

  std::vector<CandidateTrajectory> out;
  out.reserve(g.lateral_offsets.size() * g.speed_fractions.size() * g.durations.size());
  const AxisState<double> lat0{current.d, current.d_dot, current.d_ddot};
  const AxisState<double> lon0{current.s, current.s_dot, current.s_ddot};
  for (double T : g.durations) {
    for (double d_target : g.lateral_offsets) {
      const auto lat = quintic_connect(lat0, AxisState<double>{d_target, 0.0, 0.0}, T);
      for (double frac : g.speed_fractions) {
        const double v_target = frac * settings.reference_speed;
        // Terminal position implied by the mean of current and target speed.
        const double s_end = current.s + 0.5 * (current.s_dot + v_target) * T;
        const auto lon = quintic_connect(lon0, AxisState<double>{s_end, v_target, 0.0}, T);
        CandidateTrajectory c = make_candidate(lat, lon, v_target, path, vehicle_length, vehicle_width,
                                               initial_heading, settings);
        c.index = static_cast<int>(out.size());
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

bool check_dynamics(const CandidateTrajectory& candidate, const PlannerLimits& limits) {
  for (const TrajectorySample& smp : candidate.samples) {
    const FrenetState& f = smp.frenet;
    if (f.s_dot < -kBoundTol || smp.pose.speed > limits.max_speed + kBoundTol) return false;
    if (f.s_ddot > limits.max_accel + kBoundTol || f.s_ddot < -limits.max_decel - kBoundTol) return false;
    if (std::abs(f.d_ddot) > limits.max_accel + kBoundTol) return false;
    if (std::abs(smp.curvature) > limits.max_curvature + kBoundTol) return false;
  }
  return true;
}

PredictedTrajectory predict_other(const VehiclePose& other, const ReferencePath& other_path, int horizon_steps,
                                  double step_dt, double margin) {
  if (horizon_steps < 0) throw std::invalid_argument("predict_other: negative horizon");
  PredictedTrajectory pred;
  pred.horizon_steps = horizon_steps;
  pred.steps.reserve(static_cast<std::size_t>(horizon_steps));
  const auto [s0, d0] = other_path.project(other.position());
  const Vec2 base0 = other_path.to_world(s0, d0);
  const double heading0 = other_path.heading(s0);
  for (int k = 1; k <= horizon_steps; ++k) {
    const double sk = s0 + other.speed * step_dt * k;
    OrientedBox box = other.footprint();
    box.center += other_path.to_world(sk, d0) - base0;
    box.heading = wrap_angle(other.heading + wrap_angle(other_path.heading(sk) - heading0));
    pred.steps.push_back(box.inflated(margin));
  }
  return pred;
}

bool collision_free(const CandidateTrajectory& candidate, const PredictedTrajectory& prediction,
                    std::span<const OrientedBox> static_obstacles, int horizon_steps) {
  std::vector<Aabb> obstacle_bounds;
  obstacle_bounds.reserve(static_obstacles.size());
  for (const OrientedBox& o : static_obstacles) obstacle_bounds.push_back(o.bounds());

  const int checked = std::min<int>(horizon_steps, static_cast<int>(prediction.steps.size()));
  for (std::size_t k = 0; k < candidate.samples.size(); ++k) {
    const OrientedBox fp = candidate.samples[k].pose.footprint();
    const Aabb fb = fp.bounds();
    for (std::size_t i = 0; i < static_obstacles.size(); ++i) {
      if (fb.overlaps(obstacle_bounds[i]) && boxes_intersect(fp, static_obstacles[i])) return false;
    }
    if (k >= 1 && static_cast<int>(k) - 1 < checked) {
      const OrientedBox& other = prediction.steps[k - 1];
      if (fb.overlaps(other.bounds()) && boxes_intersect(fp, other)) return false;
    }
  }
  return true;
}

double trajectory_cost(const CandidateTrajectory& candidate, const PlannerLimits& limits, double reference_speed) {
  const double jerk = candidate.lateral.squared_jerk_integral() + candidate.longitudinal.squared_jerk_integral();
  double lateral = 0.0;
  for (const TrajectorySample& smp : candidate.samples) lateral += smp.frenet.d * smp.frenet.d;
  if (!candidate.samples.empty()) lateral /= static_cast<double>(candidate.samples.size());
  const double terminal_speed = candidate.longitudinal.first(candidate.longitudinal.duration);
  const double speed_err = terminal_speed - reference_speed;
  return limits.weight_jerk * jerk + limits.weight_duration * candidate.longitudinal.duration +
         limits.weight_lateral * lateral + limits.weight_speed * speed_err * speed_err;
}

CandidateTrajectory emergency_stop(const FrenetState& current, const ReferencePath& path, double vehicle_length,
                                   double vehicle_width, double initial_heading, const PlannerSettings& settings) {
  const double decel = settings.limits.max_decel;
  const double v0 = std::max(0.0, current.s_dot);
  const double t_stop = v0 / decel;
  // Lateral motion keeps its current slope along the path and dies out with
  // the longitudinal speed, so braking never swings the heading around.
  const double slope = v0 > 0.0 ? current.d_dot / v0 : 0.0;
  const double d_stop = current.d + slope * 0.5 * v0 * t_stop;
  CandidateTrajectory c;
  c.fallback = true;
  const double span = std::max(t_stop, settings.step_dt);
  c.lateral = quintic_connect({current.d, slope * v0, -slope * decel}, {d_stop, 0.0, 0.0}, span);
  // The segments record the stopping point; samples carry the exact profile.
  c.longitudinal = quintic_connect({current.s, v0, -decel}, {current.s + 0.5 * v0 * t_stop, 0.0, 0.0}, span);
  c.samples.resize(static_cast<std::size_t>(settings.plan_steps) + 1);
  for (int k = 0; k <= settings.plan_steps; ++k) {
    const double t = k * settings.step_dt;
    const double tc = std::min(t, t_stop);
    TrajectorySample& smp = c.samples[static_cast<std::size_t>(k)];
    smp.t = t;
    const bool moving = t < t_stop;
    const double ds = v0 * tc - 0.5 * decel * tc * tc;
    const double v = moving ? v0 - decel * t : 0.0;
    const double a = moving ? -decel : 0.0;
    smp.frenet = {current.s + ds, v, a, current.d + slope * ds, slope * v, slope * a};
  }
  fill_poses(path, vehicle_length, vehicle_width, initial_heading, c.samples);
  c.cost = std::numeric_limits<double>::infinity();
  return c;
}

PlanResult plan_detailed(const PlanningScene& scene, int pred_steps, const PlannerSettings& settings) {
  if (scene.path == nullptr) throw std::invalid_argument("plan: scene has no reference path");
  if (pred_steps < 0 || pred_steps > settings.plan_steps)
    throw std::invalid_argument("plan: prediction horizon outside [0, plan_steps]");
  PlanResult result;
  result.candidates = sample_candidates(scene.state, *scene.path, scene.vehicle_length, scene.vehicle_width,
                                        scene.heading, settings);
  PredictedTrajectory prediction;
  if (scene.other && scene.other->path != nullptr && pred_steps > 0) {
    prediction = predict_other(scene.other->pose, *scene.other->path, pred_steps, settings.step_dt,
                               settings.safety_margin);
  }
  const CandidateTrajectory* best = nullptr;
  for (CandidateTrajectory& c : result.candidates) {
    c.dynamics_ok = check_dynamics(c, settings.limits);
    c.collision_ok = collision_free(c, prediction, scene.static_obstacles, pred_steps);
    c.valid = c.dynamics_ok && c.collision_ok;
    c.cost = trajectory_cost(c, settings.limits, settings.reference_speed);
    // Strict comparison keeps the earliest index on ties.
    if (c.valid && (best == nullptr || c.cost < best->cost)) best = &c;
  }
  if (best != nullptr) {
    result.chosen = *best;
  } else {
    result.chosen = emergency_stop(scene.state, *scene.path, scene.vehicle_length, scene.vehicle_width,
                                   scene.heading, settings);
  }
  return result;
}

CandidateTrajectory plan(const PlanningScene& scene, int pred_steps, const PlannerSettings& settings) {
  return plan_detailed(scene, pred_steps, settings).chosen;
}

}  // namespace negoplan
