#pragma once

#include <optional>
#include <span>
#include <vector>

#include "negoplan/geometry.hpp"
#include "negoplan/quintic.hpp"
#include "negoplan/vehicle.hpp"

namespace negoplan {

/// Dynamic limits and cost weights of the sampling planner.
struct PlannerLimits {
  double max_accel = 3.0;
  double max_decel = 4.0;
  double max_speed = 8.0;
  double max_curvature = 0.5;
  double weight_jerk = 0.1;
  double weight_duration = 1.0;
  double weight_lateral = 1.0;
  double weight_speed = 1.0;

  void validate() const;
};

/// Terminal-state grids. Lateral offsets and target speeds share each duration.
struct SamplingGrids {
  std::vector<double> lateral_offsets{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> speed_fractions{0.0, 0.25, 0.5, 1.0};  // of the reference speed
  std::vector<double> durations{2.0, 4.0, 6.0};
};

struct PlannerSettings {
  PlannerLimits limits;
  SamplingGrids grids;
  double reference_speed = 5.0;
  double step_dt = 0.2;
  int plan_steps = 30;          // H_plan in steps
  double safety_margin = 0.0;   // inflation applied to predicted footprints
};

struct TrajectorySample {
  double t = 0.0;
  FrenetState frenet;
  VehiclePose pose;
  double curvature = 0.0;
};

struct CandidateTrajectory {
  QuinticSegment<double> lateral;
  QuinticSegment<double> longitudinal;
  std::vector<TrajectorySample> samples;  // t = k * step_dt, k = 0..plan_steps
  double target_speed = 0.0;
  double cost = 0.0;
  bool dynamics_ok = false;
  bool collision_ok = false;
  bool valid = false;  // dynamics_ok && collision_ok
  bool fallback = false;  // emergency stop, returned when nothing survives
  int index = -1;         // generation order, used for tie-breaking
};

/// Other vehicle's footprints at t = (k + 1) * step_dt, k = 0..horizon_steps-1.
struct PredictedTrajectory {
  std::vector<OrientedBox> steps;
  int horizon_steps = 0;
};

/// Another vehicle as seen by the planner: its pose and the lane it follows.
struct OtherVehicle {
  VehiclePose pose;
  const ReferencePath* path = nullptr;
};

/// Everything the planner knows when it replans.
struct PlanningScene {
  const ReferencePath* path = nullptr;
  FrenetState state;
  double heading = 0.0;  // current world heading, held while stationary
  double vehicle_length = 4.6;
  double vehicle_width = 1.8;
  std::span<const OrientedBox> static_obstacles;
  std::optional<OtherVehicle> other;
};

QuinticSegment<double> quintic_connect(const AxisState<double>& start, const AxisState<double>& end,
                                       double duration);

/// Maps Frenet samples to world poses, filling heading, speed and curvature.
void fill_poses(const ReferencePath& path, double length, double width, double initial_heading,
                std::vector<TrajectorySample>& samples);

/// Cartesian product of lateral and longitudinal quintics over the grids.
std::vector<CandidateTrajectory> sample_candidates(const FrenetState& current, const ReferencePath& path,
                                                   double vehicle_length, double vehicle_width,
                                                   double initial_heading, const PlannerSettings& settings);

bool check_dynamics(const CandidateTrajectory& candidate, const PlannerLimits& limits);

PredictedTrajectory predict_other(const VehiclePose& other, const ReferencePath& other_path, int horizon_steps,
                                  double step_dt, double margin = 0.0);

/// Time-aligned check: sample k+1 against predicted step k for k < horizon_steps,
/// every sample against the static obstacles.
bool collision_free(const CandidateTrajectory& candidate, const PredictedTrajectory& prediction,
                    std::span<const OrientedBox> static_obstacles, int horizon_steps);

double trajectory_cost(const CandidateTrajectory& candidate, const PlannerLimits& limits, double reference_speed);

CandidateTrajectory emergency_stop(const FrenetState& current, const ReferencePath& path, double vehicle_length,
                                   double vehicle_width, double initial_heading, const PlannerSettings& settings);

struct PlanResult {
  CandidateTrajectory chosen;
  std::vector<CandidateTrajectory> candidates;  // all, with valid flags set
};

/// Minimum-cost candidate passing dynamics and collision checks against the
/// other vehicle predicted `pred_steps` ahead; emergency stop when none passes.
PlanResult plan_detailed(const PlanningScene& scene, int pred_steps, const PlannerSettings& settings);

CandidateTrajectory plan(const PlanningScene& scene, int pred_steps, const PlannerSettings& settings);

}  // namespace negoplan
