#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "negoplan/geometry.hpp"
#include "negoplan/planner.hpp"
#include "negoplan/vehicle.hpp"

namespace negoplan {

struct InvalidGeometry : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct StaleTrajectory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DrivingStyle { conservative, aggressive };

std::string to_string(DrivingStyle style);
DrivingStyle parse_style(const std::string& text);

/// Geometry of the narrow-lane scene. Both lanes run along x; the ego drives
/// +x on the right (y < 0), the social vehicle -x on the left. Parked rows on
/// both sides squeeze the road to one vehicle width between corridor entry and
/// exit, and each lane's centerline ramps onto the corridor axis before it.
struct ScenarioParams {
  double lane_width = 6.0;        // full road width, both directions
  double free_width = 3.0;        // between the parked rows
  double corridor_length = 10.0;
  double corridor_entry_s = 40.0; // along either vehicle's own path
  double ramp_length = 5.0;
  double ramp_gap = 1.0;          // straight run on the corridor axis before entry
  double ego_target_beyond = 16.0;
  double social_target_beyond = 12.0;
  double tail_length = 40.0;      // path beyond the corridor exit
  double parked_length = 4.6;
  double parked_gap = 0.3;
  double ego_length = 4.6;
  double ego_width = 1.8;
  double social_length = 4.6;
  double social_width = 1.8;
  double clearance_margin = 0.2;
};

struct CorridorMap {
  double lane_width = 0.0;
  double free_width = 0.0;
  double corridor_length = 0.0;
  double corridor_entry_s = 0.0;
  std::vector<OrientedBox> static_obstacles;
  double ego_target_s = 0.0;
  double social_target_s = 0.0;
  ReferencePath ego_path;
  ReferencePath social_path;
  double ego_length = 4.6;
  double ego_width = 1.8;
  double social_length = 4.6;
  double social_width = 1.8;

  double corridor_exit_s() const { return corridor_entry_s + corridor_length; }
  const std::vector<Vec2>& centerline() const { return ego_path.points(); }
};

CorridorMap build_map(const ScenarioParams& params);

struct DistanceRange {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v) const { return v >= min && v <= max; }
  bool operator==(const DistanceRange&) const = default;
};

struct EpisodeConfig {
  double ego_start_dist = 13.35;
  std::optional<double> social_start_dist;  // drawn from the style's range when unset
  DrivingStyle social_style = DrivingStyle::conservative;
  DistanceRange conservative_range{11.99, 14.02};
  DistanceRange aggressive_range{16.33, 18.80};
  double step_dt = 0.2;
  double time_limit = 40.0;
  double initial_speed = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
  int max_steps() const;
};

struct VehicleState {
  FrenetState frenet;
  VehiclePose pose;
  double start_s = 0.0;
  bool reached = false;  // parked at its target once reached

  double travel() const { return frenet.s - start_s; }
};

struct WorldState {
  int step = 0;
  double t = 0.0;
  VehicleState ego;
  VehicleState social;
  double social_start_dist = 0.0;

  bool operator==(const WorldState&) const;
};

struct StepOutcome {
  bool collided = false;
  bool both_reached = false;
  bool timed_out = false;
  int step_index = 0;
  double reward = 0.0;

  bool terminal() const { return collided || both_reached || timed_out; }
  std::string label() const;
};

inline constexpr double kStepPenalty = -0.25;
inline constexpr double kCollisionPenalty = -5.0;
inline constexpr double kArrivalReward = 10.0;

double compute_reward(const StepOutcome& outcome);

bool check_collision(const OrientedBox& a, const OrientedBox& b);

WorldState reset(const EpisodeConfig& config, const CorridorMap& map);

/// Advances both vehicles one step along their plans (perfect tracking).
std::pair<WorldState, StepOutcome> step(const WorldState& world, const CandidateTrajectory& ego_plan,
                                        const CandidateTrajectory& social_plan, const EpisodeConfig& config,
                                        const CorridorMap& map);

/// Planner view for the ego or the social vehicle.
PlanningScene ego_scene(const WorldState& world, const CorridorMap& map);
PlanningScene social_scene(const WorldState& world, const CorridorMap& map);

/// Number of runs with speed below `threshold`, excluding a leading standstill.
/// `speeds[0]` is the initial speed.
int suspend_count(const std::vector<double>& speeds, double threshold = 0.1);

}  // namespace negoplan
