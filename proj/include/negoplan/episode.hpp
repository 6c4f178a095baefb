#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "negoplan/ogm.hpp"
#include "negoplan/planner.hpp"
#include "negoplan/world.hpp"

namespace negoplan {

/// Discrete prediction horizons the ego can command.
struct ActionSpec {
  std::vector<double> horizons_s{0.0, 2.0, 4.0, 6.0};

  std::size_t size() const { return horizons_s.size(); }
  int steps(std::size_t action, double step_dt) const;
  void validate() const;
};

/// Horizon (in planner steps) the social vehicle always plans with.
int style_horizon_steps(DrivingStyle style, double conservative_s, double aggressive_s, double step_dt);

struct EpisodeSettings {
  EpisodeConfig episode;
  PlannerSettings planner;
  OgmSettings ogm;
  ActionSpec actions;
  int social_pred_steps = 30;
};

/// What the ego controller sees before choosing a horizon.
struct DecisionContext {
  const WorldState& world;
  const OgmStack* observation;  // null unless the controller asked for one
};

struct EgoController {
  virtual ~EgoController() = default;
  virtual bool needs_observation() const { return false; }
  virtual std::size_t act(const DecisionContext& ctx) = 0;
  /// Called after the transition caused by the last act().
  virtual void observe(const StepOutcome& /*outcome*/) {}
};

/// Always commands the same action.
class FixedHorizonController final : public EgoController {
 public:
  explicit FixedHorizonController(std::size_t action) : action_(action) {}
  std::size_t act(const DecisionContext&) override { return action_; }

 private:
  std::size_t action_;
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  VehiclePose ego;
  VehiclePose social;
  double ego_travel = 0.0;
  double social_travel = 0.0;
  std::size_t action = 0;
  double action_horizon_s = 0.0;
  double reward = 0.0;
  std::string outcome;  // running | collision | success | timeout
  bool social_visible = false;
  bool ego_fallback = false;
};

struct EpisodeLog {
  std::uint64_t seed = 0;
  std::string controller;
  std::string setting;
  DrivingStyle social_style = DrivingStyle::conservative;
  double ego_start_dist = 0.0;
  double social_start_dist = 0.0;
  int social_pred_steps = 0;
  double step_dt = 0.2;
  double time_limit = 0.0;
  WorldState initial;
  std::vector<StepRecord> steps;
  StepOutcome final;

  double total_reward() const;
  double duration() const { return steps.empty() ? 0.0 : steps.back().t; }
  /// Initial ego speed followed by the speed after every step.
  std::vector<double> ego_speeds() const;
};

int suspend_count(const EpisodeLog& log, double threshold = 0.1);

/// Runs one closed-loop episode: each step the controller picks the ego's
/// prediction horizon, both vehicles replan, and the world advances.
EpisodeLog run_closed_loop(const CorridorMap& map, const EpisodeSettings& settings, EgoController& controller);

/// CSV with a `# key=value` preamble carrying the replay parameters.
void write_episode_csv(const EpisodeLog& log, const std::filesystem::path& path);
EpisodeLog read_episode_csv(const std::filesystem::path& path);

/// Column-by-column comparison at the CSV's printed precision.
bool logs_match(const EpisodeLog& a, const EpisodeLog& b, std::string* why = nullptr);

}  // namespace negoplan
