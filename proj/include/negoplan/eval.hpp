#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "negoplan/episode.hpp"
#include "negoplan/network.hpp"
#include "negoplan/world.hpp"

namespace negoplan {

struct Config;

struct ExperimentSetting {
  std::string name;
  DistanceRange social_start_range;
  DrivingStyle social_style = DrivingStyle::conservative;
  int episodes = 100;

  bool operator==(const ExperimentSetting&) const = default;
};

struct EvalSettings {
  ExperimentSetting push{"push", {16.33, 18.80}, DrivingStyle::conservative, 100};
  ExperimentSetting yield{"yield", {11.99, 14.02}, DrivingStyle::aggressive, 100};
};

/// Either the trained policy (greedy) or a fixed horizon.
struct ControllerSpec {
  std::string name;         // "adaptive" or "fixed_<h>s"
  int fixed_action = -1;    // action index, -1 for the policy
  static ControllerSpec adaptive() { return {"adaptive", -1}; }
  static ControllerSpec fixed(const ActionSpec& actions, std::size_t action);
};

/// Seed of episode `index` in a setting; shared by every controller.
std::uint64_t eval_seed(std::uint64_t master_seed, const ExperimentSetting& setting, int index);

/// Episode config for a setting: social style and a start distance drawn from the range.
EpisodeSettings setting_episode_settings(const Config& config, const ExperimentSetting& setting,
                                         std::uint64_t seed);

/// `params` may be null for fixed-horizon controllers.
EpisodeLog run_episode(const Config& config, const CorridorMap& map, const ControllerSpec& controller,
                       const ExperimentSetting& setting, std::uint64_t seed, const NetworkParams<float>* params);

struct UndefinedBeforePerception : std::logic_error {
  using std::logic_error::logic_error;
};

struct BehaviorIndexSeries {
  std::vector<double> psi;
  std::vector<double> t;
  int start_step = 0;  // first step with the social vehicle inside the OGM window
  double d_ini_ego = 0.0;
  double d_ini_soc = 0.0;

  /// psi at an absolute step number; throws before start_step.
  double at(int step) const;
};

/// Returns an empty series (start_step -1) when the social vehicle never enters perception.
BehaviorIndexSeries behavior_index(const EpisodeLog& log);

double behavior_index_value(double s_soc, double s_ego, double d_ini_ego, double d_ini_soc);

enum class SignPattern { negative_throughout, positive_then_negative, other };

std::string to_string(SignPattern p);
SignPattern sign_pattern(const std::vector<double>& psi, double dead_band = 0.05);

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // population deviation
  double min = 0.0;
  double max = 0.0;
};

Stat describe(std::vector<double> values);

struct Summary {
  std::string controller;
  std::string setting;
  int n = 0;
  Stat drive_time;
  Stat suspends;
  Stat reward;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
};

/// Driving time is the time to both vehicles arriving, or the time limit on failure.
Summary aggregate(const std::vector<EpisodeLog>& logs);

inline constexpr const char* kReportHeader =
    "controller,setting,n,mean_drive_time_s,sd_drive_time_s,mean_suspends,sd_suspends,mean_reward,sd_reward,"
    "success_rate,collision_rate,timeout_rate";

/// Writes report.csv and one psi CSV per series; returns the written paths.
std::vector<std::filesystem::path> export_report(const std::vector<Summary>& summaries,
                                                 const std::vector<std::pair<std::string, BehaviorIndexSeries>>& series,
                                                 const std::filesystem::path& out_dir);

struct EvalRun {
  std::vector<Summary> summaries;  // controller-major, push before yield
  std::vector<std::vector<EpisodeLog>> logs;  // parallel to summaries
};

/// Re-runs a logged episode from its preamble with the logged horizons.
/// Throws ConfigError when the log does not fit the config.
EpisodeLog replay_log(const Config& config, const EpisodeLog& logged);

/// Adaptive (when params given) plus every fixed horizon, in both settings.
EvalRun evaluate(const Config& config, const NetworkParams<float>* params, int workers);

}  // namespace negoplan
