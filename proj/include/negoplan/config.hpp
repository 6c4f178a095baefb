#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "negoplan/episode.hpp"
#include "negoplan/eval.hpp"
#include "negoplan/ogm.hpp"
#include "negoplan/planner.hpp"
#include "negoplan/trainer.hpp"
#include "negoplan/world.hpp"

namespace negoplan {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The full run configuration. Every field has a flat dotted key.
struct Config {
  ScenarioParams scenario;
  EpisodeConfig episode;  // ego start, style ranges, time limit; rng_seed unused here
  double control_rate_hz = 5.0;
  int ogm_size = kOgmSize;
  int ogm_channels = kOgmChannels;
  OgmSettings ogm;
  double conservative_horizon_s = 6.0;
  double aggressive_horizon_s = 2.0;
  PlannerSettings planner;
  ActionSpec actions;
  TrainerSettings train;
  EvalSettings eval;
  int workers = 1;
  std::uint64_t master_seed = 0;

  double step_dt() const { return 1.0 / control_rate_hz; }
  int social_horizon_steps(DrivingStyle style) const;
  /// Throws ConfigError describing the first inconsistent field.
  void validate() const;
};

/// Every key with its current value, one `key = value` line each, sorted.
std::string serialize(const Config& config);

/// Applies `key = value` lines on top of the defaults. Blank lines and `#`
/// comments are skipped. `source` names the text in error messages.
Config parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads the file (if the path is non-empty), then applies `key=value`
/// overrides in order, then validates.
Config load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// All recognized keys for the given config's phase count.
std::vector<std::string> config_keys(const Config& config);

/// 64-bit FNV-1a of the serialized config, as 16 hex digits.
std::string config_hash(const Config& config);

/// Map and episode scaffolding shared by training and evaluation.
EpisodeSettings base_episode_settings(const Config& config);

}  // namespace negoplan
