#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "negoplan/episode.hpp"
#include "negoplan/network.hpp"
#include "negoplan/rl.hpp"
#include "negoplan/world.hpp"

namespace negoplan {

struct Config;

/// One stage of the task schedule.
struct CurriculumPhase {
  DistanceRange conservative_range;
  DistanceRange aggressive_range;
  double style_mix = 0.5;  // probability a task's social vehicle is aggressive
  int iterations = 1;

  /// `max_dist` is the furthest a social start can sit from the corridor.
  void validate(double max_dist) const;
  bool operator==(const CurriculumPhase&) const = default;
};

/// Wide style separation first, then the evaluation ranges.
std::vector<CurriculumPhase> default_curriculum();

struct TaskSpec {
  double social_start_dist = 0.0;
  DrivingStyle social_style = DrivingStyle::conservative;
  std::uint64_t seed = 0;
};

std::vector<TaskSpec> sample_tasks(const CurriculumPhase& phase, int count, std::mt19937_64& rng);

struct TrainerSettings {
  std::vector<CurriculumPhase> phases = default_curriculum();
  int tasks_per_iteration = 8;           // M
  int trajectories_per_iteration = 200;  // N, episodes spread over the M tasks
  int segment_length = 128;              // H
  int minibatch = 512;                   // m
  int chunk = 32;                        // samples per forward/backward pass inside a minibatch
  double gamma = 0.99;
  LossCoefficients loss;
  AdamSettings adam;
  int keep_checkpoints = 3;  // most recent iterations kept besides phase ends

  int total_iterations() const;
  /// Phase index for a zero-based iteration.
  int phase_of(int iteration) const;
};

/// A stretch of one episode, at most segment_length decisions long.
struct RolloutBatch {
  std::vector<Observation> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<std::uint8_t> done;
  double bootstrap_value = 0.0;  // V at the cut, zero when the segment ends the episode
  std::size_t task = 0;

  std::size_t size() const { return actions.size(); }
};

struct EpisodeResult {
  std::size_t task = 0;
  double total_reward = 0.0;
  std::string outcome;
  int steps = 0;
};

struct RolloutSet {
  std::vector<RolloutBatch> segments;  // task order, then episode order
  std::vector<EpisodeResult> episodes;

  std::size_t transitions() const;
};

/// Settings for one episode of the given task under a config.
EpisodeSettings task_episode_settings(const Config& config, const TaskSpec& task);

/// Runs `episodes` episodes spread round-robin over the tasks against a frozen
/// parameter snapshot. Results do not depend on `workers`.
RolloutSet collect_rollouts(const Config& config, const CorridorMap& map, const NetworkParams<float>& params,
                            const std::vector<TaskSpec>& tasks, int episodes, bool greedy, int workers);

/// Cuts a recorded episode into segments of at most `segment_length`.
std::vector<RolloutBatch> segment_episode(const struct DecisionTrace& trace, int segment_length, std::size_t task);

struct UpdateReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int gradient_steps = 0;
};

/// One pass of disjoint shuffled minibatches over every transition.
UpdateReport update_parameters(NetworkParams<float>& params, AdamState<float>& adam, const RolloutSet& rollouts,
                               const TrainerSettings& settings, std::uint64_t shuffle_seed);

struct TrainLogRow {
  int iteration = 0;  // one-based
  int phase = 0;      // one-based
  double mean_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double wall_time_s = 0.0;
};

inline constexpr const char* kTrainLogHeader =
    "iteration,phase,mean_return,policy_loss,value_loss,entropy,collision_rate,timeout_rate,wall_time_s";

std::string format_log_row(const TrainLogRow& row);
std::vector<TrainLogRow> read_train_log(const std::filesystem::path& path);

struct TrainOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  int workers = 1;
  int max_iterations = 0;  // stop after this many iterations in this call; 0 runs to the end
  std::function<void(const TrainLogRow&)> on_iteration;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> artifacts;
};

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, int iteration);

/// Runs every phase for its iteration budget, writing a checkpoint and a log
/// row after each iteration. A non-finite loss aborts with NonFiniteError and
/// leaves the last good checkpoint on disk.
TrainResult train(const Config& config, const TrainOptions& options);

}  // namespace negoplan
