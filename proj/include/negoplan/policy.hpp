#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "negoplan/episode.hpp"
#include "negoplan/network.hpp"
#include "negoplan/rl.hpp"

namespace negoplan {

/// What a recording controller saw and did, one entry per decision.
struct DecisionTrace {
  std::vector<Observation> observations;
  std::vector<int> actions;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<std::uint8_t> done;
};

/// Picks the horizon from the network's action distribution over the OGM stack.
class PolicyController final : public EgoController {
 public:
  /// `greedy` takes the most probable action (lowest index on ties);
  /// otherwise actions are sampled from a stream seeded by `seed`.
  PolicyController(const NetworkParams<float>& params, bool greedy, std::uint64_t seed, bool record = false);

  bool needs_observation() const override { return true; }
  std::size_t act(const DecisionContext& ctx) override;
  void observe(const StepOutcome& outcome) override;

  const DecisionTrace& trace() const { return trace_; }
  DecisionTrace take_trace() { return std::move(trace_); }

 private:
  const NetworkParams<float>& params_;
  bool greedy_;
  bool record_;
  std::mt19937_64 rng_;
  ForwardCache<float> cache_;
  DecisionTrace trace_;
};

/// Replays the action horizons stored in an episode log.
class ScriptedController final : public EgoController {
 public:
  ScriptedController(std::vector<std::size_t> actions) : actions_(std::move(actions)) {}
  std::size_t act(const DecisionContext& ctx) override;

 private:
  std::vector<std::size_t> actions_;
};

}  // namespace negoplan
