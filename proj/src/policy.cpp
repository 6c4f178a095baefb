#include "negoplan/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace negoplan {

PolicyController::PolicyController(const NetworkParams<float>& params, bool greedy, std::uint64_t seed, bool record)
    : params_(params), greedy_(greedy), record_(record), rng_(seed) {}

std::size_t PolicyController::act(const DecisionContext& ctx) {
  if (ctx.observation == nullptr) throw std::logic_error("policy controller needs an observation");
  Observation obs = encode_observation(*ctx.observation);
  const Observation* ptr = &obs;
  const Eigen::MatrixXf input = pack_inputs<float>(std::span<const Observation* const>(&ptr, 1));
  forward(params_, input, 1, cache_);
  const Eigen::VectorXf logits = cache_.logits.col(0);
  const std::array<double, kNumActions> probs = action_distribution(logits);

  std::size_t action = 0;
  if (greedy_) {
    for (std::size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[action]) action = i;
  } else {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    double cumulative = 0.0;
    action = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cumulative += probs[i];
      if (u < cumulative) {
        action = i;
        break;
      }
    }
  }
  if (record_) {
    trace_.observations.push_back(std::move(obs));
    trace_.actions.push_back(static_cast<int>(action));
    trace_.values.push_back(static_cast<double>(cache_.value(0, 0)));
    trace_.log_probs.push_back(std::log(probs[action]));
  }
  return action;
}

void PolicyController::observe(const StepOutcome& outcome) {
  if (!record_) return;
  trace_.rewards.push_back(outcome.reward);
  trace_.done.push_back(outcome.terminal() ? 1 : 0);
}

std::size_t ScriptedController::act(const DecisionContext& ctx) {
  const auto k = static_cast<std::size_t>(ctx.world.step);
  if (k >= actions_.size()) throw std::out_of_range("scripted controller ran past its action list");
  return actions_[k];
}

}  // namespace negoplan
