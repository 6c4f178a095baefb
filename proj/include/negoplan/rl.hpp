#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "negoplan/network.hpp"
#include "negoplan/ogm.hpp"

namespace negoplan {

/// Flattened OGM stack: channel-major, then cell row, then cell column.
using Observation = std::vector<std::uint8_t>;

Observation encode_observation(const OgmStack& stack);

/// Packs observations into the network input layout.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pack_inputs(std::span<const Observation* const> obs) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> in(kInputChannels,
                                                           static_cast<Eigen::Index>(obs.size()) * kInputPixels);
  for (std::size_t b = 0; b < obs.size(); ++b) {
    const std::uint8_t* src = obs[b]->data();
    for (int c = 0; c < kInputChannels; ++c)
      for (int i = 0; i < kInputPixels; ++i)
        in(c, static_cast<Eigen::Index>(b) * kInputPixels + i) = static_cast<Scalar>(src[c * kInputPixels + i]);
  }
  return in;
}

std::array<double, kNumActions> action_distribution(std::span<const double, kNumActions> logits);

template <typename Scalar>
std::array<double, kNumActions> action_distribution(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& logits) {
  std::array<double, kNumActions> z;
  for (int i = 0; i < kNumActions; ++i) z[static_cast<std::size_t>(i)] = static_cast<double>(logits(i));
  return action_distribution(std::span<const double, kNumActions>(z));
}

double entropy(std::span<const double, kNumActions> probs);

/// Discounted returns, reset at episode ends. rewards[t] is followed by a
/// terminal state when done[t]; the last non-terminal step bootstraps from
/// `bootstrap_value`.
std::vector<double> k_step_returns(std::span<const double> rewards, double bootstrap_value, double gamma,
                                   std::span<const std::uint8_t> done);

/// A_t = R_t - V(s_t).
std::vector<double> advantages(std::span<const double> returns, std::span<const double> values);

struct LossCoefficients {
  double entropy = 0.01;
  double value = 0.5;  // weight of the value loss in the total
};

struct LossReport {
  double policy_loss = 0.0;  // includes the entropy bonus
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;  // policy_loss + value * value_loss
};

/// Adds one chunk's contribution to losses averaged over `normalizer` samples
/// and, when `grad` is set, accumulates the matching gradient.
template <typename Scalar>
LossReport accumulate_losses(const NetworkParams<Scalar>& p,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& input,
                             std::span<const int> actions, std::span<const double> returns,
                             std::span<const double> adv, double normalizer, const LossCoefficients& coeff,
                             NetworkParams<Scalar>* grad, ForwardCache<Scalar>& cache) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int batch = static_cast<int>(actions.size());
  forward(p, input, batch, cache);
  LossReport r;
  Matrix d_logits(kNumActions, batch);
  Matrix d_value(1, batch);
  for (int b = 0; b < batch; ++b) {
    const std::size_t bi = static_cast<std::size_t>(b);
    // Softmax and its log in double regardless of Scalar.
    std::array<double, kNumActions> z;
    for (int i = 0; i < kNumActions; ++i) z[static_cast<std::size_t>(i)] = static_cast<double>(cache.logits(i, b));
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double log_sum = zmax + std::log(sum);
    std::array<double, kNumActions> logp, pr;
    double h = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      logp[i] = z[i] - log_sum;
      pr[i] = std::exp(logp[i]);
      h -= pr[i] * logp[i];
    }
    const int a = actions[bi];
    const double A = adv[bi];
    r.policy_loss += (-logp[static_cast<std::size_t>(a)] * A - coeff.entropy * h) / normalizer;
    r.entropy += h / normalizer;
    const double v = static_cast<double>(cache.value(0, b));
    const double err = v - returns[bi];
    r.value_loss += err * err / normalizer;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double onehot = static_cast<int>(i) == a ? 1.0 : 0.0;
      // d(-log p_a A)/dz_i = -A (1[i=a] - p_i); dH/dz_i = -p_i (log p_i + H).
      const double g = -A * (onehot - pr[i]) + coeff.entropy * pr[i] * (logp[i] + h);
      d_logits(static_cast<Eigen::Index>(i), b) = static_cast<Scalar>(g / normalizer);
    }
    d_value(0, b) = static_cast<Scalar>(coeff.value * 2.0 * err / normalizer);
  }
  r.total = r.policy_loss + coeff.value * r.value_loss;
  if (grad != nullptr) backward(p, cache, d_logits, d_value, *grad);
  return r;
}

/// Losses and gradient over a whole batch processed at once.
template <typename Scalar>
LossReport compute_losses(const NetworkParams<Scalar>& p,
                          const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& input,
                          std::span<const int> actions, std::span<const double> returns, std::span<const double> adv,
                          const LossCoefficients& coeff, NetworkParams<Scalar>* grad) {
  if (actions.empty()) throw std::invalid_argument("compute_losses: empty batch");
  ForwardCache<Scalar> cache;
  if (grad != nullptr) *grad = NetworkParams<Scalar>::zeros();
  const LossReport r = accumulate_losses(p, input, actions, returns, adv, static_cast<double>(actions.size()), coeff,
                                         grad, cache);
  if (!std::isfinite(r.total) || (grad != nullptr && !grad->all_finite()))
    throw NonFiniteError("compute_losses: non-finite loss or gradient");
  return r;
}

struct AdamSettings {
  double lr_policy = 1e-4;  // encoder and policy head
  double lr_value = 1e-3;   // value head
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  NetworkParams<Scalar> m = NetworkParams<Scalar>::zeros();
  NetworkParams<Scalar> v = NetworkParams<Scalar>::zeros();
  std::int64_t step = 0;
};

template <typename Scalar>
void apply_update(NetworkParams<Scalar>& params, const NetworkParams<Scalar>& grad, AdamState<Scalar>& state,
                  const AdamSettings& s) {
  using Matrix = typename NetworkParams<Scalar>::Matrix;
  std::vector<const Matrix*> g;
  std::vector<Matrix*> m;
  std::vector<Matrix*> v;
  grad.visit([&](const std::string&, ParamGroup, const Matrix& t) { g.push_back(&t); });
  state.m.visit([&](const std::string&, ParamGroup, Matrix& t) { m.push_back(&t); });
  state.v.visit([&](const std::string&, ParamGroup, Matrix& t) { v.push_back(&t); });
  ++state.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.step));
  const Scalar b1(s.beta1), b2(s.beta2), eps(s.epsilon);
  std::size_t i = 0;
  params.visit([&](const std::string&, ParamGroup group, Matrix& w) {
    const double lr = group == ParamGroup::value ? s.lr_value : s.lr_policy;
    Matrix& mi = *m[i];
    Matrix& vi = *v[i];
    const Matrix& gi = *g[i];
    mi = b1 * mi + (Scalar(1) - b1) * gi;
    vi = b2 * vi + (Scalar(1) - b2) * gi.cwiseAbs2();
    const Scalar inv_c1(1.0 / c1), inv_c2(1.0 / c2), step(lr);
    w.array() -= step * (mi.array() * inv_c1) / ((vi.array() * inv_c2).sqrt() + eps);
    ++i;
  });
}

struct GradientCheckOptions {
  double epsilon = 1e-5;
  int coordinates_per_tensor = 25;  // 20 tensors, so 500 coordinates
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
  std::string corrupt_tensor;  // harness self-test: scales this tensor's analytic gradient
  double corrupt_factor = 1.05;
};

struct GradientCheckEntry {
  std::string tensor;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::vector<GradientCheckEntry> entries;
  int kink_redraws = 0;  // coordinates whose perturbation flipped a ReLU
  const GradientCheckEntry& worst() const;
};

/// Central differences of the total loss against the analytic gradient on a
/// random subset of coordinates from every tensor.
GradientCheckResult gradient_check(const NetworkParams<double>& params, const Eigen::MatrixXd& input,
                                   std::span<const int> actions, std::span<const double> returns,
                                   std::span<const double> adv, const LossCoefficients& coeff,
                                   const GradientCheckOptions& options);

/// Random parameters, inputs and targets for a self-contained gradient check.
GradientCheckResult random_gradient_check(std::uint64_t seed, int batch, const GradientCheckOptions& options);

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training state persisted between iterations.
struct Checkpoint {
  NetworkParams<float> params = NetworkParams<float>::zeros();
  AdamState<float> adam;
  std::int64_t iteration = 0;  // iterations completed
};

inline constexpr const char* kCheckpointMagic = "NEGOPLAN-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace negoplan
