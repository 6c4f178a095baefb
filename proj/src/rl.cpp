#include "negoplan/rl.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace negoplan {

Observation encode_observation(const OgmStack& stack) {
  Observation obs(static_cast<std::size_t>(kInputChannels * kInputPixels));
  for (int c = 0; c < kInputChannels; ++c) {
    const OgmCells& cells = stack.frames[static_cast<std::size_t>(c)].cells;
    std::memcpy(obs.data() + c * kInputPixels, cells.data(), static_cast<std::size_t>(kInputPixels));
  }
  return obs;
}

std::array<double, kNumActions> action_distribution(std::span<const double, kNumActions> logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumActions> p;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double entropy(std::span<const double, kNumActions> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

std::vector<double> k_step_returns(std::span<const double> rewards, double bootstrap_value, double gamma,
                                   std::span<const std::uint8_t> done) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("k_step_returns: gamma outside [0, 1]");
  if (done.size() != rewards.size()) throw std::invalid_argument("k_step_returns: flag count mismatch");
  std::vector<double> out(rewards.size());
  double next = bootstrap_value;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    if (done[t]) next = 0.0;
    next = rewards[t] + gamma * next;
    out[t] = next;
  }
  return out;
}

std::vector<double> advantages(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw std::invalid_argument("advantages: size mismatch");
  std::vector<double> a(returns.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = returns[i] - values[i];
  return a;
}

const GradientCheckEntry& GradientCheckResult::worst() const {
  if (entries.empty()) throw std::logic_error("gradient check has no entries");
  return *std::max_element(entries.begin(), entries.end(),
                           [](const auto& a, const auto& b) { return a.rel_error < b.rel_error; });
}

GradientCheckResult gradient_check(const NetworkParams<double>& params, const Eigen::MatrixXd& input,
                                   std::span<const int> actions, std::span<const double> returns,
                                   std::span<const double> adv, const LossCoefficients& coeff,
                                   const GradientCheckOptions& options) {
  if (options.epsilon < 1e-7 || options.epsilon > 1e-3)
    throw std::invalid_argument("gradient_check: epsilon outside [1e-7, 1e-3]");
  NetworkParams<double> grad;
  compute_losses(params, input, actions, returns, adv, coeff, &grad);
  if (!options.corrupt_tensor.empty()) {
    bool found = false;
    grad.visit([&](const std::string& name, ParamGroup, Eigen::MatrixXd& g) {
      if (name == options.corrupt_tensor) {
        g *= options.corrupt_factor;
        found = true;
      }
    });
    if (!found) throw std::invalid_argument("gradient_check: unknown tensor " + options.corrupt_tensor);
  }

  std::vector<const Eigen::MatrixXd*> analytic;
  grad.visit([&](const std::string&, ParamGroup, const Eigen::MatrixXd& g) { analytic.push_back(&g); });

  NetworkParams<double> probe = params;
  std::mt19937_64 rng(options.seed);
  GradientCheckResult result;
  std::size_t ti = 0;
  ForwardCache<double> base, cache;
  forward(probe, input, static_cast<int>(actions.size()), base);
  auto loss_at = [&]() {
    return accumulate_losses(probe, input, actions, returns, adv, static_cast<double>(actions.size()), coeff,
                             static_cast<NetworkParams<double>*>(nullptr), cache)
        .total;
  };
  // Central differences are meaningless across a ReLU kink; such coordinates are redrawn.
  auto same_pattern = [&]() {
    auto same = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
      return ((a.array() > 0.0) == (b.array() > 0.0)).all();
    };
    return same(base.a1, cache.a1) && same(base.a2, cache.a2) && same(base.a3, cache.a3) &&
           same(base.features, cache.features) && same(base.p1, cache.p1) && same(base.p2, cache.p2) &&
           same(base.h1, cache.h1) && same(base.h2, cache.h2);
  };
  constexpr int kMaxDraws = 50;
  probe.visit([&](const std::string& name, ParamGroup, Eigen::MatrixXd& w) {
    const Eigen::MatrixXd& g = *analytic[ti++];
    std::uniform_int_distribution<Eigen::Index> pick(0, w.size() - 1);
    for (int k = 0; k < options.coordinates_per_tensor; ++k) {
      for (int draw = 0;; ++draw) {
        const Eigen::Index flat = pick(rng);
        const Eigen::Index r = flat % w.rows();
        const Eigen::Index c = flat / w.rows();
        const double saved = w(r, c);
        w(r, c) = saved + options.epsilon;
        const double up = loss_at();
        bool smooth = same_pattern();
        w(r, c) = saved - options.epsilon;
        const double down = loss_at();
        smooth = smooth && same_pattern();
        w(r, c) = saved;
        if (!smooth && draw + 1 < kMaxDraws) {
          ++result.kink_redraws;
          continue;
        }
        GradientCheckEntry e;
        e.tensor = name;
        e.row = r;
        e.col = c;
        e.analytic = g(r, c);
        e.numeric = (up - down) / (2.0 * options.epsilon);
        const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), options.denominator_floor});
        e.rel_error = std::abs(e.analytic - e.numeric) / denom;
        result.max_rel_error = std::max(result.max_rel_error, e.rel_error);
        result.entries.push_back(e);
        break;
      }
    }
  });
  return result;
}

GradientCheckResult random_gradient_check(std::uint64_t seed, int batch, const GradientCheckOptions& options) {
  if (batch <= 0) throw std::invalid_argument("random_gradient_check: batch must be positive");
  std::mt19937_64 rng(seed);
  NetworkParams<double> params = NetworkParams<double>::initialized(rng());
  // Nonzero biases so no unit sits exactly on a ReLU kink.
  std::normal_distribution<double> bias(0.0, 0.1);
  params.visit([&](const std::string& name, ParamGroup, Eigen::MatrixXd& m) {
    if (name.back() == 'b')
      for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = bias(rng);
  });
  std::bernoulli_distribution occupied(0.15);
  Eigen::MatrixXd input(kInputChannels, static_cast<Eigen::Index>(batch) * kInputPixels);
  for (Eigen::Index j = 0; j < input.cols(); ++j)
    for (Eigen::Index i = 0; i < input.rows(); ++i) input(i, j) = occupied(rng) ? 1.0 : 0.0;
  std::uniform_int_distribution<int> action(0, kNumActions - 1);
  std::normal_distribution<double> target(0.0, 2.0);
  std::vector<int> actions(static_cast<std::size_t>(batch));
  std::vector<double> returns(actions.size()), adv(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    actions[i] = action(rng);
    returns[i] = target(rng);
    adv[i] = target(rng);
  }
  GradientCheckOptions opt = options;
  opt.seed = rng();
  return gradient_check(params, input, actions, returns, adv, LossCoefficients{}, opt);
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::vector<TensorShape> checkpoint_table() {
  std::vector<TensorShape> table;
  for (const char* prefix : {"", "adam_m.", "adam_v."})
    for (TensorShape s : NetworkParams<float>::shapes()) {
      s.name = prefix + s.name;
      table.push_back(s);
    }
  return table;
}

template <typename C, typename F>
void visit_checkpoint(C& ckpt, F&& f) {
  ckpt.params.visit(f);
  ckpt.adam.m.visit(f);
  ckpt.adam.v.visit(f);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    const std::vector<TensorShape> table = checkpoint_table();
    out << kCheckpointMagic << '\n'
        << "version " << kCheckpointVersion << '\n'
        << "iteration " << ckpt.iteration << '\n'
        << "adam_step " << ckpt.adam.step << '\n'
        << "tensors " << table.size() << '\n';
    for (const TensorShape& s : table) out << s.name << ' ' << s.rows << ' ' << s.cols << '\n';
    out << "data\n";
    visit_checkpoint(ckpt, [&](const std::string&, ParamGroup, const Eigen::MatrixXf& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = static_cast<double>(m.data()[i]);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    });
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  auto expect_line = [&](const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw CheckpointError(path.string() + ": truncated header before " + what);
    return line;
  };
  if (expect_line("magic") != kCheckpointMagic) throw CheckpointError(path.string() + ": not a checkpoint file");
  auto keyed = [&](const std::string& key) {
    std::istringstream ls(expect_line(key));
    std::string k;
    long long v = 0;
    if (!(ls >> k >> v) || k != key) throw CheckpointError(path.string() + ": expected '" + key + "' header line");
    return v;
  };
  const long long version = keyed("version");
  if (version != kCheckpointVersion)
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.iteration = keyed("iteration");
  ckpt.adam.step = keyed("adam_step");
  const std::vector<TensorShape> table = checkpoint_table();
  if (keyed("tensors") != static_cast<long long>(table.size()))
    throw CheckpointError(path.string() + ": tensor count mismatch");
  for (const TensorShape& want : table) {
    std::istringstream ls(expect_line("shape table"));
    TensorShape got;
    if (!(ls >> got.name >> got.rows >> got.cols) || !(got == want))
      throw CheckpointError(path.string() + ": shape mismatch for " + want.name);
  }
  if (expect_line("data") != "data") throw CheckpointError(path.string() + ": missing data marker");
  visit_checkpoint(ckpt, [&](const std::string& name, ParamGroup, Eigen::MatrixXf& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      double v = 0.0;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CheckpointError(path.string() + ": truncated data in " + name);
      m.data()[i] = static_cast<float>(v);
    }
  });
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(path.string() + ": trailing bytes");
  return ckpt;
}

}  // namespace negoplan
