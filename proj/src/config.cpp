#include "negoplan/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

namespace negoplan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_value(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(DrivingStyle v) { return to_string(v); }
std::string format_value(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_value(v[i]);
  return out;
}

template <typename T>
T parse_number(const std::string& text, const char* what) {
  T v{};
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError("expected " + std::string(what) + ", got '" + text + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw ConfigError("expected a finite number, got '" + text + "'");
  return v;
}

template <typename T>
T parse_value(const std::string& text) {
  if constexpr (std::is_same_v<T, double>) {
    return parse_number<double>(text, "a number");
  } else if constexpr (std::is_same_v<T, int>) {
    return parse_number<int>(text, "an integer");
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    return parse_number<std::uint64_t>(text, "an unsigned integer");
  } else if constexpr (std::is_same_v<T, DrivingStyle>) {
    try {
      return parse_style(text);
    } catch (const std::exception&) {
      throw ConfigError("expected conservative or aggressive, got '" + text + "'");
    }
  } else {
    static_assert(std::is_same_v<T, std::vector<double>>);
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_number<double>(trim(item), "a number list"));
    if (out.empty()) throw ConfigError("expected a comma-separated number list");
    return out;
  }
}

struct Field {
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <typename Access>
Field field(std::string key, Access access) {
  using T = std::remove_cvref_t<decltype(access(std::declval<Config&>()))>;
  return {std::move(key), [access](const Config& c) { return format_value(access(c)); },
          [access](Config& c, const std::string& v) { access(c) = parse_value<T>(v); }};
}

#define NEGOPLAN_FIELD(key, member) field(key, [](auto& c) -> auto& { return c.member; })

void add_setting(std::vector<Field>& f, const std::string& name, ExperimentSetting EvalSettings::*which) {
  const std::string p = "eval." + name + ".";
  f.push_back(field(p + "episodes", [which](auto& c) -> auto& { return (c.eval.*which).episodes; }));
  f.push_back(field(p + "min", [which](auto& c) -> auto& { return (c.eval.*which).social_start_range.min; }));
  f.push_back(field(p + "max", [which](auto& c) -> auto& { return (c.eval.*which).social_start_range.max; }));
  f.push_back(field(p + "style", [which](auto& c) -> auto& { return (c.eval.*which).social_style; }));
}

std::vector<Field> registry(std::size_t phases) {
  std::vector<Field> f{
      NEGOPLAN_FIELD("sim.control_rate_hz", control_rate_hz),
      NEGOPLAN_FIELD("sim.ogm.size", ogm_size),
      NEGOPLAN_FIELD("sim.ogm.channels", ogm_channels),
      NEGOPLAN_FIELD("sim.ogm.resolution", ogm.resolution),
      NEGOPLAN_FIELD("sim.ogm.channel_spacing_s", ogm.channel_spacing),
      NEGOPLAN_FIELD("sim.lane_width", scenario.lane_width),
      NEGOPLAN_FIELD("sim.free_width", scenario.free_width),
      NEGOPLAN_FIELD("sim.corridor_length", scenario.corridor_length),
      NEGOPLAN_FIELD("sim.corridor_entry_s", scenario.corridor_entry_s),
      NEGOPLAN_FIELD("sim.ramp_length", scenario.ramp_length),
      NEGOPLAN_FIELD("sim.ramp_gap", scenario.ramp_gap),
      NEGOPLAN_FIELD("sim.ego_target_beyond", scenario.ego_target_beyond),
      NEGOPLAN_FIELD("sim.social_target_beyond", scenario.social_target_beyond),
      NEGOPLAN_FIELD("sim.tail_length", scenario.tail_length),
      NEGOPLAN_FIELD("sim.parked_length", scenario.parked_length),
      NEGOPLAN_FIELD("sim.parked_gap", scenario.parked_gap),
      NEGOPLAN_FIELD("sim.ego_length", scenario.ego_length),
      NEGOPLAN_FIELD("sim.ego_width", scenario.ego_width),
      NEGOPLAN_FIELD("sim.social_length", scenario.social_length),
      NEGOPLAN_FIELD("sim.social_width", scenario.social_width),
      NEGOPLAN_FIELD("sim.clearance_margin", scenario.clearance_margin),
      NEGOPLAN_FIELD("sim.ego_start_dist", episode.ego_start_dist),
      NEGOPLAN_FIELD("sim.conservative_min", episode.conservative_range.min),
      NEGOPLAN_FIELD("sim.conservative_max", episode.conservative_range.max),
      NEGOPLAN_FIELD("sim.aggressive_min", episode.aggressive_range.min),
      NEGOPLAN_FIELD("sim.aggressive_max", episode.aggressive_range.max),
      NEGOPLAN_FIELD("sim.time_limit_s", episode.time_limit),
      NEGOPLAN_FIELD("sim.initial_speed", episode.initial_speed),
      NEGOPLAN_FIELD("sim.social_horizon.conservative_s", conservative_horizon_s),
      NEGOPLAN_FIELD("sim.social_horizon.aggressive_s", aggressive_horizon_s),
      NEGOPLAN_FIELD("planner.max_accel", planner.limits.max_accel),
      NEGOPLAN_FIELD("planner.max_decel", planner.limits.max_decel),
      NEGOPLAN_FIELD("planner.max_speed", planner.limits.max_speed),
      NEGOPLAN_FIELD("planner.max_curvature", planner.limits.max_curvature),
      NEGOPLAN_FIELD("planner.weight_jerk", planner.limits.weight_jerk),
      NEGOPLAN_FIELD("planner.weight_duration", planner.limits.weight_duration),
      NEGOPLAN_FIELD("planner.weight_lateral", planner.limits.weight_lateral),
      NEGOPLAN_FIELD("planner.weight_speed", planner.limits.weight_speed),
      NEGOPLAN_FIELD("planner.lateral_offsets", planner.grids.lateral_offsets),
      NEGOPLAN_FIELD("planner.speed_fractions", planner.grids.speed_fractions),
      NEGOPLAN_FIELD("planner.durations_s", planner.grids.durations),
      NEGOPLAN_FIELD("planner.reference_speed", planner.reference_speed),
      NEGOPLAN_FIELD("planner.plan_steps", planner.plan_steps),
      NEGOPLAN_FIELD("planner.safety_margin", planner.safety_margin),
      NEGOPLAN_FIELD("rl.action_horizons_s", actions.horizons_s),
      NEGOPLAN_FIELD("rl.gamma", train.gamma),
      NEGOPLAN_FIELD("rl.lr_policy", train.adam.lr_policy),
      NEGOPLAN_FIELD("rl.lr_value", train.adam.lr_value),
      NEGOPLAN_FIELD("rl.adam_beta1", train.adam.beta1),
      NEGOPLAN_FIELD("rl.adam_beta2", train.adam.beta2),
      NEGOPLAN_FIELD("rl.adam_epsilon", train.adam.epsilon),
      NEGOPLAN_FIELD("rl.entropy_coeff", train.loss.entropy),
      NEGOPLAN_FIELD("rl.value_coeff", train.loss.value),
      NEGOPLAN_FIELD("rl.minibatch", train.minibatch),
      NEGOPLAN_FIELD("rl.segment_length", train.segment_length),
      NEGOPLAN_FIELD("rl.chunk", train.chunk),
      NEGOPLAN_FIELD("curriculum.tasks_per_iteration", train.tasks_per_iteration),
      NEGOPLAN_FIELD("curriculum.trajectories_per_iteration", train.trajectories_per_iteration),
      NEGOPLAN_FIELD("curriculum.keep_checkpoints", train.keep_checkpoints),
      NEGOPLAN_FIELD("run.workers", workers),
      NEGOPLAN_FIELD("run.master_seed", master_seed),
  };
  f.push_back({"curriculum.phases", [](const Config& c) { return std::to_string(c.train.phases.size()); },
               [](Config&, const std::string&) {}});
  for (std::size_t i = 0; i < phases; ++i) {
    const std::string p = "curriculum.phase" + std::to_string(i + 1) + ".";
    auto at = [i](auto& c) -> auto& { return c.train.phases[i]; };
    f.push_back(field(p + "conservative_min", [at](auto& c) -> auto& { return at(c).conservative_range.min; }));
    f.push_back(field(p + "conservative_max", [at](auto& c) -> auto& { return at(c).conservative_range.max; }));
    f.push_back(field(p + "aggressive_min", [at](auto& c) -> auto& { return at(c).aggressive_range.min; }));
    f.push_back(field(p + "aggressive_max", [at](auto& c) -> auto& { return at(c).aggressive_range.max; }));
    f.push_back(field(p + "style_mix", [at](auto& c) -> auto& { return at(c).style_mix; }));
    f.push_back(field(p + "iterations", [at](auto& c) -> auto& { return at(c).iterations; }));
  }
  add_setting(f, "push", &EvalSettings::push);
  add_setting(f, "yield", &EvalSettings::yield);
  std::sort(f.begin(), f.end(), [](const Field& a, const Field& b) { return a.key < b.key; });
  return f;
}

#undef NEGOPLAN_FIELD

struct Assignment {
  std::string key;
  std::string value;
  std::string where;  // "file:line" for messages
};

Config apply(const std::vector<Assignment>& assignments) {
  Config c;
  // The phase count decides which per-phase keys exist, so it goes first.
  for (const Assignment& a : assignments) {
    if (a.key != "curriculum.phases") continue;
    int n = 0;
    try {
      n = parse_value<int>(a.value);
    } catch (const ConfigError& e) {
      throw ConfigError(a.where + ": curriculum.phases: " + e.what());
    }
    if (n < 1 || n > 64) throw ConfigError(a.where + ": curriculum.phases must be in [1, 64]");
    const CurriculumPhase last = c.train.phases.back();
    c.train.phases.resize(static_cast<std::size_t>(n), last);
  }
  const std::vector<Field> fields = registry(c.train.phases.size());
  std::map<std::string, const Field*> by_key;
  for (const Field& f : fields) by_key[f.key] = &f;
  for (const Assignment& a : assignments) {
    const auto it = by_key.find(a.key);
    if (it == by_key.end()) throw ConfigError(a.where + ": unknown key '" + a.key + "'");
    try {
      it->second->set(c, a.value);
    } catch (const ConfigError& e) {
      throw ConfigError(a.where + ": " + a.key + ": " + e.what());
    }
  }
  c.planner.step_dt = c.step_dt();
  c.episode.step_dt = c.step_dt();
  return c;
}

Assignment split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
  Assignment a{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where};
  if (a.key.empty()) throw ConfigError(where + ": missing key");
  if (a.value.empty()) throw ConfigError(where + ": missing value for '" + a.key + "'");
  return a;
}

std::vector<Assignment> read_lines(const std::string& text, const std::string& source) {
  std::vector<Assignment> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    out.push_back(split_assignment(body, source + ":" + std::to_string(n)));
  }
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

int Config::social_horizon_steps(DrivingStyle style) const {
  return style_horizon_steps(style, conservative_horizon_s, aggressive_horizon_s, step_dt());
}

void Config::validate() const {
  require(control_rate_hz > 0.0, "sim.control_rate_hz must be positive");
  require(ogm_size == kOgmSize, "sim.ogm.size is fixed at " + std::to_string(kOgmSize) + " by the network input");
  require(ogm_channels == kOgmChannels,
          "sim.ogm.channels is fixed at " + std::to_string(kOgmChannels) + " by the network input");
  require(ogm.resolution > 0.0 && ogm.channel_spacing > 0.0, "sim.ogm resolution and spacing must be positive");
  require(conservative_horizon_s >= 0.0 && aggressive_horizon_s >= 0.0, "social horizons must be non-negative");
  try {
    actions.validate();
    planner.limits.validate();
    episode.validate();
    build_map(scenario);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(static_cast<int>(actions.size()) == kNumActions,
          "rl.action_horizons_s needs exactly " + std::to_string(kNumActions) + " entries");
  require(!planner.grids.lateral_offsets.empty() && !planner.grids.speed_fractions.empty() &&
              !planner.grids.durations.empty(),
          "planner grids must be non-empty");
  for (double d : planner.grids.durations) require(d > 0.0, "planner.durations_s must be positive");
  require(planner.reference_speed > 0.0, "planner.reference_speed must be positive");
  int longest = std::max(social_horizon_steps(DrivingStyle::conservative),
                         social_horizon_steps(DrivingStyle::aggressive));
  for (std::size_t a = 0; a < actions.size(); ++a) longest = std::max(longest, actions.steps(a, step_dt()));
  require(planner.plan_steps >= longest, "planner.plan_steps is shorter than the longest prediction horizon");
  require(planner.safety_margin >= 0.0, "planner.safety_margin must be non-negative");

  require(!train.phases.empty(), "curriculum needs at least one phase");
  for (std::size_t i = 0; i < train.phases.size(); ++i) {
    try {
      train.phases[i].validate(scenario.corridor_entry_s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("curriculum.phase" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  require(train.tasks_per_iteration > 0, "curriculum.tasks_per_iteration must be positive");
  require(train.trajectories_per_iteration > 0, "curriculum.trajectories_per_iteration must be positive");
  require(train.keep_checkpoints >= 1, "curriculum.keep_checkpoints must be at least 1");
  require(train.segment_length > 0 && train.minibatch > 0 && train.chunk > 0,
          "rl.segment_length, rl.minibatch and rl.chunk must be positive");
  require(train.gamma >= 0.0 && train.gamma <= 1.0, "rl.gamma must lie in [0, 1]");
  require(train.adam.lr_policy > 0.0 && train.adam.lr_value > 0.0, "learning rates must be positive");
  require(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0 && train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0,
          "Adam moment constants must lie in [0, 1)");
  require(train.adam.epsilon > 0.0, "rl.adam_epsilon must be positive");
  require(train.loss.entropy >= 0.0 && train.loss.value >= 0.0, "loss coefficients must be non-negative");
  for (const ExperimentSetting* s : {&eval.push, &eval.yield}) {
    require(s->episodes >= 1, "eval." + s->name + ".episodes must be at least 1");
    require(s->social_start_range.min >= 0.0 && s->social_start_range.min <= s->social_start_range.max &&
                s->social_start_range.max <= scenario.corridor_entry_s,
            "eval." + s->name + " range is empty or off the map");
  }
  require(workers >= 1, "run.workers must be at least 1");
}

std::vector<std::string> config_keys(const Config& config) {
  std::vector<std::string> keys;
  for (const Field& f : registry(config.train.phases.size())) keys.push_back(f.key);
  return keys;
}

std::string serialize(const Config& config) {
  std::string out;
  for (const Field& f : registry(config.train.phases.size())) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

Config parse_config(const std::string& text, const std::string& source) { return apply(read_lines(text, source)); }

Config load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::vector<Assignment> all;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    all = read_lines(buf.str(), path.string());
  }
  for (std::size_t i = 0; i < overrides.size(); ++i)
    all.push_back(split_assignment(trim(overrides[i]), "--set #" + std::to_string(i + 1)));
  Config c = apply(all);
  c.validate();
  return c;
}

std::string config_hash(const Config& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EpisodeSettings base_episode_settings(const Config& config) {
  EpisodeSettings s;
  s.episode = config.episode;
  s.episode.step_dt = config.step_dt();
  s.planner = config.planner;
  s.planner.step_dt = config.step_dt();
  s.ogm = config.ogm;
  s.actions = config.actions;
  s.social_pred_steps = config.social_horizon_steps(s.episode.social_style);
  return s;
}

}  // namespace negoplan
