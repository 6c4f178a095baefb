#include "negoplan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "negoplan/config.hpp"
#include "negoplan/parallel.hpp"
#include "negoplan/policy.hpp"
#include "negoplan/seed.hpp"

namespace negoplan {

ControllerSpec ControllerSpec::fixed(const ActionSpec& actions, std::size_t action) {
  if (action >= actions.size()) throw std::out_of_range("fixed controller action out of range");
  char name[32];
  std::snprintf(name, sizeof name, "fixed_%gs", actions.horizons_s[action]);
  return {name, static_cast<int>(action)};
}

std::uint64_t eval_seed(std::uint64_t master_seed, const ExperimentSetting& setting, int index) {
  std::uint64_t name_hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : setting.name) name_hash = (name_hash ^ c) * 0x100000001b3ULL;
  return derive_seed(master_seed, {tag(StreamTag::eval), name_hash, static_cast<std::uint64_t>(index)});
}

EpisodeSettings setting_episode_settings(const Config& config, const ExperimentSetting& setting,
                                         std::uint64_t seed) {
  EpisodeSettings s = base_episode_settings(config);
  std::mt19937_64 rng(seed);
  const DistanceRange& r = setting.social_start_range;
  s.episode.social_style = setting.social_style;
  s.episode.social_start_dist = r.min == r.max ? r.min : std::uniform_real_distribution<double>(r.min, r.max)(rng);
  s.episode.rng_seed = seed;
  s.social_pred_steps = config.social_horizon_steps(setting.social_style);
  return s;
}

EpisodeLog run_episode(const Config& config, const CorridorMap& map, const ControllerSpec& controller,
                       const ExperimentSetting& setting, std::uint64_t seed, const NetworkParams<float>* params) {
  const EpisodeSettings settings = setting_episode_settings(config, setting, seed);
  EpisodeLog log;
  if (controller.fixed_action >= 0) {
    FixedHorizonController c(static_cast<std::size_t>(controller.fixed_action));
    log = run_closed_loop(map, settings, c);
  } else {
    if (params == nullptr) throw std::invalid_argument("adaptive controller needs network parameters");
    PolicyController c(*params, true, seed);
    log = run_closed_loop(map, settings, c);
  }
  log.controller = controller.name;
  log.setting = setting.name;
  return log;
}

double BehaviorIndexSeries::at(int step) const {
  if (start_step < 0 || step < start_step)
    throw UndefinedBeforePerception("behavior index queried before the social vehicle was perceived");
  const auto i = static_cast<std::size_t>(step - start_step);
  if (i >= psi.size()) throw std::out_of_range("behavior index queried past the episode end");
  return psi[i];
}

double behavior_index_value(double s_soc, double s_ego, double d_ini_ego, double d_ini_soc) {
  if (!(d_ini_ego > 0.0 && d_ini_soc > 0.0)) throw std::invalid_argument("initial distances must be positive");
  return std::atan((s_soc - s_ego) / (d_ini_ego / d_ini_soc));
}

BehaviorIndexSeries behavior_index(const EpisodeLog& log) {
  BehaviorIndexSeries out;
  out.d_ini_ego = log.ego_start_dist;
  out.d_ini_soc = log.social_start_dist;
  const auto first = std::find_if(log.steps.begin(), log.steps.end(), [](const StepRecord& r) { return r.social_visible; });
  if (first == log.steps.end()) {
    out.start_step = -1;
    return out;
  }
  out.start_step = first->step;
  for (auto it = first; it != log.steps.end(); ++it) {
    const double s_ego = it->ego_travel - first->ego_travel;
    const double s_soc = it->social_travel - first->social_travel;
    out.psi.push_back(behavior_index_value(s_soc, s_ego, out.d_ini_ego, out.d_ini_soc));
    out.t.push_back(it->t);
  }
  return out;
}

std::string to_string(SignPattern p) {
  switch (p) {
    case SignPattern::negative_throughout: return "negative_throughout";
    case SignPattern::positive_then_negative: return "positive_then_negative";
    case SignPattern::other: return "other";
  }
  return "other";
}

SignPattern sign_pattern(const std::vector<double>& psi, double dead_band) {
  if (psi.empty()) throw std::invalid_argument("sign_pattern: empty series");
  std::vector<int> signs;
  for (double v : psi)
    if (std::abs(v) >= dead_band) signs.push_back(v > 0.0 ? 1 : -1);
  const bool any_pos = std::find(signs.begin(), signs.end(), 1) != signs.end();
  const bool any_neg = std::find(signs.begin(), signs.end(), -1) != signs.end();
  if (!any_pos) return any_neg ? SignPattern::negative_throughout : SignPattern::other;
  if (!any_neg || signs.front() != 1) return SignPattern::other;
  const auto flip = std::find(signs.begin(), signs.end(), -1);
  return std::find(flip, signs.end(), 1) == signs.end() ? SignPattern::positive_then_negative : SignPattern::other;
}

Stat describe(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("describe: no values");
  // Sorting first makes the sums independent of input order.
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  Stat s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / n);
  s.min = values.front();
  s.max = values.back();
  return s;
}

Summary aggregate(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("aggregate: no logs");
  Summary s;
  s.controller = logs.front().controller;
  s.setting = logs.front().setting;
  s.n = static_cast<int>(logs.size());
  std::vector<double> drive, suspends, reward;
  int success = 0, collision = 0, timeout = 0;
  for (const EpisodeLog& log : logs) {
    drive.push_back(log.final.both_reached ? log.duration() : log.time_limit);
    suspends.push_back(suspend_count(log));
    reward.push_back(log.total_reward());
    success += log.final.both_reached && !log.final.collided;
    collision += log.final.collided;
    timeout += log.final.timed_out && !log.final.collided;
  }
  s.drive_time = describe(drive);
  s.suspends = describe(suspends);
  s.reward = describe(reward);
  s.success_rate = success / static_cast<double>(s.n);
  s.collision_rate = collision / static_cast<double>(s.n);
  s.timeout_rate = timeout / static_cast<double>(s.n);
  return s;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<std::filesystem::path> export_report(
    const std::vector<Summary>& summaries, const std::vector<std::pair<std::string, BehaviorIndexSeries>>& series,
    const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path report = out_dir / "report.csv";
  {
    std::ofstream out(report);
    if (!out) throw std::runtime_error("cannot write " + report.string());
    out << kReportHeader << '\n';
    for (const Summary& s : summaries)
      out << s.controller << ',' << s.setting << ',' << s.n << ',' << num(s.drive_time.mean) << ','
          << num(s.drive_time.sd) << ',' << num(s.suspends.mean) << ',' << num(s.suspends.sd) << ','
          << num(s.reward.mean) << ',' << num(s.reward.sd) << ',' << num(s.success_rate) << ','
          << num(s.collision_rate) << ',' << num(s.timeout_rate) << '\n';
    if (!out) throw std::runtime_error("failed writing " + report.string());
  }
  written.push_back(report);
  if (!series.empty()) std::filesystem::create_directories(out_dir / "psi");
  for (const auto& [name, s] : series) {
    const std::filesystem::path p = out_dir / "psi" / (name + ".csv");
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << "# start_step=" << s.start_step << '\n'
        << "# d_ini_ego=" << num(s.d_ini_ego) << '\n'
        << "# d_ini_soc=" << num(s.d_ini_soc) << '\n'
        << "step,t,psi\n";
    for (std::size_t i = 0; i < s.psi.size(); ++i)
      out << s.start_step + static_cast<int>(i) << ',' << num(s.t[i]) << ',' << num(s.psi[i]) << '\n';
    if (!out) throw std::runtime_error("failed writing " + p.string());
    written.push_back(p);
  }
  return written;
}

EpisodeLog replay_log(const Config& config, const EpisodeLog& logged) {
  EpisodeSettings s = base_episode_settings(config);
  s.episode.social_style = logged.social_style;
  s.episode.social_start_dist = logged.social_start_dist;
  s.episode.ego_start_dist = logged.ego_start_dist;
  s.episode.rng_seed = logged.seed;
  s.episode.time_limit = logged.time_limit;
  s.social_pred_steps = logged.social_pred_steps;
  if (logged.step_dt != s.episode.step_dt) throw ConfigError("log step_dt differs from the config's control rate");
  std::vector<std::size_t> actions;
  const auto& h = s.actions.horizons_s;
  for (const StepRecord& r : logged.steps) {
    const auto it = std::find(h.begin(), h.end(), r.action_horizon_s);
    if (it == h.end()) throw ConfigError("log uses a horizon outside the configured action set");
    actions.push_back(static_cast<std::size_t>(it - h.begin()));
  }
  ScriptedController controller(std::move(actions));
  EpisodeLog replayed = run_closed_loop(build_map(config.scenario), s, controller);
  replayed.controller = logged.controller;
  replayed.setting = logged.setting;
  return replayed;
}

EvalRun evaluate(const Config& config, const NetworkParams<float>* params, int workers) {
  const CorridorMap map = build_map(config.scenario);
  std::vector<ControllerSpec> controllers;
  if (params != nullptr) controllers.push_back(ControllerSpec::adaptive());
  for (std::size_t a = 0; a < config.actions.size(); ++a) controllers.push_back(ControllerSpec::fixed(config.actions, a));

  EvalRun run;
  for (const ControllerSpec& c : controllers) {
    for (const ExperimentSetting* setting : {&config.eval.push, &config.eval.yield}) {
      std::vector<EpisodeLog> logs(static_cast<std::size_t>(setting->episodes));
      parallel_for(logs.size(), workers, [&](std::size_t i) {
        logs[i] = run_episode(config, map, c, *setting, eval_seed(config.master_seed, *setting, static_cast<int>(i)),
                              params);
      });
      run.summaries.push_back(aggregate(logs));
      run.logs.push_back(std::move(logs));
    }
  }
  return run;
}

}  // namespace negoplan
