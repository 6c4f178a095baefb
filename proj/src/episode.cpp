#include "negoplan/episode.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace negoplan {

int ActionSpec::steps(std::size_t action, double step_dt) const {
  if (action >= horizons_s.size()) throw std::out_of_range("action index out of range");
  return static_cast<int>(std::lround(horizons_s[action] / step_dt));
}

void ActionSpec::validate() const {
  if (horizons_s.empty()) throw std::invalid_argument("action set is empty");
  for (std::size_t i = 0; i < horizons_s.size(); ++i) {
    if (horizons_s[i] < 0) throw std::invalid_argument("negative horizon in action set");
    if (i > 0 && !(horizons_s[i] > horizons_s[i - 1]))
      throw std::invalid_argument("action horizons must be strictly increasing");
  }
}

int style_horizon_steps(DrivingStyle style, double conservative_s, double aggressive_s, double step_dt) {
  const double h = style == DrivingStyle::aggressive ? aggressive_s : conservative_s;
  return static_cast<int>(std::lround(h / step_dt));
}

double EpisodeLog::total_reward() const {
  double total = 0.0;
  for (const StepRecord& r : steps) total += r.reward;
  return total;
}

std::vector<double> EpisodeLog::ego_speeds() const {
  std::vector<double> v;
  v.reserve(steps.size() + 1);
  v.push_back(initial.ego.pose.speed);
  for (const StepRecord& r : steps) v.push_back(r.ego.speed);
  return v;
}

int suspend_count(const EpisodeLog& log, double threshold) { return suspend_count(log.ego_speeds(), threshold); }

namespace {

WorldSnapshot snapshot_of(const WorldState& w) { return {w.t, w.social.pose.footprint(), true}; }

// Plan used for a parked vehicle; step() ignores it.
CandidateTrajectory parked_plan() { return {}; }

}  // namespace

EpisodeLog run_closed_loop(const CorridorMap& map, const EpisodeSettings& settings, EgoController& controller) {
  const EpisodeConfig& cfg = settings.episode;
  if (std::abs(cfg.step_dt - settings.planner.step_dt) > 1e-12)
    throw std::invalid_argument("planner and episode step_dt differ");

  EpisodeLog log;
  log.seed = cfg.rng_seed;
  log.social_style = cfg.social_style;
  log.ego_start_dist = cfg.ego_start_dist;
  log.social_pred_steps = settings.social_pred_steps;
  log.step_dt = cfg.step_dt;
  log.time_limit = cfg.time_limit;

  WorldState world = reset(cfg, map);
  log.initial = world;
  log.social_start_dist = world.social_start_dist;

  std::vector<WorldSnapshot> history{snapshot_of(world)};
  const int max_steps = cfg.max_steps();
  log.steps.reserve(static_cast<std::size_t>(max_steps));
  while (true) {
    OgmStack stack;
    const bool want_obs = controller.needs_observation();
    if (want_obs) stack = build_stack(history, map.static_obstacles, world.ego.pose, settings.ogm);
    const std::size_t action = controller.act({world, want_obs ? &stack : nullptr});
    const int ego_steps = settings.actions.steps(action, cfg.step_dt);

    const CandidateTrajectory ego_plan =
        world.ego.reached ? parked_plan() : plan(ego_scene(world, map), ego_steps, settings.planner);
    const CandidateTrajectory social_plan = world.social.reached
                                                ? parked_plan()
                                                : plan(social_scene(world, map), settings.social_pred_steps,
                                                       settings.planner);
    auto [next, outcome] = step(world, ego_plan, social_plan, cfg, map);
    world = next;
    history.push_back(snapshot_of(world));

    StepRecord rec;
    rec.step = world.step;
    rec.t = world.t;
    rec.ego = world.ego.pose;
    rec.social = world.social.pose;
    rec.ego_travel = world.ego.travel();
    rec.social_travel = world.social.travel();
    rec.action = action;
    rec.action_horizon_s = settings.actions.horizons_s[action];
    rec.reward = outcome.reward;
    rec.outcome = outcome.label();
    rec.social_visible = within_window(world.social.pose.footprint(), world.ego.pose, settings.ogm.resolution);
    rec.ego_fallback = ego_plan.fallback;
    log.steps.push_back(rec);
    controller.observe(outcome);
    if (outcome.terminal()) {
      log.final = outcome;
      break;
    }
  }
  return log;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

void write_episode_csv(const EpisodeLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write episode log " + path.string());
  out << "# seed=" << log.seed << '\n'
      << "# controller=" << log.controller << '\n'
      << "# setting=" << log.setting << '\n'
      << "# social_style=" << to_string(log.social_style) << '\n'
      << "# ego_start_dist=" << fmt(log.ego_start_dist) << '\n'
      << "# social_start_dist=" << fmt(log.social_start_dist) << '\n'
      << "# social_pred_steps=" << log.social_pred_steps << '\n'
      << "# step_dt=" << fmt(log.step_dt) << '\n'
      << "# time_limit=" << fmt(log.time_limit) << '\n';
  out << "step,t,ego_x,ego_y,ego_speed,social_x,social_y,social_speed,action_horizon_s,reward,outcome\n";
  for (const StepRecord& r : log.steps) {
    out << r.step << ',' << fmt(r.t) << ',' << fmt(r.ego.x) << ',' << fmt(r.ego.y) << ',' << fmt(r.ego.speed)
        << ',' << fmt(r.social.x) << ',' << fmt(r.social.y) << ',' << fmt(r.social.speed) << ','
        << fmt(r.action_horizon_s) << ',' << fmt(r.reward) << ',' << r.outcome << '\n';
  }
  if (!out) throw std::runtime_error("failed writing episode log " + path.string());
}

EpisodeLog read_episode_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read episode log " + path.string());
  EpisodeLog log;
  std::map<std::string, std::string> meta;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 11)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 11 columns");
    StepRecord r;
    r.step = std::stoi(f[0]);
    r.t = std::stod(f[1]);
    r.ego.x = std::stod(f[2]);
    r.ego.y = std::stod(f[3]);
    r.ego.speed = std::stod(f[4]);
    r.social.x = std::stod(f[5]);
    r.social.y = std::stod(f[6]);
    r.social.speed = std::stod(f[7]);
    r.action_horizon_s = std::stod(f[8]);
    r.reward = std::stod(f[9]);
    r.outcome = f[10];
    log.steps.push_back(r);
  }
  auto get = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error(path.string() + ": missing '" + key + "' in preamble");
    return it->second;
  };
  log.seed = std::stoull(get("seed"));
  log.controller = get("controller");
  log.setting = get("setting");
  log.social_style = parse_style(get("social_style"));
  log.ego_start_dist = std::stod(get("ego_start_dist"));
  log.social_start_dist = std::stod(get("social_start_dist"));
  log.social_pred_steps = std::stoi(get("social_pred_steps"));
  log.step_dt = std::stod(get("step_dt"));
  log.time_limit = std::stod(get("time_limit"));
  return log;
}

bool logs_match(const EpisodeLog& a, const EpisodeLog& b, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.steps.size() != b.steps.size())
    return fail("step count " + std::to_string(a.steps.size()) + " vs " + std::to_string(b.steps.size()));
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const StepRecord& x = a.steps[i];
    const StepRecord& y = b.steps[i];
    const bool same = x.step == y.step && x.t == y.t && x.ego.x == y.ego.x && x.ego.y == y.ego.y &&
                      x.ego.speed == y.ego.speed && x.social.x == y.social.x && x.social.y == y.social.y &&
                      x.social.speed == y.social.speed && x.action_horizon_s == y.action_horizon_s &&
                      x.reward == y.reward && x.outcome == y.outcome;
    if (!same) return fail("first mismatch at step " + std::to_string(x.step));
  }
  return true;
}

}  // namespace negoplan
