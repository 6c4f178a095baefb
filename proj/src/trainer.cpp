#include "negoplan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "negoplan/config.hpp"
#include "negoplan/parallel.hpp"
#include "negoplan/policy.hpp"
#include "negoplan/seed.hpp"

namespace negoplan {

void CurriculumPhase::validate(double max_dist) const {
  for (const DistanceRange* r : {&conservative_range, &aggressive_range})
    if (!(r->min >= 0.0 && r->min <= r->max && r->max <= max_dist))
      throw std::invalid_argument("start range is empty or off the map");
  if (!(style_mix >= 0.0 && style_mix <= 1.0)) throw std::invalid_argument("style_mix outside [0, 1]");
  if (iterations <= 0) throw std::invalid_argument("iterations must be positive");
}

std::vector<CurriculumPhase> default_curriculum() {
  const CurriculumPhase first{{20.0, 24.0}, {10.0, 12.0}, 0.5, 150};
  const CurriculumPhase last{{11.99, 14.02}, {16.33, 18.80}, 0.5, 200};
  auto mid = [](double a, double b) { return 0.5 * (a + b); };
  const CurriculumPhase middle{{mid(first.conservative_range.min, last.conservative_range.min),
                                mid(first.conservative_range.max, last.conservative_range.max)},
                               {mid(first.aggressive_range.min, last.aggressive_range.min),
                                mid(first.aggressive_range.max, last.aggressive_range.max)},
                               0.5,
                               150};
  return {first, middle, last};
}

std::vector<TaskSpec> sample_tasks(const CurriculumPhase& phase, int count, std::mt19937_64& rng) {
  if (count <= 0) throw std::invalid_argument("sample_tasks: count must be positive");
  std::vector<TaskSpec> tasks;
  tasks.reserve(static_cast<std::size_t>(count));
  std::bernoulli_distribution aggressive(phase.style_mix);
  for (int i = 0; i < count; ++i) {
    TaskSpec t;
    t.social_style = aggressive(rng) ? DrivingStyle::aggressive : DrivingStyle::conservative;
    const DistanceRange& r =
        t.social_style == DrivingStyle::aggressive ? phase.aggressive_range : phase.conservative_range;
    t.social_start_dist = r.min == r.max ? r.min : std::uniform_real_distribution<double>(r.min, r.max)(rng);
    if (!r.contains(t.social_start_dist)) throw std::logic_error("sampled start outside its range");
    t.seed = rng();
    tasks.push_back(t);
  }
  return tasks;
}

int TrainerSettings::total_iterations() const {
  int n = 0;
  for (const CurriculumPhase& p : phases) n += p.iterations;
  return n;
}

int TrainerSettings::phase_of(int iteration) const {
  int end = 0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    end += phases[i].iterations;
    if (iteration < end) return static_cast<int>(i);
  }
  throw std::out_of_range("iteration beyond the curriculum");
}

std::size_t RolloutSet::transitions() const {
  std::size_t n = 0;
  for (const RolloutBatch& b : segments) n += b.size();
  return n;
}

EpisodeSettings task_episode_settings(const Config& config, const TaskSpec& task) {
  EpisodeSettings s = base_episode_settings(config);
  s.episode.social_style = task.social_style;
  s.episode.social_start_dist = task.social_start_dist;
  s.episode.rng_seed = task.seed;
  s.social_pred_steps = config.social_horizon_steps(task.social_style);
  return s;
}

std::vector<RolloutBatch> segment_episode(const DecisionTrace& trace, int segment_length, std::size_t task) {
  const std::size_t n = trace.actions.size();
  if (segment_length <= 0) throw std::invalid_argument("segment length must be positive");
  if (n == 0 || trace.rewards.size() != n || trace.done.size() != n || !trace.done.back())
    throw std::invalid_argument("segment_episode: trace is not one complete episode");
  std::vector<RolloutBatch> out;
  const auto len = static_cast<std::size_t>(segment_length);
  for (std::size_t a = 0; a < n; a += len) {
    const std::size_t b = std::min(n, a + len);
    RolloutBatch seg;
    seg.task = task;
    seg.observations.assign(trace.observations.begin() + a, trace.observations.begin() + b);
    seg.actions.assign(trace.actions.begin() + a, trace.actions.begin() + b);
    seg.rewards.assign(trace.rewards.begin() + a, trace.rewards.begin() + b);
    seg.values.assign(trace.values.begin() + a, trace.values.begin() + b);
    seg.log_probs.assign(trace.log_probs.begin() + a, trace.log_probs.begin() + b);
    seg.done.assign(trace.done.begin() + a, trace.done.begin() + b);
    seg.bootstrap_value = b < n ? trace.values[b] : 0.0;
    out.push_back(std::move(seg));
  }
  return out;
}

namespace {

struct TaskRollouts {
  std::vector<RolloutBatch> segments;
  std::vector<EpisodeResult> episodes;
};

TaskRollouts run_task(const Config& config, const CorridorMap& map, const NetworkParams<float>& params,
                      const TaskSpec& task, std::size_t task_index, int stride, int episodes, bool greedy) {
  TaskRollouts out;
  const EpisodeSettings settings = task_episode_settings(config, task);
  for (int e = static_cast<int>(task_index); e < episodes; e += stride) {
    PolicyController controller(params, greedy, derive_seed(task.seed, {tag(StreamTag::actions),
                                                                        static_cast<std::uint64_t>(e)}),
                                true);
    const EpisodeLog log = run_closed_loop(map, settings, controller);
    for (RolloutBatch& seg : segment_episode(controller.trace(), config.train.segment_length, task_index))
      out.segments.push_back(std::move(seg));
    out.episodes.push_back({task_index, log.total_reward(), log.final.label(), static_cast<int>(log.steps.size())});
  }
  return out;
}

}  // namespace

RolloutSet collect_rollouts(const Config& config, const CorridorMap& map, const NetworkParams<float>& params,
                            const std::vector<TaskSpec>& tasks, int episodes, bool greedy, int workers) {
  if (tasks.empty() || episodes <= 0) throw std::invalid_argument("collect_rollouts: need tasks and episodes");
  std::vector<TaskRollouts> per_task(tasks.size());
  const int stride = static_cast<int>(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    per_task[i] = run_task(config, map, params, tasks[i], i, stride, episodes, greedy);
  });

  RolloutSet set;
  for (TaskRollouts& t : per_task) {
    for (RolloutBatch& s : t.segments) set.segments.push_back(std::move(s));
    for (EpisodeResult& e : t.episodes) set.episodes.push_back(e);
  }
  return set;
}

UpdateReport update_parameters(NetworkParams<float>& params, AdamState<float>& adam, const RolloutSet& rollouts,
                               const TrainerSettings& settings, std::uint64_t shuffle_seed) {
  struct Sample {
    const Observation* obs;
    int action;
    double ret;
    double adv;
  };
  std::vector<Sample> samples;
  samples.reserve(rollouts.transitions());
  for (const RolloutBatch& seg : rollouts.segments) {
    const std::vector<double> ret = k_step_returns(seg.rewards, seg.bootstrap_value, settings.gamma, seg.done);
    const std::vector<double> adv = advantages(ret, seg.values);
    for (std::size_t i = 0; i < seg.size(); ++i) samples.push_back({&seg.observations[i], seg.actions[i], ret[i], adv[i]});
  }
  if (samples.empty()) throw std::invalid_argument("update_parameters: no transitions");
  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(samples.begin(), samples.end(), rng);

  UpdateReport report;
  NetworkParams<float> grad = NetworkParams<float>::zeros();
  ForwardCache<float> cache;
  const std::size_t m = static_cast<std::size_t>(settings.minibatch);
  const std::size_t chunk = static_cast<std::size_t>(settings.chunk);
  std::vector<const Observation*> obs;
  std::vector<int> actions;
  std::vector<double> ret, adv;
  for (std::size_t start = 0; start < samples.size(); start += m) {
    const std::size_t end = std::min(samples.size(), start + m);
    const double n = static_cast<double>(end - start);
    grad.set_zero();
    LossReport batch;
    for (std::size_t c = start; c < end; c += chunk) {
      const std::size_t ce = std::min(end, c + chunk);
      obs.clear();
      actions.clear();
      ret.clear();
      adv.clear();
      for (std::size_t i = c; i < ce; ++i) {
        obs.push_back(samples[i].obs);
        actions.push_back(samples[i].action);
        ret.push_back(samples[i].ret);
        adv.push_back(samples[i].adv);
      }
      const Eigen::MatrixXf input = pack_inputs<float>(obs);
      const LossReport r = accumulate_losses(params, input, actions, ret, adv, n, settings.loss, &grad, cache);
      batch.policy_loss += r.policy_loss;
      batch.value_loss += r.value_loss;
      batch.entropy += r.entropy;
      batch.total += r.total;
    }
    if (!std::isfinite(batch.total) || !grad.all_finite())
      throw NonFiniteError("non-finite loss or gradient during update");
    apply_update(params, grad, adam, settings.adam);
    if (!params.all_finite()) throw NonFiniteError("non-finite parameters after update");
    const double w = n / static_cast<double>(samples.size());
    report.policy_loss += w * batch.policy_loss;
    report.value_loss += w * batch.value_loss;
    report.entropy += w * batch.entropy;
    ++report.gradient_steps;
  }
  return report;
}

std::string format_log_row(const TrainLogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f", r.iteration, r.phase,
                r.mean_return, r.policy_loss, r.value_loss, r.entropy, r.collision_rate, r.timeout_rate,
                r.wall_time_s);
  return buf;
}

std::vector<TrainLogRow> read_train_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read training log " + path.string());
  std::vector<TrainLogRow> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (++n == 1 || line.empty()) continue;
    std::istringstream ls(line);
    TrainLogRow r;
    char c = 0;
    if (!(ls >> r.iteration >> c >> r.phase >> c >> r.mean_return >> c >> r.policy_loss >> c >> r.value_loss >> c >>
          r.entropy >> c >> r.collision_rate >> c >> r.timeout_rate >> c >> r.wall_time_s))
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": malformed log row");
    rows.push_back(r);
  }
  return rows;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, int iteration) {
  char name[64];
  std::snprintf(name, sizeof name, "iter_%06d.ckpt", iteration);
  return out_dir / "checkpoints" / name;
}

TrainResult train(const Config& config, const TrainOptions& options) {
  config.validate();
  const TrainerSettings& ts = config.train;
  const CorridorMap map = build_map(config.scenario);
  std::filesystem::create_directories(options.out_dir / "checkpoints");
  const std::filesystem::path log_path = options.out_dir / "train_log.csv";

  Checkpoint state;
  TrainResult result;
  if (options.resume_from) {
    state = load_checkpoint(*options.resume_from);
    if (state.iteration > ts.total_iterations()) throw std::invalid_argument("checkpoint is past the curriculum");
    if (std::filesystem::exists(log_path))
      for (const TrainLogRow& r : read_train_log(log_path))
        if (r.iteration <= state.iteration) result.log.push_back(r);
  } else {
    state.params = NetworkParams<float>::initialized(derive_seed(config.master_seed, {tag(StreamTag::init)}));
  }
  {
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write " + log_path.string());
    log << kTrainLogHeader << '\n';
    for (const TrainLogRow& r : result.log) log << format_log_row(r) << '\n';
  }
  std::ofstream log(log_path, std::ios::app);

  std::vector<int> phase_ends;
  for (int end = 0; const CurriculumPhase& p : ts.phases) phase_ends.push_back(end += p.iterations);
  auto is_phase_end = [&](int it) { return std::find(phase_ends.begin(), phase_ends.end(), it) != phase_ends.end(); };

  int stop = ts.total_iterations();
  if (options.max_iterations > 0) stop = std::min(stop, static_cast<int>(state.iteration) + options.max_iterations);
  for (int it = static_cast<int>(state.iteration); it < stop; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const int phase = ts.phase_of(it);
    const auto uit = static_cast<std::uint64_t>(it);
    std::mt19937_64 task_rng(derive_seed(config.master_seed, {tag(StreamTag::tasks), uit}));
    const std::vector<TaskSpec> tasks =
        sample_tasks(ts.phases[static_cast<std::size_t>(phase)], ts.tasks_per_iteration, task_rng);
    const RolloutSet rollouts =
        collect_rollouts(config, map, state.params, tasks, ts.trajectories_per_iteration, false, options.workers);
    const UpdateReport upd = update_parameters(state.params, state.adam, rollouts, ts,
                                               derive_seed(config.master_seed, {tag(StreamTag::shuffle), uit}));

    TrainLogRow row;
    row.iteration = it + 1;
    row.phase = phase + 1;
    double total = 0.0;
    int collisions = 0, timeouts = 0;
    for (const EpisodeResult& e : rollouts.episodes) {
      total += e.total_reward;
      collisions += e.outcome == "collision";
      timeouts += e.outcome == "timeout";
    }
    const double n = static_cast<double>(rollouts.episodes.size());
    row.mean_return = total / n;
    row.policy_loss = upd.policy_loss;
    row.value_loss = upd.value_loss;
    row.entropy = upd.entropy;
    row.collision_rate = collisions / n;
    row.timeout_rate = timeouts / n;
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    state.iteration = it + 1;
    const std::filesystem::path ckpt = checkpoint_path(options.out_dir, it + 1);
    save_checkpoint(state, ckpt);
    result.final_checkpoint = ckpt;
    const int stale = it + 1 - ts.keep_checkpoints;
    if (stale >= 1 && !is_phase_end(stale)) std::filesystem::remove(checkpoint_path(options.out_dir, stale));

    log << format_log_row(row) << '\n' << std::flush;
    result.log.push_back(row);
    if (options.on_iteration) options.on_iteration(row);
  }
  if (result.final_checkpoint.empty() && state.iteration > 0)
    result.final_checkpoint = checkpoint_path(options.out_dir, static_cast<int>(state.iteration));
  result.artifacts.push_back(log_path);
  for (const auto& entry : std::filesystem::directory_iterator(options.out_dir / "checkpoints"))
    if (entry.path().extension() == ".ckpt") result.artifacts.push_back(entry.path());
  std::sort(result.artifacts.begin(), result.artifacts.end());
  return result;
}

}  // namespace negoplan
