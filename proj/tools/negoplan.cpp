#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "negoplan/config.hpp"
#include "negoplan/eval.hpp"
#include "negoplan/policy.hpp"
#include "negoplan/rl.hpp"
#include "negoplan/selftest.hpp"
#include "negoplan/trainer.hpp"

namespace fs = std::filesystem;
using namespace negoplan;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string mode;
  fs::path config_path;
  fs::path checkpoint_path;
  fs::path output_dir;
  fs::path log_path;
  std::optional<std::uint64_t> master_seed;
  std::optional<int> workers;
  std::vector<std::string> overrides;
};

Config effective_config(const RunConfig& run) {
  std::vector<std::string> overrides = run.overrides;
  if (run.master_seed) overrides.push_back("run.master_seed=" + std::to_string(*run.master_seed));
  if (run.workers) overrides.push_back("run.workers=" + std::to_string(*run.workers));
  return load_config(run.config_path, overrides);
}

fs::path require_out(const RunConfig& run) {
  if (run.output_dir.empty()) throw UsageError("--out is required for mode " + run.mode);
  fs::create_directories(run.output_dir);
  return run.output_dir;
}

void write_manifest(const fs::path& out, const RunConfig& run, const Config& config,
                    const std::vector<fs::path>& artifacts) {
  std::ofstream m(out / "manifest.txt");
  m << "mode = " << run.mode << '\n' << "config_hash = " << config_hash(config) << '\n';
  m << "master_seed = " << config.master_seed << '\n';
  for (const fs::path& a : artifacts) m << "artifact = " << fs::relative(a, out).generic_string() << '\n';
  if (!m) throw std::runtime_error("cannot write manifest in " + out.string());
}

fs::path write_effective_config(const fs::path& out, const Config& config) {
  const fs::path p = out / "config.txt";
  std::ofstream f(p);
  f << serialize(config);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return p;
}

int run_train(const RunConfig& run) {
  const Config config = effective_config(run);
  const fs::path out = require_out(run);
  std::vector<fs::path> artifacts{write_effective_config(out, config)};
  TrainOptions opt;
  opt.out_dir = out;
  opt.workers = config.workers;
  if (!run.checkpoint_path.empty()) opt.resume_from = run.checkpoint_path;
  const int total = config.train.total_iterations();
  opt.on_iteration = [total](const TrainLogRow& r) {
    std::fprintf(stderr, "iter %d/%d phase %d return %.3f col %.2f to %.2f entropy %.3f (%.1fs)\n", r.iteration,
                 total, r.phase, r.mean_return, r.collision_rate, r.timeout_rate, r.entropy, r.wall_time_s);
  };
  const TrainResult result = train(config, opt);
  artifacts.insert(artifacts.end(), result.artifacts.begin(), result.artifacts.end());
  write_manifest(out, run, config, artifacts);
  std::cout << "final checkpoint " << result.final_checkpoint.string() << '\n';
  return kOk;
}

int run_eval(const RunConfig& run) {
  const Config config = effective_config(run);
  const fs::path out = require_out(run);
  std::vector<fs::path> artifacts{write_effective_config(out, config)};
  std::optional<NetworkParams<float>> params;
  if (!run.checkpoint_path.empty()) params = load_checkpoint(run.checkpoint_path).params;
  const EvalRun result = evaluate(config, params ? &*params : nullptr, config.workers);

  std::vector<std::pair<std::string, BehaviorIndexSeries>> series;
  fs::create_directories(out / "episodes");
  std::ofstream behavior(out / "behavior.csv");
  behavior << "controller,setting,episode,outcome,start_step,pattern\n";
  for (const auto& logs : result.logs) {
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const EpisodeLog& log = logs[i];
      const std::string stem = log.controller + "_" + log.setting + "_" + std::to_string(i);
      const fs::path episode = out / "episodes" / (stem + ".csv");
      write_episode_csv(log, episode);
      artifacts.push_back(episode);
      BehaviorIndexSeries s = behavior_index(log);
      const std::string pattern = s.psi.empty() ? "unperceived" : to_string(sign_pattern(s.psi));
      behavior << log.controller << ',' << log.setting << ',' << i << ',' << log.final.label() << ','
               << s.start_step << ',' << pattern << '\n';
      if (!s.psi.empty()) series.emplace_back(stem, std::move(s));
    }
  }
  behavior.close();
  artifacts.push_back(out / "behavior.csv");
  const std::vector<fs::path> report = export_report(result.summaries, series, out);
  artifacts.insert(artifacts.end(), report.begin(), report.end());
  write_manifest(out, run, config, artifacts);
  for (const Summary& s : result.summaries)
    std::printf("%-10s %-6s reward %8.3f drive %6.2fs success %.2f collision %.2f timeout %.2f\n",
                s.controller.c_str(), s.setting.c_str(), s.reward.mean, s.drive_time.mean, s.success_rate,
                s.collision_rate, s.timeout_rate);
  return kOk;
}

int run_replay(const RunConfig& run) {
  if (run.log_path.empty()) throw UsageError("--log is required for mode replay");
  const Config config = effective_config(run);
  const EpisodeLog logged = read_episode_csv(run.log_path);
  const EpisodeLog replayed = replay_log(config, logged);
  std::string why;
  if (!logs_match(logged, replayed, &why)) {
    std::cout << "mismatch: " << why << '\n';
    return kValidation;
  }
  std::cout << "match (" << replayed.steps.size() << " steps, " << replayed.final.label() << ")\n";
  return kOk;
}

int run_gradcheck(const RunConfig& run) {
  const std::uint64_t seed = run.master_seed.value_or(0);
  constexpr double kTolerance = 1e-4;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const GradientCheckResult r = random_gradient_check(seed + k, 2, GradientCheckOptions{});
    const GradientCheckEntry& e = r.worst();
    std::printf("seed %llu: %zu coordinates, max relative error %.3e (%s)\n",
                static_cast<unsigned long long>(seed + k), r.entries.size(), r.max_rel_error, e.tensor.c_str());
    worst = std::max(worst, r.max_rel_error);
  }
  std::printf("max relative error %.3e (tolerance %.0e)\n", worst, kTolerance);
  return worst < kTolerance ? kOk : kValidation;
}

int run_selftest_mode() {
  int failed = 0;
  for (const OracleCheck& c : run_selftest()) {
    std::printf("%s %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                c.detail.c_str());
    failed += !c.passed;
  }
  std::printf("%d failed\n", failed);
  return failed == 0 ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-horizon negotiation planner: training, evaluation and validation"};
  RunConfig run;
  std::uint64_t seed = 0;
  int workers = 1;
  app.add_option("--mode", run.mode, "What to run")
      ->required()
      ->check(CLI::IsMember({"train", "eval", "replay", "gradcheck", "selftest"}));
  app.add_option("--config", run.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--checkpoint", run.checkpoint_path, "Checkpoint to evaluate or resume from")
      ->check(CLI::ExistingFile);
  app.add_option("--out", run.output_dir, "Output directory");
  app.add_option("--log", run.log_path, "Episode log to replay")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides run.master_seed)");
  app.add_option("--set", run.overrides, "key=value override, repeatable")->take_all();
  auto* workers_opt = app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (seed_opt->count() > 0) run.master_seed = seed;
  if (workers_opt->count() > 0) run.workers = workers;

  try {
    if (run.mode == "train") return run_train(run);
    if (run.mode == "eval") return run_eval(run);
    if (run.mode == "replay") return run_replay(run);
    if (run.mode == "gradcheck") return run_gradcheck(run);
    return run_selftest_mode();
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return kUsage;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kRuntime;
  }
}
