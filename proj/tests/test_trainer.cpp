#include <doctest.h>

#include <filesystem>
#include <random>
#include <cstring>
#include <set>

#include "negoplan/config.hpp"
#include "negoplan/policy.hpp"
#include "negoplan/trainer.hpp"

using namespace negoplan;

namespace {

// Four short iterations over three phases.
Config tiny_config() {
  Config c;
  c.episode.time_limit = 4.0;
  c.train.tasks_per_iteration = 2;
  c.train.trajectories_per_iteration = 3;
  c.train.segment_length = 8;
  c.train.minibatch = 16;
  c.train.chunk = 8;
  c.train.keep_checkpoints = 1;
  c.train.phases[0].iterations = 2;
  c.train.phases[1].iterations = 1;
  c.train.phases[2].iterations = 1;
  c.planner.grids.lateral_offsets = {-0.5, 0.0, 0.5};
  c.master_seed = 7;
  return c;
}

std::filesystem::path fresh_dir(const char* name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("default curriculum narrows toward the evaluation ranges") {
  const auto phases = default_curriculum();
  REQUIRE(phases.size() == 3);
  CHECK(phases[0].conservative_range.min == 20.0);
  CHECK(phases[0].aggressive_range.max == 12.0);
  CHECK(phases[2].conservative_range.min == 11.99);
  CHECK(phases[2].aggressive_range.max == 18.80);
  CHECK(phases[1].conservative_range.min == doctest::Approx(0.5 * (20.0 + 11.99)));
  CHECK(phases[1].aggressive_range.max == doctest::Approx(0.5 * (12.0 + 18.80)));
  for (const auto& p : phases) CHECK_NOTHROW(p.validate(40.0));
  CurriculumPhase bad = phases[0];
  bad.style_mix = 1.5;
  CHECK_THROWS_AS(bad.validate(40.0), std::invalid_argument);
  bad = phases[0];
  bad.conservative_range.max = 45.0;
  CHECK_THROWS_AS(bad.validate(40.0), std::invalid_argument);
}

TEST_CASE("phase lookup follows the iteration budget") {
  TrainerSettings s;
  CHECK(s.total_iterations() == 500);
  CHECK(s.phase_of(0) == 0);
  CHECK(s.phase_of(149) == 0);
  CHECK(s.phase_of(150) == 1);
  CHECK(s.phase_of(300) == 2);
  CHECK(s.phase_of(499) == 2);
  CHECK_THROWS_AS(s.phase_of(500), std::out_of_range);
}

TEST_CASE("sampled tasks stay in range and mix styles at the requested rate") {
  const CurriculumPhase phase = default_curriculum()[0];
  std::mt19937_64 rng(1);
  int aggressive = 0;
  const int n = 4000;
  std::set<std::uint64_t> seeds;
  for (const TaskSpec& t : sample_tasks(phase, n, rng)) {
    const DistanceRange& r =
        t.social_style == DrivingStyle::aggressive ? phase.aggressive_range : phase.conservative_range;
    CHECK(r.contains(t.social_start_dist));
    aggressive += t.social_style == DrivingStyle::aggressive;
    seeds.insert(t.seed);
  }
  // Binomial(4000, 0.5): five standard deviations is about 158.
  CHECK(std::abs(aggressive - n / 2) < 158);
  CHECK(seeds.size() == static_cast<std::size_t>(n));
  CurriculumPhase pure = phase;
  pure.style_mix = 0.0;
  for (const TaskSpec& t : sample_tasks(pure, 50, rng)) CHECK(t.social_style == DrivingStyle::conservative);
  CHECK_THROWS_AS(sample_tasks(phase, 0, rng), std::invalid_argument);
}

TEST_CASE("episodes are cut into bootstrapped segments") {
  DecisionTrace t;
  for (int i = 0; i < 20; ++i) {
    t.observations.emplace_back(1, static_cast<std::uint8_t>(i));
    t.actions.push_back(i % 4);
    t.values.push_back(0.1 * i);
    t.log_probs.push_back(-1.0);
    t.rewards.push_back(kStepPenalty);
    t.done.push_back(i == 19);
  }
  const auto segs = segment_episode(t, 8, 3);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].size() == 8);
  CHECK(segs[2].size() == 4);
  CHECK(segs[0].bootstrap_value == doctest::Approx(0.8));
  CHECK(segs[1].bootstrap_value == doctest::Approx(1.6));
  CHECK(segs[2].bootstrap_value == 0.0);
  CHECK(segs[1].actions.front() == 8 % 4);
  CHECK(segs[2].task == 3);
  t.done.back() = 0;
  CHECK_THROWS_AS(segment_episode(t, 8, 0), std::invalid_argument);
}

TEST_CASE("rollouts split episodes round-robin and do not depend on worker count") {
  const Config c = tiny_config();
  const CorridorMap map = build_map(c.scenario);
  const NetworkParams<float> params = NetworkParams<float>::initialized(1);
  std::mt19937_64 rng(2);
  const auto tasks = sample_tasks(c.train.phases[0], 2, rng);
  const RolloutSet one = collect_rollouts(c, map, params, tasks, 5, false, 1);
  const RolloutSet two = collect_rollouts(c, map, params, tasks, 5, false, 2);
  REQUIRE(one.episodes.size() == 5);
  CHECK(std::count_if(one.episodes.begin(), one.episodes.end(), [](const EpisodeResult& e) { return e.task == 0; }) ==
        3);
  REQUIRE(one.segments.size() == two.segments.size());
  for (std::size_t i = 0; i < one.segments.size(); ++i) {
    CHECK(one.segments[i].actions == two.segments[i].actions);
    CHECK(one.segments[i].rewards == two.segments[i].rewards);
  }
  for (const RolloutBatch& b : one.segments) {
    CHECK(b.size() <= 8);
    for (double r : b.rewards) CHECK((r == kStepPenalty || r == kCollisionPenalty || r == kArrivalReward));
  }
  CHECK(one.transitions() > 0);
}

TEST_CASE("an update takes one step per minibatch and changes the parameters") {
  const Config c = tiny_config();
  const CorridorMap map = build_map(c.scenario);
  NetworkParams<float> params = NetworkParams<float>::initialized(1);
  const NetworkParams<float> before = params;
  std::mt19937_64 rng(2);
  const auto tasks = sample_tasks(c.train.phases[0], 2, rng);
  const RolloutSet r = collect_rollouts(c, map, params, tasks, 2, false, 1);
  AdamState<float> adam;
  const UpdateReport u = update_parameters(params, adam, r, c.train, 5);
  const int expected = static_cast<int>((r.transitions() + 15) / 16);
  CHECK(u.gradient_steps == expected);
  CHECK(adam.step == expected);
  CHECK(u.entropy > 0.0);
  CHECK(u.entropy <= std::log(4.0) + 1e-9);
  CHECK(params.v3_b != before.v3_b);
  CHECK_THROWS_AS(update_parameters(params, adam, RolloutSet{}, c.train, 5), std::invalid_argument);
}

TEST_CASE("training writes logs and checkpoints and resumes bit-identically") {
  const Config c = tiny_config();
  const auto full = fresh_dir("negoplan_train_full");
  TrainOptions opt;
  opt.out_dir = full;
  int callbacks = 0;
  opt.on_iteration = [&](const TrainLogRow&) { ++callbacks; };
  const TrainResult a = train(c, opt);
  CHECK(callbacks == 4);
  REQUIRE(a.log.size() == 4);
  CHECK(a.log[0].phase == 1);
  CHECK(a.log[2].phase == 2);
  CHECK(a.log[3].phase == 3);
  // Most recent plus phase ends survive pruning.
  CHECK_FALSE(std::filesystem::exists(checkpoint_path(full, 1)));
  CHECK(std::filesystem::exists(checkpoint_path(full, 2)));
  CHECK(std::filesystem::exists(checkpoint_path(full, 3)));
  CHECK(std::filesystem::exists(checkpoint_path(full, 4)));
  CHECK(a.final_checkpoint == checkpoint_path(full, 4));
  const auto rows = read_train_log(full / "train_log.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].mean_return == a.log[1].mean_return);
  CHECK(rows[3].entropy == a.log[3].entropy);

  // Rerun from scratch gives the same numbers.
  const auto rerun = fresh_dir("negoplan_train_rerun");
  opt.out_dir = rerun;
  opt.on_iteration = nullptr;
  opt.workers = 2;
  const TrainResult b = train(c, opt);
  const Checkpoint fa = load_checkpoint(a.final_checkpoint);
  const Checkpoint fb = load_checkpoint(b.final_checkpoint);
  CHECK(fa.params.fc_w == fb.params.fc_w);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.log[i].policy_loss == b.log[i].policy_loss);

  // Resume from a copy of the iteration-2 checkpoint and the full log.
  opt.workers = 1;
  const auto resume_copy = fresh_dir("negoplan_train_resume");
  std::filesystem::create_directories(resume_copy / "checkpoints");
  std::filesystem::copy(checkpoint_path(full, 2), checkpoint_path(resume_copy, 2));
  std::filesystem::copy(full / "train_log.csv", resume_copy / "train_log.csv");
  opt.out_dir = resume_copy;
  opt.resume_from = checkpoint_path(resume_copy, 2);
  const TrainResult r = train(c, opt);
  REQUIRE(r.log.size() == 4);
  const Checkpoint fr = load_checkpoint(r.final_checkpoint);
  CHECK(fr.iteration == 4);
  CHECK(fr.adam.step == fa.adam.step);
  CHECK(fr.params.fc_w == fa.params.fc_w);
  CHECK(fr.adam.v.pi3_w == fa.adam.v.pi3_w);
  CHECK(r.log[3].mean_return == a.log[3].mean_return);
  CHECK(read_train_log(resume_copy / "train_log.csv").size() == 4);

  for (const auto& d : {full, rerun, resume_copy}) std::filesystem::remove_all(d);
}

TEST_CASE("log rows format with full precision") {
  TrainLogRow r;
  r.iteration = 3;
  r.phase = 1;
  r.mean_return = 0.1;
  r.wall_time_s = 1.23456;
  const std::string s = format_log_row(r);
  CHECK(s.rfind("3,1,0.10000000000000001,", 0) == 0);
  CHECK(s.substr(s.size() - 6) == ",1.235");
  CHECK(std::count(s.begin(), s.end(), ',') == std::count(kTrainLogHeader, kTrainLogHeader + std::strlen(kTrainLogHeader), ','));
}
