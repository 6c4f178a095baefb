#include "negoplan/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "negoplan/eval.hpp"
#include "negoplan/planner.hpp"
#include "negoplan/rl.hpp"
#include "negoplan/trainer.hpp"
#include "negoplan/world.hpp"

namespace negoplan {

namespace {

std::string show(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

OracleCheck near(std::string name, double got, double want, double tol) {
  return {std::move(name), std::abs(got - want) <= tol, "got " + show(got) + ", want " + show(want)};
}

OracleCheck truth(std::string name, bool ok, std::string detail = {}) { return {std::move(name), ok, std::move(detail)}; }

EpisodeLog log_with_rewards(const std::vector<double>& rewards, StepOutcome final) {
  EpisodeLog log;
  log.time_limit = 40.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    StepRecord r;
    r.step = static_cast<int>(i) + 1;
    r.t = 0.2 * r.step;
    r.reward = rewards[i];
    log.steps.push_back(r);
  }
  log.final = final;
  return log;
}

}  // namespace

std::vector<OracleCheck> run_selftest() {
  std::vector<OracleCheck> out;

  {
    bool ok = true;
    try {
      build_map(ScenarioParams{});
    } catch (const std::exception&) {
      ok = false;
    }
    out.push_back(truth("map: 3.0 m free width admits one 1.8 m vehicle", ok));
    ScenarioParams wide;
    wide.free_width = 4.0;
    bool rejected = false;
    try {
      build_map(wide);
    } catch (const InvalidGeometry&) {
      rejected = true;
    }
    out.push_back(truth("map: 4.0 m free width rejected as two-abreast", rejected));
  }
  out.push_back(truth("collision: rectangles touching at an edge intersect",
                      check_collision({{0, 0}, 0, 4.6, 1.8}, {{4.6, 0}, 0, 4.6, 1.8})));
  out.push_back(near("suspend count of [1,1,0,0,1,0,1]", suspend_count({1, 1, 0, 0, 1, 0, 1}), 2, 0));
  {
    const auto seg = quintic_connect<double>({0, 0, 0}, {1, 0, 0}, 1.0);
    out.push_back(near("quintic rest-to-rest midpoint", seg.value(0.5), 0.5, 1e-12));
  }
  {
    PlannerSettings s;
    s.reference_speed = 2.0;
    s.grids = {{-1.0, 0.0, 1.0}, {0.0, 1.0}, {3.0, 6.0}};
    const ReferencePath path({{0.0, 0.0}, {100.0, 0.0}});
    const auto c = sample_candidates(FrenetState{}, path, 4.6, 1.8, 0.0, s);
    out.push_back(near("candidate count for a 3x2x2 grid", static_cast<double>(c.size()), 12, 0));
  }
  {
    const std::array<double, 4> z{1, 0, 0, 0};
    const auto p = action_distribution(std::span<const double, 4>(z));
    // Closed form e / (e + 3); the quoted five digits are truncated, not rounded.
    const double e = std::exp(1.0);
    out.push_back(near("softmax of [1,0,0,0], first entry", p[0], e / (e + 3.0), 1e-12));
    out.push_back(near("softmax of [1,0,0,0], other entries", p[1], 1.0 / (e + 3.0), 1e-12));
    out.push_back(truth("softmax of [1,0,0,0] matches 0.47536 / 0.17488 to five digits",
                        std::abs(p[0] - 0.47536) < 1e-5 && std::abs(p[1] - 0.17488) < 1e-5));
  }
  {
    const std::vector<double> r{-0.25, -0.25, 10.0};
    const std::vector<std::uint8_t> done{0, 0, 1};
    out.push_back(near("three-step terminal return", k_step_returns(r, 0.0, 0.99, done)[0], 9.3035, 1e-12));
    const std::vector<double> r1{-0.25};
    const std::vector<std::uint8_t> open{0};
    const double ret = k_step_returns(r1, 2.0, 0.99, open)[0];
    out.push_back(near("one-step bootstrapped return", ret, 1.73, 1e-12));
    out.push_back(near("one-step advantage", advantages(std::vector<double>{ret}, std::vector<double>{1.0})[0], 0.73,
                       1e-12));
    const std::vector<double> r10{10.0};
    const std::vector<std::uint8_t> term{1};
    const double rt = k_step_returns(r10, 123.0, 0.99, term)[0];
    out.push_back(near("terminal advantage", advantages(std::vector<double>{rt}, std::vector<double>{9.0})[0], 1.0,
                       1e-12));
  }
  {
    NetworkParams<double> w = NetworkParams<double>::zeros();
    NetworkParams<double> g = NetworkParams<double>::zeros();
    g.pi3_b(0) = 1.0;
    AdamState<double> st;
    apply_update(w, g, st, AdamSettings{});
    out.push_back(near("first Adam step on a unit gradient", w.pi3_b(0), -1e-4 / (1.0 + 1e-8), 1e-15));
  }
  {
    const GradientCheckResult ok = random_gradient_check(0, 2, GradientCheckOptions{});
    out.push_back(truth("gradient check below 1e-4", ok.max_rel_error < 1e-4, show(ok.max_rel_error)));
    GradientCheckOptions bad;
    bad.corrupt_tensor = "conv2_w";
    const GradientCheckResult caught = random_gradient_check(0, 2, bad);
    out.push_back(truth("gradient check flags a corrupted conv2 gradient", caught.max_rel_error > 1e-2,
                        show(caught.max_rel_error)));
  }
  {
    CurriculumPhase even{{10, 12}, {16, 18}, 0.5, 1};
    std::mt19937_64 rng(7);
    int aggressive = 0;
    for (const TaskSpec& t : sample_tasks(even, 1000, rng)) aggressive += t.social_style == DrivingStyle::aggressive;
    out.push_back(truth("aggressive share of 1000 even tasks within 3 sigma", aggressive >= 450 && aggressive <= 550,
                        std::to_string(aggressive)));
    out.push_back(near("default curriculum has three phases", static_cast<double>(default_curriculum().size()), 3, 0));
  }
  out.push_back(near("behavior index for 1 m lead at equal distances", behavior_index_value(1, 0, 10, 10),
                     0.785398163397, 1e-9));
  out.push_back(near("behavior index for 2 m lag at 13.35/17.5", behavior_index_value(0, 2, 13.35, 17.5), -1.2064,
                     5e-4));
  {
    StepOutcome success;
    success.both_reached = true;
    StepOutcome crash;
    crash.collided = true;
    const Summary s = aggregate({log_with_rewards({-0.25, -0.25, 10.0}, success), log_with_rewards({-0.25, -5.0}, crash)});
    out.push_back(near("mean reward of a success and a collision", s.reward.mean, (9.5 - 5.25) / 2.0, 1e-12));
  }
  return out;
}

}  // namespace negoplan
