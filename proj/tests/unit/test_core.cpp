#include "impulse/assumptions.hpp"
#include "impulse/core.hpp"
#include "impulse/problem_config.hpp"
#include "impulse/simulate.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace impulse;
using impulse::test::control;
using impulse::test::vec1;

namespace {

std::vector<std::pair<double, double>> flat(const ImpulseControl& c) {
  std::vector<std::pair<double, double>> out;
  for (const auto& e : c.events()) out.emplace_back(e.time, e.impulse[0]);
  return out;
}

// Random control with grid-aligned, nondecreasing times in [0, T].
ImpulseControl random_control(std::mt19937_64& rng, double dt, std::size_t n_steps, double u_bound,
                              std::size_t max_events, bool include_horizon = true) {
  std::uniform_int_distribution<std::size_t> count(0, max_events);
  std::uniform_int_distribution<std::size_t> step(0, include_horizon ? n_steps : n_steps - 1);
  std::uniform_real_distribution<double> u(-u_bound, u_bound);
  std::vector<std::size_t> steps(count(rng));
  for (auto& s : steps) s = step(rng);
  std::sort(steps.begin(), steps.end());
  std::vector<ImpulseEvent> events;
  for (auto s : steps) events.push_back({static_cast<double>(s) * dt, vec1(u(rng))});
  return ImpulseControl(std::move(events));
}

Trajectory sub_trajectory(const Trajectory& tr, std::size_t from, std::size_t to) {
  Trajectory out;
  out.dt = tr.dt;
  out.grid_times.assign(tr.grid_times.begin() + from, tr.grid_times.begin() + to + 1);
  out.values.assign(tr.values.begin() + from, tr.values.begin() + to + 1);
  for (const auto& rec : tr.impulses) {
    if (rec.grid_index >= from && rec.grid_index < to) {
      auto r = rec;
      r.grid_index -= from;
      out.impulses.push_back(r);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("compose_controls: empty prefix is the identity") {
  const auto c = compose_controls(ImpulseControl{}, control({{0.2, -1.0}}), 1.0);
  CHECK(flat(c) == std::vector<std::pair<double, double>>{{0.2, -1.0}});
}

TEST_CASE("compose_controls: second control is floored at the last kept time") {
  const auto c = compose_controls(control({{0.3, 1.0}}), control({{0.2, -1.0}}), 1.0);
  CHECK(flat(c) == std::vector<std::pair<double, double>>{{0.3, 1.0}, {0.3, -1.0}});
}

TEST_CASE("compose_controls: events of the prefix at the horizon are dropped") {
  const auto c = compose_controls(control({{1.0, 0.5}}), control({{0.4, 2.0}}), 1.0);
  CHECK(flat(c) == std::vector<std::pair<double, double>>{{0.4, 2.0}});
}

TEST_CASE("compose_controls: rejects decreasing times and impulses outside U") {
  CHECK_THROWS_AS(control({{0.5, 0.0}, {0.2, 0.0}}), ValidationError);
  ImpulseBox box{vec1(-1.0), vec1(1.0)};
  CHECK_THROWS_AS(compose_controls(control({{0.1, 3.0}}), ImpulseControl{}, 1.0, box),
                  ValidationError);
  CHECK_THROWS_AS(compose_controls(ImpulseControl{}, control({{0.1, -1.5}}), 1.0, box),
                  ValidationError);
  CHECK_NOTHROW(compose_controls(control({{0.1, 1.0}}), control({{0.0, -1.0}}), 1.0, box));
}

TEST_CASE("compose_controls: associative on random triples") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_control(rng, 0.1, 10, 2.0, 4);
    const auto b = random_control(rng, 0.1, 10, 2.0, 4);
    const auto c = random_control(rng, 0.1, 10, 2.0, 4);
    const auto left = compose_controls(compose_controls(a, b, 1.0), c, 1.0);
    const auto right = compose_controls(a, compose_controls(b, c, 1.0), 1.0);
    // Associativity holds when no composed event lands on the horizon; the
    // drop rule makes the outer operation see a different prefix otherwise.
    bool touches_horizon = false;
    for (const auto& e : compose_controls(a, b, 1.0).events()) {
      if (!before_horizon(e.time, 1.0)) touches_horizon = true;
    }
    for (const auto& e : b.events()) {
      if (!before_horizon(e.time, 1.0)) touches_horizon = true;
    }
    if (touches_horizon) continue;
    CHECK(flat(left) == flat(right));
  }
}

TEST_CASE("compose_controls: result times are nondecreasing") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = compose_controls(random_control(rng, 0.1, 10, 1.0, 5),
                                    random_control(rng, 0.1, 10, 1.0, 5), 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c.events()[i].time >= c.events()[i - 1].time);
  }
}

TEST_CASE("total_payoff: zero path") {
  test::ScalarParams p;
  p.sigma = 0.0;
  const auto spec = test::scalar_spec(p);
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto noise = NoiseDraw::from_increments(Eigen::MatrixXd::Zero(2, 1), 0.5);
  const auto tr = simulate_controlled(spec, ImpulseControl{}, noise, grid);
  CHECK(total_payoff(spec, tr, ImpulseControl{}) == 0.0);
}

TEST_CASE("total_payoff: constant unit path over two steps") {
  test::ScalarParams p;
  p.sigma = 0.0;
  p.x0 = 1.0;
  const auto spec = test::scalar_spec(p);
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto noise = NoiseDraw::from_increments(Eigen::MatrixXd::Zero(2, 1), 0.5);
  const auto tr = simulate_controlled(spec, ImpulseControl{}, noise, grid);
  CHECK(total_payoff(spec, tr, ImpulseControl{}) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("total_payoff: small tree instance with one impulse, per branch by hand") {
  // X_0 = 0, no drift, unit noise, dt = 0.5, impulse -1 at t = 0.5.
  const auto spec = test::scalar_spec(test::ScalarParams{});
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto ctrl = control({{0.5, -1.0}});
  const double s = std::sqrt(0.5);
  double expectation = 0.0;
  for (double z1 : {-s, s}) {
    for (double z2 : {-s, s}) {
      Eigen::MatrixXd inc(2, 1);
      inc << z1, z2;
      const auto tr = simulate_controlled(spec, ctrl, NoiseDraw::from_increments(inc, 0.5), grid);
      const double x1 = z1 - 1.0;
      const double x2 = x1 + z2;
      const double hand = -(0.0 * 0.0) * 0.5 - x1 * x1 * 0.5 - x2 * x2 - (0.1 + 0.1 * 1.0);
      CHECK(total_payoff(spec, tr, ctrl) == doctest::Approx(hand).epsilon(1e-14));
      expectation += 0.25 * hand;
    }
  }
  // E: -0.5 E(z1-1)^2 - E(z1-1+z2)^2 - 0.2 = -0.75 - 2.0 - 0.2
  CHECK(expectation == doctest::Approx(-2.95).epsilon(1e-14));
}

TEST_CASE("total_payoff: mismatch between trajectory and control is an error") {
  const auto spec = test::scalar_spec(test::ScalarParams{});
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto noise = NoiseDraw::gaussian(1, 0, 2, 1, 0.5);
  const auto tr = simulate_controlled(spec, control({{0.5, -1.0}}), noise, grid);
  CHECK_THROWS_AS(total_payoff(spec, tr, ImpulseControl{}), ValidationError);
  CHECK_THROWS_AS(total_payoff(spec, tr, control({{0.5, 1.0}})), ValidationError);
  CHECK_THROWS_AS(total_payoff(spec, tr, control({{0.0, -1.0}})), ValidationError);
}

TEST_CASE("total_payoff: additive across a split at an impulse-free time") {
  auto p = test::feedback_params();
  p.dt = 0.05;
  p.delay = 0.1;
  const auto spec = test::scalar_spec(p);
  const auto grid = TimeGrid::make(1.0, 0.1, 0.05);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ctrl = random_control(rng, grid.dt, grid.n_steps, 2.0, 4, false);
    const auto tr = simulate_controlled(spec, ctrl, NoiseDraw::gaussian(5, trial, grid.n_steps, 1, grid.dt), grid);
    std::uniform_int_distribution<std::size_t> pick(1, grid.n_steps - 1);
    const std::size_t j = pick(rng);
    bool free = true;
    for (const auto& rec : tr.impulses) free = free && rec.grid_index != j;
    if (!free) continue;
    const auto left = sub_trajectory(tr, 0, j);
    const auto right = sub_trajectory(tr, j, grid.n_steps);
    const double whole = total_payoff(spec, tr, ctrl);
    const double split = total_payoff(spec, left, realized_control(left)) +
                         total_payoff(spec, right, realized_control(right)) -
                         spec.terminal_reward(tr.values[j]);
    CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  }
}

TEST_CASE("total_payoff: each neutral impulse lowers the payoff by at least K6") {
  const auto spec = test::scalar_spec(test::feedback_params(0.05));
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const auto noise = NoiseDraw::gaussian(9, trial, grid.n_steps, 1, grid.dt);
    const auto base = random_control(rng, grid.dt, grid.n_steps, 2.0, 3, false);
    std::uniform_int_distribution<std::size_t> pick(0, grid.n_steps - 1);
    const double t = static_cast<double>(pick(rng)) * grid.dt;
    std::vector<ImpulseEvent> events = base.events();
    auto pos = std::upper_bound(events.begin(), events.end(), t,
                                [](double v, const ImpulseEvent& e) { return v < e.time; });
    events.insert(pos, ImpulseEvent{t, vec1(0.0)});
    const ImpulseControl extended(events);
    const double j0 = total_payoff(spec, simulate_controlled(spec, base, noise, grid), base);
    const double j1 = total_payoff(spec, simulate_controlled(spec, extended, noise, grid), extended);
    CHECK(j0 - j1 >= spec.cost_floor);
    CHECK(j0 - j1 == doctest::Approx(0.1).epsilon(1e-9));
  }
}

TEST_CASE("events at or after the horizon are inert") {
  const auto spec = test::scalar_spec(test::ScalarParams{});
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto noise = NoiseDraw::gaussian(3, 0, 2, 1, 0.5);
  const auto plain = simulate_controlled(spec, ImpulseControl{}, noise, grid);
  const auto ctrl = control({{1.0, 1.0}});
  const auto late = simulate_controlled(spec, ctrl, noise, grid);
  CHECK(late.values == plain.values);
  CHECK(late.impulses.empty());
  CHECK(total_payoff(spec, late, ctrl) == total_payoff(spec, plain, ImpulseControl{}));
}

TEST_CASE("ProblemSpec::validate rejects malformed specs") {
  auto spec = test::scalar_spec(test::ScalarParams{});
  CHECK_NOTHROW(spec.validate());
  auto bad = spec;
  bad.horizon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = spec;
  bad.cost_floor = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = spec;
  bad.impulse_set.lower = vec1(2.0);
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = spec;
  bad.drift = nullptr;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("check_assumptions: clamped jumps satisfy the growth bound") {
  auto p = test::feedback_params();
  p.clamp = 5.0;
  const auto spec = test::scalar_spec(p);
  AssumptionOptions opt;
  opt.growth_constant = 7.0;
  opt.sample_budget = 20000;
  const auto report = check_assumptions(spec, opt);
  const auto& growth = report.at("jump_growth");
  CHECK(growth.passed);
  CHECK(growth.statistic <= 0.0);
  // Dense sweep: |clamp(x+u)| - max(7, |x|) never exceeds 0.
  double worst = -1e300;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 40; ++j) {
      const double x = -20.0 + 0.1 * i, u = -2.0 + 0.1 * j;
      worst = std::max(worst, std::abs(spec.intervention(vec1(x), vec1(u))[0]) -
                                  std::max(7.0, std::abs(x)));
    }
  }
  CHECK(worst <= 0.0);
}

TEST_CASE("check_assumptions: zero impulse cost fails the floor with a witness") {
  auto p = test::feedback_params();
  p.cost_fixed = 0.0;
  p.cost_quadratic = 0.0;
  const auto report = check_assumptions(test::scalar_spec(p), AssumptionOptions{});
  const auto& floor = report.at("cost_floor");
  CHECK_FALSE(floor.passed);
  CHECK_FALSE(floor.witness.empty());
  CHECK_FALSE(report.passed());
}

TEST_CASE("check_assumptions: feedback example cost clears K6 = 0.05") {
  const auto spec = test::scalar_spec(test::feedback_params());
  AssumptionOptions opt;
  opt.advisory = {"jump_growth"};
  const auto report = check_assumptions(spec, opt);
  CHECK(report.at("cost_floor").passed);
  CHECK(report.at("cost_floor").statistic >= 0.1 - 1e-12);
  // Additive jumps break the growth bound; it is reported, not enforced.
  CHECK_FALSE(report.at("jump_growth").passed);
  CHECK(report.at("jump_growth").advisory);
  CHECK(report.passed());
}

TEST_CASE("check_assumptions is deterministic in its seed") {
  const auto spec = test::scalar_spec(test::feedback_params());
  AssumptionOptions opt;
  opt.sample_budget = 500;
  const auto a = check_assumptions(spec, opt);
  const auto b = check_assumptions(spec, opt);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].statistic == b.checks[i].statistic);
    CHECK(a.checks[i].witness == b.checks[i].witness);
  }
}

TEST_CASE("problem config: registry functions match hand-written coefficients") {
  const nlohmann::json j = {
      {"horizon", 1.0},
      {"delay", 0.05},
      {"drift", {{"kind", "linear_delay_feedback"}, {"a", 1.0}, {"k_p", 1.0}}},
      {"diffusion", {{"kind", "constant"}, {"sigma", 1.0}}},
      {"intervention", {{"kind", "additive"}}},
      {"running_reward", {{"kind", "quadratic"}, {"weight", -1.0}}},
      {"terminal_reward", {{"kind", "quadratic"}, {"weight", -1.0}}},
      {"impulse_cost", {{"kind", "quadratic"}, {"fixed", 0.1}, {"quadratic", 0.1}}},
      {"impulse_set", {{"lower", {-2.0}}, {"upper", {2.0}}}},
      {"initial_segment", {{"kind", "constant"}, {"value", {0.0}}}}};
  const auto spec = build_problem(problem_config_from_json(j), 0.01);
  const auto ref = test::scalar_spec(test::feedback_params());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const auto x = vec1(d(rng)), y = vec1(d(rng)), u = vec1(d(rng) / 1.5);
    const double t = std::abs(d(rng)) / 3.0;
    CHECK(spec.drift(t, x, y) == ref.drift(t, x, y));
    CHECK(spec.diffusion(t, x, y) == ref.diffusion(t, x, y));
    CHECK(spec.intervention(x, u) == ref.intervention(x, u));
    CHECK(spec.running_reward(t, x) == ref.running_reward(t, x));
    CHECK(spec.terminal_reward(x) == ref.terminal_reward(x));
    CHECK(spec.impulse_cost(x, u, t) == doctest::Approx(ref.impulse_cost(x, u, t)).epsilon(1e-15));
  }
  CHECK(spec.initial_segment.size() == 6);
}

TEST_CASE("problem config: unknown keys and bad kinds name the field") {
  nlohmann::json j = {
      {"horizon", 1.0},
      {"drift", {{"kind", "linear_delay_feedback"}, {"a", 1.0}, {"k_p", 1.0}, {"kp", 2.0}}},
      {"diffusion", {{"kind", "constant"}, {"sigma", 1.0}}},
      {"intervention", {{"kind", "additive"}}},
      {"running_reward", {{"kind", "zero"}}},
      {"terminal_reward", {{"kind", "zero"}}},
      {"impulse_cost", {{"kind", "quadratic"}, {"fixed", 0.1}}},
      {"impulse_set", {{"lower", {-1.0}}, {"upper", {1.0}}}},
      {"initial_segment", {{"kind", "constant"}, {"value", {0.0}}}}};
  try {
    problem_config_from_json(j);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "problem.drift.kp");
  }
  j["drift"] = {{"kind", "cubic"}};
  try {
    problem_config_from_json(j);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "problem.drift.kind");
  }
}
