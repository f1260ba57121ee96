#include "impulse/rng.hpp"
#include "impulse/simulate.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace impulse;
using impulse::test::control;
using impulse::test::vec1;

namespace {

ProblemSpec still_spec(double horizon = 1.0) {
  test::ScalarParams p;
  p.sigma = 0.0;
  p.horizon = horizon;
  return test::scalar_spec(p);
}

// Plain reimplementation of X_{k+1} = X_k + (a X_k - k_p X_{k-d}) dt + sigma dB_k
// with zero history, reading the same Brownian increments.
std::vector<double> reference_path(double a, double kp, double sigma, std::size_t d,
                                   std::size_t n, const Eigen::MatrixXd& dB, double dt) {
  std::vector<double> x(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double delayed = k >= d ? x[k - d] : 0.0;
    x[k + 1] = x[k] + (a * x[k] - kp * delayed) * dt + sigma * dB(static_cast<Eigen::Index>(k), 0);
  }
  return x;
}

double sup_fourth(const Trajectory& tr) {
  double s = 0.0;
  for (const auto& v : tr.values) s = std::max(s, std::pow(std::abs(v[0]), 4));
  return s;
}

}  // namespace

TEST_CASE("NoiseDraw::discrete: node values with the law's frequencies") {
  const DiscreteNoise law{{-1.0, 0.0, 2.0}, {0.25, 0.5, 0.25}};
  std::vector<double> count(3, 0.0);
  const std::size_t n = 20000;
  for (std::uint64_t path = 0; path < n / 4; ++path) {
    const auto d = NoiseDraw::discrete(5, path, 4, 1, 0.5, law);
    CHECK(d.increments == NoiseDraw::discrete(5, path, 4, 1, 0.5, law).increments);
    for (Eigen::Index k = 0; k < 4; ++k) {
      const double z = d.increments(k, 0);
      const auto j = std::find(law.increments.begin(), law.increments.end(), z);
      REQUIRE(j != law.increments.end());
      count[static_cast<std::size_t>(j - law.increments.begin())] += 1.0;
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    const double p = law.weights[j];
    CHECK(std::abs(count[j] / n - p) <= 4.0 * std::sqrt(p * (1 - p) / n));
  }
  CHECK_THROWS_AS(NoiseDraw::discrete(5, 0, 4, 1, 0.5, DiscreteNoise{{1.0}, {}}), ValidationError);
}

TEST_CASE("simulate_controlled: no coefficients, no impulses stays at zero") {
  const auto spec = still_spec();
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto tr = simulate_controlled(spec, ImpulseControl{}, NoiseDraw::gaussian(1, 0, 2, 1, 0.5), grid);
  for (const auto& v : tr.values) CHECK(v[0] == 0.0);
}

TEST_CASE("simulate_controlled: deterministic jump at t = 0.5") {
  const auto spec = still_spec();
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto tr = simulate_controlled(spec, control({{0.5, 1.0}}), NoiseDraw::gaussian(1, 0, 2, 1, 0.5), grid);
  REQUIRE(tr.values.size() == 3);
  CHECK(tr.values[0][0] == 0.0);
  CHECK(tr.values[1][0] == 1.0);  // post-impulse value at the jump time
  CHECK(tr.values[2][0] == 1.0);
  REQUIRE(tr.impulses.size() == 1);
  CHECK(tr.impulses[0].pre[0] == 0.0);
  CHECK(tr.impulses[0].post[0] == 1.0);
  CHECK(tr.impulses[0].grid_index == 1);
}

TEST_CASE("simulate_controlled: feedback example matches a direct recursion") {
  const auto spec = test::scalar_spec(test::feedback_params(0.05));
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  for (std::uint64_t path = 0; path < 20; ++path) {
    const auto noise = NoiseDraw::gaussian(20240601, path, grid.n_steps, 1, grid.dt);
    const auto tr = simulate_controlled(spec, ImpulseControl{}, noise, grid);
    const auto ref = reference_path(1.0, 1.0, 1.0, 5, 100, noise.increments, 0.01);
    for (std::size_t k = 0; k <= 100; ++k) CHECK(std::abs(tr.values[k][0] - ref[k]) <= 1e-12);
  }
}

TEST_CASE("simulate_controlled: off-grid controls and overflow are reported") {
  const auto spec = test::scalar_spec(test::ScalarParams{});
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto noise = NoiseDraw::gaussian(1, 0, 2, 1, 0.5);
  CHECK_THROWS_AS(simulate_controlled(spec, control({{0.3, 1.0}}), noise, grid), ValidationError);
  CHECK_THROWS_AS(simulate_controlled(spec, control({{0.5, 1.5}}), noise, grid), ValidationError);
  CHECK_THROWS_AS(simulate_controlled(spec, ImpulseControl{}, NoiseDraw::gaussian(1, 0, 3, 1, 0.5), grid),
                  ValidationError);

  test::ScalarParams wild;
  wild.a = 1e4;
  wild.dt = 0.01;
  const auto blow = test::scalar_spec(wild);
  const auto fine = TimeGrid::make(1.0, 0.0, 0.01);
  try {
    simulate_controlled(blow, ImpulseControl{}, NoiseDraw::gaussian(1, 0, 100, 1, 0.01), fine);
    FAIL("expected overflow");
  } catch (const RuntimeFailure& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
  try {
    estimate_J(blow, ImpulseControl{}, 4, 1, fine);
    FAIL("expected overflow");
  } catch (const RuntimeFailure& e) {
    CHECK(std::string(e.what()).find("path 0") != std::string::npos);
  }
}

TEST_CASE("simulate_controlled: several events at one time apply in order") {
  const auto spec = still_spec();
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto tr = simulate_controlled(spec, control({{0.5, 1.0}, {0.5, -0.25}}),
                                      NoiseDraw::gaussian(1, 0, 2, 1, 0.5), grid);
  REQUIRE(tr.impulses.size() == 2);
  CHECK(tr.impulses[1].pre[0] == 1.0);
  CHECK(tr.values[1][0] == 0.75);
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
  const auto spec = test::scalar_spec(test::feedback_params(0.05));
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  const auto ctrl = control({{0.1, 1.0}, {0.37, -2.0}, {0.9, 0.5}});
  for (std::uint64_t path = 0; path < 10; ++path) {
    const auto a = simulate_controlled(spec, ctrl, NoiseDraw::gaussian(4, path, 100, 1, 0.01), grid);
    const auto b = simulate_controlled(spec, ctrl, NoiseDraw::gaussian(4, path, 100, 1, 0.01), grid);
    CHECK(a.values == b.values);
    REQUIRE(a.impulses.size() == b.impulses.size());
    for (std::size_t i = 0; i < a.impulses.size(); ++i) CHECK(a.impulses[i].post == b.impulses[i].post);
  }
  // Draws depend only on (seed, path, step), not on how many were generated.
  const auto long_draw = NoiseDraw::gaussian(4, 3, 100, 1, 0.01);
  const auto short_draw = NoiseDraw::gaussian(4, 3, 10, 1, 0.01);
  CHECK(long_draw.increments.topRows(10) == short_draw.increments);
}

TEST_CASE("jump consistency: post equals Gamma(pre, u) at every event") {
  auto p = test::feedback_params(0.05);
  p.clamp = 1.5;
  const auto spec = test::scalar_spec(p);
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> step(0, 99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> steps(6);
    for (auto& s : steps) s = step(rng);
    std::sort(steps.begin(), steps.end());
    std::vector<ImpulseEvent> ev;
    for (int s : steps) ev.push_back({s * 0.01, vec1(u(rng))});
    const ImpulseControl ctrl(ev);
    const auto tr = simulate_controlled(spec, ctrl, NoiseDraw::gaussian(2, trial, 100, 1, 0.01), grid);
    CHECK(tr.impulses.size() == 6);
    for (const auto& rec : tr.impulses) CHECK(rec.post == spec.intervention(rec.pre, rec.impulse));
  }
}

TEST_CASE("estimate_J: deterministic zero path has zero mean and error") {
  const auto spec = still_spec();
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto est = estimate_J(spec, NoIntervention{}, 50, 1, grid);
  CHECK(est.mean == 0.0);
  CHECK(est.std_error == 0.0);
  CHECK_THROWS_AS(estimate_J(spec, NoIntervention{}, 1, 1, grid), ValidationError);
}

TEST_CASE("estimate_J: fixed control on the two-step instance matches the branch average") {
  // Linear dynamics and a quadratic payoff: the Gaussian expectation equals the
  // two-point average, -0.5 E(z1-1)^2 - E(z1-1+z2)^2 - 0.2 = -2.95.
  const auto spec = test::scalar_spec(test::ScalarParams{});
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto est = estimate_J(spec, control({{0.5, -1.0}}), 20000, 123, grid);
  CHECK(std::abs(est.mean - (-2.95)) <= 3.0 * est.std_error);
}

TEST_CASE("estimate_J: no-intervention estimates agree across seeds") {
  const auto spec = test::scalar_spec(test::feedback_params(0.05));
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  const auto a = estimate_J(spec, NoIntervention{}, 10000, 20240601, grid);
  const auto b = estimate_J(spec, NoIntervention{}, 10000, 777, grid);
  CHECK(a.mean != b.mean);
  CHECK(std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("flow probe: identical pairs give exactly zero") {
  const auto spec = test::scalar_spec(test::feedback_params(0.05));
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  const TimedImpulse pair{0.3, vec1(1.0)};
  const auto est = flow_stability_probe(spec, ImpulseControl{}, pair, pair, control({{0.6, -1.0}}),
                                        100, 3, grid);
  CHECK(est.mean == 0.0);
}

TEST_CASE("flow probe: deterministic additive jumps give |u - u^|^6") {
  const auto spec = still_spec();
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  for (double uh : {-1.0, -0.25, 0.5}) {
    const auto est = flow_stability_probe(spec, ImpulseControl{}, {0.5, vec1(1.0)}, {0.5, vec1(uh)},
                                          ImpulseControl{}, 10, 1, grid);
    CHECK(est.mean == doctest::Approx(std::pow(1.0 - uh, 6)).epsilon(1e-14));
    CHECK(est.std_error == 0.0);
  }
}

TEST_CASE("flow probe: halving the perturbation does not raise the moment") {
  const auto spec = test::scalar_spec(test::feedback_params(0.05));
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  const std::vector<std::pair<double, double>> offsets = {{0.24, 0.32}, {0.12, 0.16}, {0.06, 0.08}, {0.03, 0.04}};
  std::vector<MonteCarloEstimate> est;
  for (const auto& [dt_off, du] : offsets) {
    est.push_back(flow_stability_probe(spec, ImpulseControl{}, {0.3, vec1(1.0)},
                                       {0.3 + dt_off, vec1(1.0 + du)}, ImpulseControl{}, 2000, 42, grid));
  }
  for (std::size_t i = 1; i < est.size(); ++i) {
    CHECK(est[i].mean <= est[i - 1].mean + 3.0 * std::hypot(est[i].std_error, est[i - 1].std_error));
  }
}

TEST_CASE("moment boundedness over random controls with clamped jumps") {
  auto p = test::feedback_params(0.05);
  p.clamp = 2.0;
  const auto spec = test::scalar_spec(p);
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  const std::size_t n_paths = 200;
  auto moment = [&](const ImpulseControl& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      s += sup_fourth(simulate_controlled(spec, c, NoiseDraw::gaussian(31, i, 100, 1, 0.01), grid));
    }
    return s / static_cast<double>(n_paths);
  };
  const double baseline = moment(ImpulseControl{});
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(1, 30), step(0, 99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> steps(static_cast<std::size_t>(count(rng)));
    for (auto& s : steps) s = step(rng);
    std::sort(steps.begin(), steps.end());
    std::vector<ImpulseEvent> ev;
    for (int s : steps) ev.push_back({s * 0.01, vec1(u(rng))});
    worst = std::max(worst, moment(ImpulseControl(ev)));
  }
  CHECK(std::isfinite(worst));
  CHECK(worst < 10.0 * baseline);
}

TEST_CASE("write_trajectory_csv: columns and impulse markers") {
  const auto spec = still_spec();
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto tr = simulate_controlled(spec, control({{0.5, 1.0}, {0.5, -0.5}}),
                                      NoiseDraw::gaussian(1, 0, 2, 1, 0.5), grid);
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  CHECK(out.str() ==
        "time,value_1,impulse_flag,impulse_value\n"
        "0,0,0,\n"
        "0.5,0.5,2,1;-0.5\n"
        "1,0.5,0,\n");
  std::ostringstream with_id;
  write_trajectory_csv(with_id, tr, 1, false, 3);
  CHECK(with_id.str().rfind("3,0,0,0,\n", 0) == 0);
}
