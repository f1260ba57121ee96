#include "impulse/lattice.hpp"
#include "impulse/rng.hpp"
#include "impulse/simulate.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace impulse;
using impulse::test::vec1;

namespace {

AugmentedState lags(std::initializer_list<double> v) {
  LagVector l(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) l[i++] = x;
  return AugmentedState(l);
}

}  // namespace

TEST_CASE("augment_history: no delay gives the current value only") {
  const auto spec = test::scalar_spec(test::ScalarParams{});
  const auto grid = TimeGrid::make(1.0, 0.0, 0.5);
  const auto tr = simulate_controlled(spec, ImpulseControl{}, NoiseDraw::gaussian(1, 0, 2, 1, 0.5), grid);
  for (std::size_t k = 0; k <= 2; ++k) {
    const auto s = augment_history(tr, k, 0);
    REQUIRE(s.dim() == 1);
    CHECK(s.head() == tr.values[k][0]);
  }
}

TEST_CASE("augment_history: zero initial segment fills the lags at time 0") {
  auto p = test::feedback_params(0.05);
  p.x0 = 0.0;
  const auto spec = test::scalar_spec(p);
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  const auto tr = simulate_controlled(spec, ImpulseControl{}, NoiseDraw::gaussian(1, 0, 100, 1, 0.01), grid);
  const auto s = augment_history(tr, 0, 5);
  CHECK(s == lags({0, 0, 0, 0, 0, 0}));
  // Later states read values in reverse time order.
  const auto s7 = augment_history(tr, 7, 5);
  for (int j = 0; j < 6; ++j) CHECK(s7.lags[j] == tr.values[7 - static_cast<std::size_t>(j)][0]);
  CHECK_THROWS_AS(augment_history(tr, 2, 9), ValidationError);
}

TEST_CASE("lifted dimension of delay 0.05 at dt 0.01 is 6") {
  const auto grid = TimeGrid::make(1.0, 0.05, 0.01);
  CHECK(grid.delay_steps == 5);
  CHECK(lifted_dimension(grid.delay_steps) == 6);
  CHECK(grid.n_steps == 100);
  CHECK_THROWS_AS(TimeGrid::make(1.0, 0.05, 0.03), ValidationError);
}

TEST_CASE("step_transition: zero coefficients shift the register") {
  test::ScalarParams p;
  p.sigma = 0.0;
  p.delay = 1.5;
  const auto spec = test::scalar_spec(p);
  const auto s = lags({3, 1, 4, 1});
  CHECK(step_transition(s, 0.0, 0.7, spec, 0.5) == lags({3, 3, 1, 4}));
}

TEST_CASE("step_transition: feedback drift arithmetic") {
  const auto spec = test::scalar_spec(test::feedback_params());
  const auto next = step_transition(lags({1, 0, 0, 0, 0, 2}), 0.0, 0.0, spec, 0.01);
  CHECK(next.head() == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(next == lags({next.head(), 1, 0, 0, 0, 0}));
}

TEST_CASE("step_transition: quadrature expectation agrees with Monte Carlo") {
  const auto spec = test::scalar_spec(test::feedback_params());
  const double dt = 0.01;
  const auto s = lags({0.8, 0.1, 0, 0, 0, -0.5});
  // A nonlinear functional of the next state.
  auto phi = [](const AugmentedState& n) { return std::exp(n.head()) + n.head() * n.head(); };
  const auto q = NoiseQuadrature::gauss_hermite(7, dt);
  double quad = 0.0;
  for (const auto& node : q.nodes) quad += node.weight * phi(step_transition(s, 0.0, node.increment, spec, dt));
  const CounterRng rng(99, kBrownianStream);
  std::vector<double> draws(100000);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    draws[i] = phi(step_transition(s, 0.0, std::sqrt(dt) * rng.normal(i, 0, 0), spec, dt));
  }
  const auto mc = summarize(draws);
  CHECK(std::abs(quad - mc.mean) <= 3.0 * mc.std_error);
}

TEST_CASE("impulse_transition: additive jump on the head only") {
  const auto spec = test::scalar_spec(test::feedback_params());
  const auto zero = AugmentedState::constant(6, 0.0);
  CHECK(impulse_transition(zero, vec1(2.0), spec) == lags({2, 0, 0, 0, 0, 0}));
  const auto s = lags({0.3, -1, 2, 0.5, 0, 1});
  CHECK(impulse_transition(s, vec1(0.0), spec) == s);
  const auto uv = impulse_transition(impulse_transition(s, vec1(1.25), spec), vec1(-0.5), spec);
  const double direct = spec.intervention(spec.intervention(vec1(0.3), vec1(1.25)), vec1(-0.5))[0];
  CHECK(uv.head() == direct);
  CHECK_THROWS_AS(impulse_transition(s, vec1(2.5), spec), ValidationError);
}

TEST_CASE("shift register is conserved by both transitions") {
  const auto spec = test::scalar_spec(test::feedback_params());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    LagVector l(6);
    for (int j = 0; j < 6; ++j) l[j] = d(rng);
    const AugmentedState s(l);
    const auto n = step_transition(s, 0.1, d(rng) * 0.1, spec, 0.01);
    for (int j = 1; j < 6; ++j) CHECK(n.lags[j] == s.lags[j - 1]);
    const auto i = impulse_transition(s, vec1(d(rng) / 1.5), spec);
    for (int j = 1; j < 6; ++j) CHECK(i.lags[j] == s.lags[j]);
  }
}

TEST_CASE("lifted chain follows simulated paths") {
  for (double delay : {0.0, 0.05}) {
    auto p = test::feedback_params(delay);
    const auto spec = test::scalar_spec(p);
    const auto grid = TimeGrid::make(1.0, delay, 0.01);
    for (std::uint64_t path = 0; path < 5; ++path) {
      const auto noise = NoiseDraw::gaussian(17, path, grid.n_steps, 1, grid.dt);
      const auto tr = simulate_controlled(spec, ImpulseControl{}, noise, grid);
      auto s = augment_history(tr, 0, grid.delay_steps);
      for (std::size_t k = 0; k < grid.n_steps; ++k) {
        s = step_transition(s, grid.time(static_cast<std::ptrdiff_t>(k)), noise.increments(static_cast<Eigen::Index>(k), 0), spec, grid.dt);
        CHECK(s == augment_history(tr, k + 1, grid.delay_steps));
      }
    }
  }
}

TEST_CASE("NoiseQuadrature: moment matching for every node count") {
  for (double dt : {0.01, 0.5, 2.0}) {
    for (int n = 2; n <= 15; ++n) {
      const auto q = NoiseQuadrature::gauss_hermite(n, dt);
      CHECK(q.nodes.size() == static_cast<std::size_t>(n));
      CHECK_NOTHROW(q.check_moments(dt));
    }
  }
  CHECK_THROWS_AS(NoiseQuadrature::gauss_hermite(1, 1.0), ValidationError);
  NoiseQuadrature lopsided{{{-1.0, 0.5}, {2.0, 0.5}}};
  CHECK_THROWS_AS(lopsided.check_moments(2.5), ValidationError);
}

TEST_CASE("NoiseQuadrature: small rules are Bernoulli and three-point laws") {
  const auto q2 = NoiseQuadrature::gauss_hermite(2, 0.5);
  CHECK(q2.nodes[0].increment == -std::sqrt(0.5));
  CHECK(q2.nodes[1].increment == std::sqrt(0.5));
  CHECK(q2.nodes[0].weight == 0.5);
  const auto q3 = NoiseQuadrature::gauss_hermite(3, 0.5);
  CHECK(q3.nodes[1].increment == 0.0);
  CHECK(q3.nodes[2].increment == std::sqrt(1.5));
  CHECK(q3.nodes[1].weight == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("NoiseQuadrature: exact on polynomial moments up to degree 2n-1") {
  const double dt = 0.3;
  const auto q = NoiseQuadrature::gauss_hermite(7, dt);
  // E z^(2j) = (2j - 1)!! dt^j for z ~ N(0, dt)
  double dfact = 1.0;
  for (int j = 1; j <= 6; ++j) {
    dfact *= 2 * j - 1;
    double even = 0.0, odd = 0.0;
    for (const auto& node : q.nodes) {
      even += node.weight * std::pow(node.increment, 2 * j);
      odd += node.weight * std::pow(node.increment, 2 * j - 1);
    }
    CHECK(even == doctest::Approx(dfact * std::pow(dt, j)).epsilon(1e-10));
    CHECK(std::abs(odd) < 1e-12);
  }
}

TEST_CASE("impulse_grid: uniform and symmetric") {
  ImpulseBox box{vec1(-2.0), vec1(2.0)};
  const auto g = impulse_grid(box, 41);
  REQUIRE(g.size() == 41);
  CHECK(g.front()[0] == -2.0);
  CHECK(g.back()[0] == 2.0);
  CHECK(g[20][0] == 0.0);
  for (std::size_t i = 0; i < 41; ++i) {
    CHECK(g[i][0] == -g[40 - i][0]);
    CHECK(g[i][0] == doctest::Approx(-2.0 + 0.1 * static_cast<double>(i)).epsilon(1e-14));
  }
  const auto three = impulse_grid(ImpulseBox{vec1(-1.0), vec1(1.0)}, 3);
  CHECK(three[0][0] == -1.0);
  CHECK(three[1][0] == 0.0);
  CHECK(three[2][0] == 1.0);
}
