#include "impulse/assumptions.hpp"

#include "impulse/rng.hpp"

#include <algorithm>
#include <cmath>

namespace impulse {

namespace {

struct Sample {
  double t;
  Vector x, y, xd, yd, u, v;
};

void append(std::vector<double>& out, const Vector& v) {
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
}

std::vector<double> witness_of(const Sample& s, bool with_delay, bool with_impulse) {
  std::vector<double> w{s.t};
  append(w, s.x);
  append(w, s.y);
  if (with_delay) {
    append(w, s.xd);
    append(w, s.yd);
  }
  if (with_impulse) {
    append(w, s.u);
    append(w, s.v);
  }
  return w;
}

// Tracks the worst sample of one statistic.
struct Tracker {
  AssumptionCheck check;
  bool maximize = true;
  bool any = false;

  void offer(double value, const std::vector<double>& witness) {
    if (!std::isfinite(value)) value = maximize ? INFINITY : -INFINITY;
    if (!any || (maximize ? value > check.statistic : value < check.statistic)) {
      check.statistic = value;
      check.witness = witness;
      any = true;
    }
  }
};

Tracker make(const std::string& name, double limit, const std::string& cmp, bool maximize) {
  Tracker t;
  t.check.name = name;
  t.check.limit = limit;
  t.check.comparison = cmp;
  t.maximize = maximize;
  return t;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

bool AssumptionReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AssumptionCheck& c) { return c.passed || c.advisory; });
}

const AssumptionCheck& AssumptionReport::at(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ValidationError("no assumption check named " + name);
}

AssumptionReport check_assumptions(const ProblemSpec& spec, const AssumptionOptions& options) {
  spec.validate();
  if (options.sample_budget < 1) throw ValidationError("sample_budget must be >= 1");
  const CounterRng rng(options.seed, kAssumptionStream);
  const int d = spec.dim;
  const int mu = spec.impulse_set.dim();
  const double lim = options.lipschitz_limit;

  auto drift = make("drift_lipschitz", lim, "<=", true);
  auto diffusion = make("diffusion_lipschitz", lim, "<=", true);
  auto running = make("running_lipschitz", lim, "<=", true);
  auto cost = make("cost_lipschitz", lim, "<=", true);
  auto growth = make("jump_growth", 0.0, "<=", true);
  auto jump = make("jump_lipschitz", lim, "<=", true);
  auto floor = make("cost_floor", spec.cost_floor, ">", false);

  for (std::size_t i = 0; i < options.sample_budget; ++i) {
    std::uint64_t lane = 0;
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(i, 0, lane++); };
    Sample s;
    s.t = uni(0.0, spec.horizon);
    s.x.resize(d);
    s.y.resize(d);
    s.xd.resize(d);
    s.yd.resize(d);
    for (auto* v : {&s.x, &s.y, &s.xd, &s.yd}) {
      for (int j = 0; j < d; ++j) (*v)[j] = uni(-options.radius, options.radius);
    }
    s.u.resize(mu);
    s.v.resize(mu);
    for (auto* v : {&s.u, &s.v}) {
      for (int j = 0; j < mu; ++j) (*v)[j] = uni(spec.impulse_set.lower[j], spec.impulse_set.upper[j]);
    }
    const double dx = (s.x - s.y).norm() + (s.xd - s.yd).norm();
    const double dxu = (s.x - s.y).norm() + (s.u - s.v).norm();

    drift.offer(ratio((spec.drift(s.t, s.x, s.xd) - spec.drift(s.t, s.y, s.yd)).norm(), dx),
                witness_of(s, true, false));
    diffusion.offer(
        ratio((spec.diffusion(s.t, s.x, s.xd) - spec.diffusion(s.t, s.y, s.yd)).norm(), dx),
        witness_of(s, true, false));
    running.offer(ratio(std::abs(spec.running_reward(s.t, s.x) - spec.running_reward(s.t, s.y)),
                        (s.x - s.y).norm()),
                  witness_of(s, false, false));
    cost.offer(ratio(std::abs(spec.impulse_cost(s.x, s.u, s.t) - spec.impulse_cost(s.y, s.v, s.t)),
                     dxu),
               witness_of(s, false, true));
    const Vector gx = spec.intervention(s.x, s.u);
    growth.offer(gx.norm() - std::max(options.growth_constant, s.x.norm()),
                 witness_of(s, false, true));
    jump.offer(ratio((gx - spec.intervention(s.y, s.v)).norm(), dxu), witness_of(s, false, true));
    floor.offer(spec.impulse_cost(s.x, s.u, s.t), witness_of(s, false, true));
  }

  AssumptionReport report;
  report.samples = options.sample_budget;
  report.seed = options.seed;
  for (auto* t : {&drift, &diffusion, &running, &cost, &growth, &jump, &floor}) {
    auto& c = t->check;
    c.passed = c.comparison == "<=" ? c.statistic <= c.limit + 1e-12 : c.statistic > c.limit;
    if (c.name == "cost_floor" && !(spec.cost_floor > 0.0)) c.passed = false;
    c.advisory = std::find(options.advisory.begin(), options.advisory.end(), c.name) !=
                 options.advisory.end();
    report.checks.push_back(std::move(c));
  }
  return report;
}

}  // namespace impulse
