#include "impulse/problem_config.hpp"

#include <algorithm>
#include <cmath>

namespace impulse {

using nlohmann::json;

namespace json_util {

void require_known_keys(const json& obj, const std::vector<std::string>& allowed,
                        const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(where + "." + item.key(), "unknown key");
    }
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + "." + key, "missing required number");
  if (!it->is_number()) throw ConfigError(where + "." + key, "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + "." + key, "must be finite");
  return v;
}

double get_number_or(const json& obj, const std::string& key, double fallback,
                     const std::string& where) {
  return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

long long get_integer(const json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + "." + key, "missing required integer");
  if (!it->is_number_integer()) throw ConfigError(where + "." + key, "expected an integer");
  return it->get<long long>();
}

long long get_integer_or(const json& obj, const std::string& key, long long fallback,
                         const std::string& where) {
  return obj.contains(key) ? get_integer(obj, key, where) : fallback;
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + "." + key, "missing required string");
  if (!it->is_string()) throw ConfigError(where + "." + key, "expected a string");
  return it->get<std::string>();
}

std::vector<double> get_number_array(const json& obj, const std::string& key,
                                     const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + "." + key, "missing required array");
  if (it->is_number()) return {it->get<double>()};
  if (!it->is_array()) throw ConfigError(where + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : *it) {
    if (!v.is_number()) throw ConfigError(where + "." + key, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace json_util

namespace {

using namespace json_util;

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

Vector vector_param(const json& obj, const std::string& key, int dim, const std::string& where) {
  if (!obj.contains(key)) return Vector::Zero(dim);
  auto v = get_number_array(obj, key, where);
  if (v.size() == 1 && dim > 1) v.assign(static_cast<std::size_t>(dim), v[0]);
  if (static_cast<int>(v.size()) != dim) {
    throw ConfigError(where + "." + key, "expected " + std::to_string(dim) + " entries");
  }
  return to_vector(v);
}

// A scalar s means s * I; otherwise an array of `dim` rows.
Matrix matrix_param(const json& obj, const std::string& key, int dim, const std::string& where) {
  const std::string field = where + "." + key;
  if (!obj.contains(key)) return Matrix::Zero(dim, dim);
  const auto& v = obj.at(key);
  if (v.is_number()) return v.get<double>() * Matrix::Identity(dim, dim);
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw ConfigError(field, "expected a number or " + std::to_string(dim) + " rows");
  }
  Matrix out(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const auto& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      throw ConfigError(field, "row " + std::to_string(r) + " must have " + std::to_string(dim) +
                                   " numbers");
    }
    for (int c = 0; c < dim; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw ConfigError(field, "expected numbers");
      out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return out;
}

std::string kind_of(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where, "expected an object with a \"kind\" key");
  return get_string(obj, "kind", where);
}

void validate_drift(const json& obj, int dim, const std::string& where) {
  const auto kind = kind_of(obj, where);
  if (kind == "linear_delay_feedback") {
    require_known_keys(obj, {"kind", "a", "k_p"}, where);
    get_number(obj, "a", where);
    get_number(obj, "k_p", where);
  } else if (kind == "custom_affine") {
    require_known_keys(obj, {"kind", "x_coeff", "y_coeff", "offset"}, where);
    matrix_param(obj, "x_coeff", dim, where);
    matrix_param(obj, "y_coeff", dim, where);
    vector_param(obj, "offset", dim, where);
  } else {
    throw ConfigError(where + ".kind", "unknown drift \"" + kind + "\"");
  }
}

void validate_diffusion(const json& obj, int dim, const std::string& where) {
  const auto kind = kind_of(obj, where);
  if (kind != "constant") throw ConfigError(where + ".kind", "unknown diffusion \"" + kind + "\"");
  require_known_keys(obj, {"kind", "sigma", "matrix"}, where);
  if (obj.contains("sigma") == obj.contains("matrix")) {
    throw ConfigError(where, "give exactly one of \"sigma\" or \"matrix\"");
  }
  if (obj.contains("sigma")) get_number(obj, "sigma", where);
  if (obj.contains("matrix")) matrix_param(obj, "matrix", dim, where);
}

void validate_intervention(const json& obj, const std::string& where) {
  const auto kind = kind_of(obj, where);
  if (kind == "additive") {
    require_known_keys(obj, {"kind"}, where);
  } else if (kind == "clamped_additive") {
    require_known_keys(obj, {"kind", "bound"}, where);
    if (get_number(obj, "bound", where) <= 0.0) throw ConfigError(where + ".bound", "must be > 0");
  } else {
    throw ConfigError(where + ".kind", "unknown intervention \"" + kind + "\"");
  }
}

void validate_reward(const json& obj, const std::string& where) {
  const auto kind = kind_of(obj, where);
  if (kind == "quadratic") {
    require_known_keys(obj, {"kind", "weight"}, where);
    get_number(obj, "weight", where);
  } else if (kind == "zero") {
    require_known_keys(obj, {"kind"}, where);
  } else {
    throw ConfigError(where + ".kind", "unknown reward \"" + kind + "\"");
  }
}

void validate_cost(const json& obj, const std::string& where) {
  const auto kind = kind_of(obj, where);
  if (kind != "quadratic") throw ConfigError(where + ".kind", "unknown impulse cost \"" + kind + "\"");
  require_known_keys(obj, {"kind", "fixed", "quadratic"}, where);
  get_number(obj, "fixed", where);
  get_number_or(obj, "quadratic", 0.0, where);
}

void validate_initial_segment(const json& obj, int dim, const std::string& where) {
  const auto kind = kind_of(obj, where);
  if (kind == "constant") {
    require_known_keys(obj, {"kind", "value"}, where);
    vector_param(obj, "value", dim, where);
  } else if (kind == "samples") {
    require_known_keys(obj, {"kind", "values"}, where);
    const auto& values = obj.contains("values") ? obj.at("values") : json();
    if (!values.is_array() || values.empty()) {
      throw ConfigError(where + ".values", "expected a nonempty array of samples");
    }
    for (const auto& s : values) {
      const bool scalar_ok = dim == 1 && s.is_number();
      const bool vector_ok = s.is_array() && static_cast<int>(s.size()) == dim &&
                             std::all_of(s.begin(), s.end(), [](const json& x) { return x.is_number(); });
      if (!scalar_ok && !vector_ok) throw ConfigError(where + ".values", "malformed sample");
    }
  } else {
    throw ConfigError(where + ".kind", "unknown initial segment \"" + kind + "\"");
  }
}

const std::vector<std::string> kAssumptionNames = {
    "drift_lipschitz", "diffusion_lipschitz", "running_lipschitz", "cost_lipschitz",
    "jump_growth",     "jump_lipschitz",      "cost_floor"};

}  // namespace

ProblemConfig problem_config_from_json(const json& j, const std::string& where) {
  require_known_keys(j,
                     {"horizon", "delay", "dimension", "drift", "diffusion", "intervention",
                      "running_reward", "terminal_reward", "impulse_cost", "impulse_set",
                      "initial_segment", "cost_floor", "advisory_checks"},
                     where);
  ProblemConfig cfg;
  cfg.horizon = get_number(j, "horizon", where);
  if (!(cfg.horizon > 0.0)) throw ConfigError(where + ".horizon", "must be > 0");
  cfg.delay = get_number_or(j, "delay", 0.0, where);
  if (cfg.delay < 0.0) throw ConfigError(where + ".delay", "must be >= 0");
  cfg.dimension = static_cast<int>(get_integer_or(j, "dimension", 1, where));
  if (cfg.dimension < 1 || cfg.dimension > kMaxDim) {
    throw ConfigError(where + ".dimension", "must be in [1, 8]");
  }
  const int d = cfg.dimension;

  auto section = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw ConfigError(where + "." + key, "missing required section");
    return j.at(key);
  };
  cfg.drift = section("drift");
  validate_drift(cfg.drift, d, where + ".drift");
  cfg.diffusion = section("diffusion");
  validate_diffusion(cfg.diffusion, d, where + ".diffusion");
  cfg.intervention = section("intervention");
  validate_intervention(cfg.intervention, where + ".intervention");
  cfg.running_reward = section("running_reward");
  validate_reward(cfg.running_reward, where + ".running_reward");
  cfg.terminal_reward = j.contains("terminal_reward") ? j.at("terminal_reward") : json{{"kind", "zero"}};
  validate_reward(cfg.terminal_reward, where + ".terminal_reward");
  cfg.impulse_cost = section("impulse_cost");
  validate_cost(cfg.impulse_cost, where + ".impulse_cost");

  const auto& box = section("impulse_set");
  const std::string box_where = where + ".impulse_set";
  require_known_keys(box, {"lower", "upper"}, box_where);
  cfg.impulse_lower = get_number_array(box, "lower", box_where);
  cfg.impulse_upper = get_number_array(box, "upper", box_where);
  if (cfg.impulse_lower.empty() || cfg.impulse_lower.size() != cfg.impulse_upper.size() ||
      cfg.impulse_lower.size() > static_cast<std::size_t>(kMaxDim)) {
    throw ConfigError(box_where, "lower and upper must have the same length in [1, 8]");
  }
  for (std::size_t i = 0; i < cfg.impulse_lower.size(); ++i) {
    if (!(cfg.impulse_lower[i] <= cfg.impulse_upper[i])) {
      throw ConfigError(box_where, "lower must not exceed upper");
    }
  }
  if (static_cast<int>(cfg.impulse_lower.size()) != d) {
    throw ConfigError(box_where, "additive interventions need impulse dimension == state dimension");
  }

  cfg.initial_segment = j.contains("initial_segment")
                            ? j.at("initial_segment")
                            : json{{"kind", "constant"}, {"value", std::vector<double>(d, 0.0)}};
  validate_initial_segment(cfg.initial_segment, d, where + ".initial_segment");

  cfg.cost_floor = get_number_or(j, "cost_floor", 0.05, where);
  if (!(cfg.cost_floor > 0.0)) throw ConfigError(where + ".cost_floor", "must be > 0");

  if (j.contains("advisory_checks")) {
    const auto& a = j.at("advisory_checks");
    if (!a.is_array()) throw ConfigError(where + ".advisory_checks", "expected an array of names");
    for (const auto& name : a) {
      if (!name.is_string() || std::find(kAssumptionNames.begin(), kAssumptionNames.end(),
                                         name.get<std::string>()) == kAssumptionNames.end()) {
        throw ConfigError(where + ".advisory_checks", "unknown assumption check name");
      }
      cfg.advisory_checks.push_back(name.get<std::string>());
    }
  }
  return cfg;
}

json to_json(const ProblemConfig& cfg) {
  json j;
  j["horizon"] = cfg.horizon;
  j["delay"] = cfg.delay;
  j["dimension"] = cfg.dimension;
  j["drift"] = cfg.drift;
  j["diffusion"] = cfg.diffusion;
  j["intervention"] = cfg.intervention;
  j["running_reward"] = cfg.running_reward;
  j["terminal_reward"] = cfg.terminal_reward;
  j["impulse_cost"] = cfg.impulse_cost;
  j["impulse_set"] = {{"lower", cfg.impulse_lower}, {"upper", cfg.impulse_upper}};
  j["initial_segment"] = cfg.initial_segment;
  j["cost_floor"] = cfg.cost_floor;
  j["advisory_checks"] = cfg.advisory_checks;
  return j;
}

namespace {

RunningRewardFn make_running(const json& obj) {
  if (obj.at("kind") == "zero") return [](double, const Vector&) { return 0.0; };
  const double w = obj.at("weight").get<double>();
  return [w](double, const Vector& x) { return w * x.squaredNorm(); };
}

TerminalRewardFn make_terminal(const json& obj) {
  if (obj.at("kind") == "zero") return [](const Vector&) { return 0.0; };
  const double w = obj.at("weight").get<double>();
  return [w](const Vector& x) { return w * x.squaredNorm(); };
}

}  // namespace

ProblemSpec build_problem(const ProblemConfig& cfg, double dt) {
  const int d = cfg.dimension;
  ProblemSpec spec;
  spec.horizon = cfg.horizon;
  spec.delay = cfg.delay;
  spec.dim = d;
  spec.cost_floor = cfg.cost_floor;

  const auto& drift = cfg.drift;
  if (drift.at("kind") == "linear_delay_feedback") {
    const double a = drift.at("a").get<double>();
    const double kp = drift.at("k_p").get<double>();
    spec.drift = [a, kp](double, const Vector& x, const Vector& y) -> Vector { return a * x - kp * y; };
  } else {
    const Matrix ax = matrix_param(drift, "x_coeff", d, "problem.drift");
    const Matrix ay = matrix_param(drift, "y_coeff", d, "problem.drift");
    const Vector c = vector_param(drift, "offset", d, "problem.drift");
    spec.drift = [ax, ay, c](double, const Vector& x, const Vector& y) -> Vector {
      return ax * x + ay * y + c;
    };
  }

  const auto& diff = cfg.diffusion;
  const Matrix b = diff.contains("sigma") ? Matrix(diff.at("sigma").get<double>() * Matrix::Identity(d, d))
                                          : matrix_param(diff, "matrix", d, "problem.diffusion");
  spec.diffusion = [b](double, const Vector&, const Vector&) { return b; };

  if (cfg.intervention.at("kind") == "additive") {
    spec.intervention = [](const Vector& x, const Vector& u) -> Vector { return x + u; };
  } else {
    const double bound = cfg.intervention.at("bound").get<double>();
    spec.intervention = [bound](const Vector& x, const Vector& u) -> Vector {
      return (x + u).cwiseMax(-bound).cwiseMin(bound);
    };
  }

  spec.running_reward = make_running(cfg.running_reward);
  spec.terminal_reward = make_terminal(cfg.terminal_reward);

  const double fixed = cfg.impulse_cost.at("fixed").get<double>();
  const double quad = cfg.impulse_cost.value("quadratic", 0.0);
  spec.impulse_cost = [fixed, quad](const Vector&, const Vector& u, double) {
    return fixed + quad * u.squaredNorm();
  };

  spec.impulse_set.lower = to_vector(cfg.impulse_lower);
  spec.impulse_set.upper = to_vector(cfg.impulse_upper);

  if (!(dt > 0.0)) throw ConfigError("discretization.dt", "must be > 0");
  const double ratio = cfg.delay / dt;
  const long long lag_steps = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(lag_steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("discretization.dt", "delay is not an integer multiple of dt");
  }
  const auto& seg = cfg.initial_segment;
  if (seg.at("kind") == "constant") {
    const Vector v = vector_param(seg, "value", d, "problem.initial_segment");
    spec.initial_segment.assign(static_cast<std::size_t>(lag_steps + 1), v);
  } else {
    const auto& values = seg.at("values");
    if (static_cast<long long>(values.size()) != lag_steps + 1) {
      throw ConfigError("problem.initial_segment.values",
                        "expected delay/dt + 1 = " + std::to_string(lag_steps + 1) + " samples");
    }
    for (const auto& s : values) {
      Vector v(d);
      if (s.is_number()) {
        v[0] = s.get<double>();
      } else {
        for (int i = 0; i < d; ++i) v[i] = s[static_cast<std::size_t>(i)].get<double>();
      }
      spec.initial_segment.push_back(v);
    }
  }
  spec.validate();
  return spec;
}

}  // namespace impulse
