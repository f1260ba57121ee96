#pragma once

#include "impulse/core.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace impulse {

/// Validation error that names the offending configuration field.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : ValidationError(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Plain-data description of a problem; coefficient functions are chosen by
/// name from a fixed registry. Each coefficient entry is a JSON object with a
/// "kind" key plus that kind's parameters.
///
///   drift           linear_delay_feedback {a, k_p}     a x - k_p x(t - delay)
///                   custom_affine {x_coeff, y_coeff, offset}
///   diffusion       constant {sigma} | constant {matrix}
///   intervention    additive {}                        x + u
///                   clamped_additive {bound}           clamp(x + u, [-bound, bound])
///   running_reward  quadratic {weight} | zero {}       weight |x|^2
///   terminal_reward quadratic {weight} | zero {}
///   impulse_cost    quadratic {fixed, quadratic}       fixed + quadratic |u|^2
///   initial_segment constant {value} | samples {values}
struct ProblemConfig {
  double horizon = 1.0;
  double delay = 0.0;
  int dimension = 1;
  nlohmann::json drift;
  nlohmann::json diffusion;
  nlohmann::json intervention;
  nlohmann::json running_reward;
  nlohmann::json terminal_reward;
  nlohmann::json impulse_cost;
  std::vector<double> impulse_lower;
  std::vector<double> impulse_upper;
  nlohmann::json initial_segment;
  double cost_floor = 0.05;
  std::vector<std::string> advisory_checks;
};

/// Parses and validates; unknown keys are errors. `where` prefixes field paths.
ProblemConfig problem_config_from_json(const nlohmann::json& j, const std::string& where = "problem");
nlohmann::json to_json(const ProblemConfig& cfg);

/// Instantiates the coefficient functions. `dt` fixes the sampling of the
/// initial segment (delay / dt + 1 samples).
ProblemSpec build_problem(const ProblemConfig& cfg, double dt);

namespace json_util {

/// Throws ConfigError for any key of `obj` not in `allowed`.
void require_known_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                        const std::string& where);
double get_number(const nlohmann::json& obj, const std::string& key, const std::string& where);
double get_number_or(const nlohmann::json& obj, const std::string& key, double fallback,
                     const std::string& where);
long long get_integer(const nlohmann::json& obj, const std::string& key, const std::string& where);
long long get_integer_or(const nlohmann::json& obj, const std::string& key, long long fallback,
                         const std::string& where);
std::string get_string(const nlohmann::json& obj, const std::string& key, const std::string& where);
std::vector<double> get_number_array(const nlohmann::json& obj, const std::string& key,
                                     const std::string& where);

}  // namespace json_util

}  // namespace impulse
