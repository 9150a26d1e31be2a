#pragma once

#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gfrls/errors.hpp"
#include "gfrls/forgetting.hpp"
#include "gfrls/simulation.hpp"

namespace gfrls {

// Parsed and validated experiment description. Exactly one of scenario /
// external_trace is present. Every published parameter domain is enforced
// here, before any computation runs.
struct ExternalTraceRef {
  std::string path;
  int n = 1;
  int p = 1;
};

struct AnalysisConfig {
  int window = 1;
  std::set<std::string> checks;  // conditions, tier, bound, lemma5, lemma7, rate-fit
  std::optional<int> rate_fit_start;
  std::optional<int> rate_fit_end;
  std::optional<NoiseProfile> noise;  // overrides the empirical profile
};

struct OutputConfig {
  std::string dir = "out";
  bool csv = true;
  bool json = true;
  bool plot_data = false;
};

struct ExperimentConfig {
  std::optional<ScenarioSpec> scenario;
  std::optional<ExternalTraceRef> external_trace;
  std::string strategy_tag;
  nlohmann::json strategy_params;
  Vector theta0;
  SpdMatrix p0;
  AnalysisConfig analysis;
  OutputConfig output;
};

namespace detail {

inline const nlohmann::json& require_key(const nlohmann::json& j,
                                         const std::string& key,
                                         const std::string& where) {
  if (!j.contains(key)) {
    throw ConfigError(where + " is missing required key '" + key + "'");
  }
  return j.at(key);
}

inline double require_number(const nlohmann::json& j, const std::string& key,
                             const std::string& where) {
  const auto& v = require_key(j, key, where);
  if (!v.is_number()) {
    throw ConfigError(where + "." + key + " must be a number");
  }
  return v.get<double>();
}

// A square matrix parameter: either a scalar c meaning c * I, or an
// explicit row-major array of rows.
inline Matrix square_matrix_param(const nlohmann::json& v, int n,
                                  const std::string& where) {
  if (v.is_number()) {
    return v.get<double>() * Matrix::Identity(n, n);
  }
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw ConfigError(where + " must be a scalar or an " + std::to_string(n) +
                      "x" + std::to_string(n) + " array of rows");
  }
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& row = v.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw ConfigError(where + " row " + std::to_string(i) + " must have " +
                        std::to_string(n) + " entries");
    }
    for (int j = 0; j < n; ++j) {
      if (!row.at(j).is_number()) {
        throw ConfigError(where + " has a non-numeric entry");
      }
      m(i, j) = row.at(j).get<double>();
    }
  }
  return m;
}

inline Vector vector_param(const nlohmann::json& v, int n,
                           const std::string& where) {
  if (v.is_number()) {
    return Vector::Constant(n, v.get<double>());
  }
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw ConfigError(where + " must be a scalar or an array of length " +
                      std::to_string(n));
  }
  Vector out(n);
  for (int i = 0; i < n; ++i) {
    if (!v.at(i).is_number()) {
      throw ConfigError(where + " has a non-numeric entry");
    }
    out(i) = v.at(i).get<double>();
  }
  return out;
}

// A per-step parameter: scalar constant or explicit schedule array. Every
// value is validated against its published domain here, before any
// computation runs.
inline std::function<double(int)> schedule_param(
    const nlohmann::json& params, const std::string& scalar_key,
    const std::string& where, const std::function<bool(double)>& in_domain,
    const std::string& domain_text) {
  const auto validate = [&](double v) {
    if (!in_domain(v)) {
      throw ConfigError(where + "." + scalar_key + " value " +
                        std::to_string(v) + " outside " + domain_text);
    }
  };
  if (params.contains("schedule")) {
    const auto& arr = params.at("schedule");
    if (!arr.is_array() || arr.empty()) {
      throw ConfigError(where + ".schedule must be a nonempty array");
    }
    std::vector<double> values;
    values.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) {
        throw ConfigError(where + ".schedule has a non-numeric entry");
      }
      values.push_back(v.get<double>());
      validate(values.back());
    }
    return [values, where](int k) {
      if (k < 0 || k >= static_cast<int>(values.size())) {
        throw InvalidParameter(where + ".schedule has no entry for step " +
                               std::to_string(k));
      }
      return values[static_cast<std::size_t>(k)];
    };
  }
  const double value = require_number(params, scalar_key, where);
  validate(value);
  return [value](int) { return value; };
}

inline bool unit_interval_open_closed(double v) { return v > 0.0 && v <= 1.0; }
inline bool mu_domain(double v) { return v > 0.0 && v < 1.0; }

inline RegressorKind regressor_kind_from(const std::string& name) {
  if (name == "sinusoidal-pe") return RegressorKind::SinusoidalPe;
  if (name == "random-pe") return RegressorKind::RandomPe;
  if (name == "constant") return RegressorKind::Constant;
  if (name == "zero") return RegressorKind::Zero;
  throw ConfigError("unknown regressor kind '" + name +
                    "'; valid: sinusoidal-pe, random-pe, constant, zero");
}

inline GammaKind gamma_kind_from(const std::string& name) {
  if (name == "identity") return GammaKind::Identity;
  if (name == "diagonal-schedule") return GammaKind::DiagonalSchedule;
  throw ConfigError("unknown gamma kind '" + name +
                    "'; valid: identity, diagonal-schedule");
}

}  // namespace detail

// Builds the strategy named in the config. Throws ConfigError on unknown
// tags (naming the valid ones) and on parameters outside their published
// domains.
inline std::unique_ptr<ForgettingStrategy> make_strategy(
    const std::string& tag, const nlohmann::json& params, int n, int p) {
  try {
    if (tag == PlainRls::kTag) {
      return std::make_unique<PlainRls>();
    }
    if (tag == ExponentialForgetting::kTag) {
      return std::make_unique<ExponentialForgetting>(
          detail::require_number(params, "lambda", "strategy"));
    }
    if (tag == VariableRateForgetting::kTag) {
      return std::make_unique<VariableRateForgetting>(detail::schedule_param(
          params, "lambda", "strategy", detail::unit_interval_open_closed,
          "(0, 1]"));
    }
    if (tag == DataDependentUpdating::kTag) {
      return std::make_unique<DataDependentUpdating>(detail::schedule_param(
          params, "mu", "strategy", detail::mu_domain, "(0, 1)"));
    }
    if (tag == ExponentialResetting::kTag) {
      const Matrix r_inf = detail::square_matrix_param(
          detail::require_key(params, "r_inf", "strategy"), n,
          "strategy.r_inf");
      return std::make_unique<ExponentialResetting>(
          detail::require_number(params, "lambda", "strategy"),
          SymMatrix(r_inf));
    }
    if (tag == CovarianceResetting::kTag) {
      const auto& criterion =
          detail::require_key(params, "criterion", "strategy");
      const std::string kind =
          detail::require_key(criterion, "kind", "strategy.criterion")
              .get<std::string>();
      CovarianceResetting::Criterion fire;
      if (kind == "periodic") {
        fire = CovarianceResetting::fire_every(static_cast<int>(
            detail::require_number(criterion, "period", "strategy.criterion")));
      } else if (kind == "trace-below") {
        fire = CovarianceResetting::fire_when_trace_below(
            detail::require_number(criterion, "threshold",
                                   "strategy.criterion"));
      } else {
        throw ConfigError("unknown reset criterion '" + kind +
                          "'; valid: periodic, trace-below");
      }
      const Matrix p_inf = detail::square_matrix_param(
          detail::require_key(params, "p_inf", "strategy"), n,
          "strategy.p_inf");
      return std::make_unique<CovarianceResetting>(std::move(fire),
                                                   SpdMatrix(SymMatrix(p_inf)));
    }
    if (tag == DirectionalForgettingImd::kTag) {
      return std::make_unique<DirectionalForgettingImd>(
          detail::require_number(params, "lambda", "strategy"),
          detail::require_number(params, "eps", "strategy"));
    }
    if (tag == VariableDirectionForgetting::kTag) {
      // The construction of Lambda_k is application-defined; the config
      // supports a constant matrix.
      const Matrix lambda = detail::square_matrix_param(
          detail::require_key(params, "lambda_matrix", "strategy"), n,
          "strategy.lambda_matrix");
      const SpdMatrix lambda_spd{SymMatrix(lambda)};
      return std::make_unique<VariableDirectionForgetting>(
          [lambda_spd](const EstimatorState&, const Sample&) {
            return lambda_spd;
          });
    }
    if (tag == DirectionalForgettingSlow::kTag) {
      return std::make_unique<DirectionalForgettingSlow>(
          detail::require_number(params, "mu", "strategy"));
    }
    if (tag == MultipleForgetting::kTag) {
      return std::make_unique<MultipleForgetting>(
          detail::require_number(params, "lambda1", "strategy"),
          detail::require_number(params, "lambda2", "strategy"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("strategy '" + tag + "': " + e.what());
  }
  std::string valid;
  for (const auto t : strategy_tags()) {
    valid += valid.empty() ? std::string(t) : ", " + std::string(t);
  }
  throw ConfigError("unknown strategy tag '" + tag + "'; valid tags: " + valid);
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("config root must be an object");
  }
  const int version =
      static_cast<int>(detail::require_number(j, "version", "config"));
  if (version != 1) {
    throw ConfigError("unsupported config version " + std::to_string(version));
  }

  const bool has_scenario = j.contains("scenario");
  const bool has_trace = j.contains("external_trace");
  if (has_scenario == has_trace) {
    throw ConfigError("exactly one of 'scenario' or 'external_trace' required");
  }

  int n = 0;
  int p = 0;
  std::optional<ScenarioSpec> scenario;
  std::optional<ExternalTraceRef> trace;
  if (has_scenario) {
    const auto& s = j.at("scenario");
    ScenarioSpec spec;
    spec.n = static_cast<int>(detail::require_number(s, "n", "scenario"));
    spec.p = static_cast<int>(detail::require_number(s, "p", "scenario"));
    spec.horizon =
        static_cast<int>(detail::require_number(s, "horizon", "scenario"));
    if (spec.horizon < 1) {
      throw ConfigError("scenario.horizon must be at least 1");
    }
    spec.theta_true0 = s.contains("theta_true0")
                           ? detail::vector_param(s.at("theta_true0"), spec.n,
                                                  "scenario.theta_true0")
                           : Vector(Vector::Zero(spec.n));
    spec.walk_bound = s.value("walk_bound", 0.0);
    spec.meas_noise_bound = s.value("meas_noise_bound", 0.0);
    spec.reg_noise_bound = s.value("reg_noise_bound", 0.0);
    if (spec.walk_bound < 0.0 || spec.meas_noise_bound < 0.0 ||
        spec.reg_noise_bound < 0.0) {
      throw ConfigError("scenario noise bounds must be nonnegative");
    }
    spec.regressor_kind =
        detail::regressor_kind_from(s.value("regressor", "sinusoidal-pe"));
    spec.gamma_kind = detail::gamma_kind_from(s.value("gamma", "identity"));
    spec.seed = s.value("seed", 0ULL);
    n = spec.n;
    p = spec.p;
    scenario = std::move(spec);
  } else {
    const auto& t = j.at("external_trace");
    ExternalTraceRef ref;
    ref.path = detail::require_key(t, "path", "external_trace").get<std::string>();
    ref.n = static_cast<int>(detail::require_number(t, "n", "external_trace"));
    ref.p = static_cast<int>(detail::require_number(t, "p", "external_trace"));
    n = ref.n;
    p = ref.p;
    trace = std::move(ref);
  }

  const auto& strategy = detail::require_key(j, "strategy", "config");
  const std::string tag =
      detail::require_key(strategy, "tag", "strategy").get<std::string>();
  // Eager construction validates every parameter domain up front.
  make_strategy(tag, strategy, n, p);

  const auto& estimator = detail::require_key(j, "estimator", "config");
  const Vector theta0 = estimator.contains("theta0")
                            ? detail::vector_param(estimator.at("theta0"), n,
                                                   "estimator.theta0")
                            : Vector(Vector::Zero(n));
  Matrix p0_matrix = estimator.contains("p0")
                         ? detail::square_matrix_param(estimator.at("p0"), n,
                                                       "estimator.p0")
                         : Matrix(Matrix::Identity(n, n));
  SpdMatrix p0 = [&] {
    try {
      return SpdMatrix(SymMatrix(p0_matrix));
    } catch (const Error& e) {
      throw ConfigError(std::string("estimator.p0: ") + e.what());
    }
  }();

  AnalysisConfig analysis;
  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    analysis.window = static_cast<int>(a.value("window", 1.0));
    if (analysis.window < 1) {
      throw ConfigError("analysis.window must be at least 1");
    }
    if (a.contains("checks")) {
      for (const auto& c : a.at("checks")) {
        const std::string name = c.get<std::string>();
        static const std::set<std::string> known{
            "conditions", "tier", "bound", "lemma5", "lemma7", "rate-fit"};
        if (!known.count(name)) {
          throw ConfigError("unknown analysis check '" + name + "'");
        }
        analysis.checks.insert(name);
      }
    }
    if (a.contains("rate_fit")) {
      analysis.rate_fit_start = static_cast<int>(
          detail::require_number(a.at("rate_fit"), "start", "analysis.rate_fit"));
      analysis.rate_fit_end = static_cast<int>(
          detail::require_number(a.at("rate_fit"), "end", "analysis.rate_fit"));
    }
    if (a.contains("noise")) {
      const auto& noise = a.at("noise");
      NoiseProfile profile;
      profile.delta_theta =
          detail::require_number(noise, "delta_theta", "analysis.noise");
      profile.delta_y_bar =
          detail::require_number(noise, "delta_y_bar", "analysis.noise");
      profile.delta_phi_bar =
          detail::require_number(noise, "delta_phi_bar", "analysis.noise");
      profile.theta_max =
          detail::require_number(noise, "theta_max", "analysis.noise");
      if (profile.delta_theta < 0.0 || profile.delta_y_bar < 0.0 ||
          profile.delta_phi_bar < 0.0 || profile.theta_max < 0.0) {
        throw ConfigError("analysis.noise bounds must be nonnegative");
      }
      analysis.noise = profile;
    }
  }
  if (analysis.checks.empty()) {
    analysis.checks = {"conditions", "tier", "bound", "lemma5", "lemma7",
                       "rate-fit"};
  }

  OutputConfig output;
  if (j.contains("output")) {
    const auto& o = j.at("output");
    output.dir = o.value("dir", std::string("out"));
    if (o.contains("formats")) {
      output.csv = false;
      output.json = false;
      for (const auto& f : o.at("formats")) {
        const std::string name = f.get<std::string>();
        if (name == "csv") {
          output.csv = true;
        } else if (name == "json") {
          output.json = true;
        } else {
          throw ConfigError("unknown output format '" + name +
                            "'; valid: csv, json");
        }
      }
    }
    output.plot_data = o.value("plot_data", false);
  }

  return ExperimentConfig{std::move(scenario), std::move(trace),
                          tag,           strategy,
                          theta0,        std::move(p0),
                          std::move(analysis), std::move(output)};
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file '" + path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

}  // namespace gfrls
