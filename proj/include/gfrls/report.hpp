#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gfrls/excitation.hpp"
#include "gfrls/guarantees.hpp"
#include "gfrls/simulation.hpp"

namespace gfrls {

// JSON shapes of the guarantee report. Field names are frozen; downstream
// tooling keys on them.

inline nlohmann::json to_json(const ExcitationReport& report) {
  return nlohmann::json{
      {"window", report.window},   {"alpha_bar", report.alpha_bar},
      {"beta_bar", report.beta_bar}, {"is_pe", report.is_pe},
      {"k_start", report.k_start}, {"k_end", report.k_end},
  };
}

inline nlohmann::json to_json(const ConditionProfile& profile) {
  nlohmann::json out{
      {"a1_proper", profile.a1_proper},
      {"a4", to_json(profile.a4)},
      {"k0", profile.k0},
  };
  out["a2_b"] = profile.a2_b.has_value() ? nlohmann::json(*profile.a2_b)
                                         : nlohmann::json(nullptr);
  out["a3_a"] = profile.a3_a.has_value() ? nlohmann::json(*profile.a3_a)
                                         : nlohmann::json(nullptr);
  return out;
}

inline nlohmann::json to_json(const RobustnessBound& bound) {
  return nlohmann::json{
      {"a", bound.a},
      {"b", bound.b},
      {"alpha_bar", bound.alpha_bar},
      {"beta_bar", bound.beta_bar},
      {"window", bound.window},
      {"delta_n", bound.delta_n},
      {"eps_star", bound.eps_star},
      {"eps", bound.eps},
  };
}

inline nlohmann::json to_json(const RateFit& fit) {
  return nlohmann::json{
      {"alpha_fit", fit.alpha_fit},
      {"beta_fit", fit.beta_fit},
      {"r_squared", fit.r_squared},
  };
}

inline nlohmann::json to_json(const BoundCompliance& compliance) {
  return nlohmann::json{
      {"epsilon", compliance.epsilon},
      {"transient", compliance.transient},
      {"exceedances_after_transient", compliance.exceedances_after_transient},
      {"compliant", compliance.compliant},
  };
}

}  // namespace gfrls
