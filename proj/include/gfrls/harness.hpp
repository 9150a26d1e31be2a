#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gfrls/config.hpp"
#include "gfrls/errors.hpp"
#include "gfrls/report.hpp"
#include "gfrls/simulation.hpp"
#include "gfrls/trace_io.hpp"

namespace gfrls {

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;  // "csv" or "json"
  bool strict = false;
};

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << contents;
}

inline std::string csv_cell(double v) { return format_double(v); }

// Trajectory CSV: one row per step k = 0..K-1 with the state entering the
// step and that step's diagnostics, plus a final row for the state after
// the last update (diagnostics columns empty there).
inline std::string trajectory_csv(const RunRecord& record, bool with_truth) {
  std::ostringstream out;
  const int n = record.theta_estimate.front().size();
  out << "k";
  for (int i = 1; i <= n; ++i) out << ",theta_" << i;
  if (with_truth) {
    for (int i = 1; i <= n; ++i) out << ",theta_true_" << i;
    out << ",tilde_norm,check_norm";
  }
  out << ",lambda_min_info,well_posed_margin,proper,delta_v_gap_mineig\n";
  const std::size_t rows = record.theta_estimate.size();
  for (std::size_t k = 0; k < rows; ++k) {
    out << k;
    for (int i = 0; i < n; ++i) {
      out << ',' << csv_cell(record.theta_estimate[k](i));
    }
    if (with_truth) {
      for (int i = 0; i < n; ++i) {
        out << ',' << csv_cell(record.theta_true[k](i));
      }
      out << ',' << csv_cell(record.tilde_norm[k]) << ','
          << csv_cell(record.check_norm[k]);
    }
    const bool has_step = k < record.trajectory.size();
    const auto& info = has_step ? record.trajectory[k].before.info()
                                : record.trajectory.back().after.info();
    out << ',' << csv_cell(min_eigenvalue(info.m()));
    if (has_step) {
      const auto& diag = record.trajectory[k].diagnostics;
      out << ',' << csv_cell(diag.well_posed_margin) << ','
          << (diag.proper ? 1 : 0) << ',' << csv_cell(diag.delta_v_gap_mineig);
    } else {
      out << ",,,";
    }
    out << "\n";
  }
  return out.str();
}

inline std::string plot_csv(const RunRecord& record,
                            std::optional<double> epsilon) {
  std::ostringstream out;
  out << "k,tilde_norm,check_norm,lambda_min_info,epsilon\n";
  const std::size_t rows = record.theta_estimate.size();
  for (std::size_t k = 0; k < rows; ++k) {
    const bool has_step = k < record.trajectory.size();
    const auto& info = has_step ? record.trajectory[k].before.info()
                                : record.trajectory.back().after.info();
    out << k << ',' << csv_cell(record.tilde_norm[k]) << ','
        << csv_cell(record.check_norm[k]) << ','
        << csv_cell(min_eigenvalue(info.m())) << ','
        << (epsilon ? csv_cell(*epsilon) : "") << "\n";
  }
  return out.str();
}

inline RunRecord run_external(const std::vector<Sample>& samples,
                              ForgettingStrategy& strategy,
                              EstimatorState state) {
  RunRecord record;
  record.trajectory.reserve(samples.size());
  for (const auto& sample : samples) {
    record.theta_estimate.push_back(state.theta());
    record.tilde_norm.push_back(0.0);
    record.check_norm.push_back(0.0);
    ForgettingDirective d = strategy.directive(state, sample);
    auto [next, diag] = step(state, sample, d.f);
    record.trajectory.push_back(TrajectoryStep{state, std::move(d), sample,
                                               std::move(diag), next});
    state = next;
  }
  record.theta_estimate.push_back(state.theta());
  record.tilde_norm.push_back(0.0);
  record.check_norm.push_back(0.0);
  return record;
}

}  // namespace detail

// Runs one experiment end to end: data, estimator loop, requested analysis,
// artifact files. Returns the process exit status (nonzero under --strict
// when a checked guarantee is violated).
inline int run_experiment(const std::string& config_path,
                          const CliOverrides& overrides,
                          std::ostream& log = std::cout) {
  ExperimentConfig config = load_config(config_path);
  if (overrides.seed && config.scenario) {
    config.scenario->seed = *overrides.seed;
  }
  if (overrides.out_dir) {
    config.output.dir = *overrides.out_dir;
  }
  if (overrides.format) {
    config.output.csv = *overrides.format == "csv";
    config.output.json = *overrides.format == "json";
  }

  const int n = config.scenario ? config.scenario->n : config.external_trace->n;
  const int p = config.scenario ? config.scenario->p : config.external_trace->p;
  auto strategy =
      make_strategy(config.strategy_tag, config.strategy_params, n, p);
  const auto initial = EstimatorState::init(config.theta0, config.p0, p);

  RunRecord record;
  std::vector<Sample> samples;
  std::optional<NoiseProfile> noise = config.analysis.noise;
  const bool with_truth = config.scenario.has_value();
  if (config.scenario) {
    const auto data = generate(*config.scenario);
    record = run(data, *strategy, initial);
    samples.reserve(data.size());
    for (const auto& step_data : data) {
      samples.push_back(step_data.sample);
    }
    if (!noise) {
      noise = empirical_noise_profile(data);
    }
  } else {
    samples = ingest_trace_file(config.external_trace->path, n, p);
    record = detail::run_external(samples, *strategy, initial);
  }

  // Analysis per requested checks.
  nlohmann::json report;
  bool violation = false;
  const auto& checks = config.analysis.checks;
  std::optional<ConditionProfile> profile;
  if (checks.count("conditions") || checks.count("tier") ||
      checks.count("bound") || checks.count("lemma7")) {
    profile = profile_conditions(record.trajectory, config.analysis.window);
    report["profile"] = to_json(*profile);
  }
  if (checks.count("tier") && profile) {
    report["tier"] = std::string(tier_name(classify_stability(*profile)));
  }

  std::optional<double> epsilon;
  if (checks.count("bound") && profile && noise) {
    if (profile->a2_b && profile->a3_a && profile->a4.alpha_bar > 0.0) {
      const auto bound = compute_bound(*profile, *noise);
      epsilon = bound.eps;
      report["bound"] = to_json(bound);
      // eps = 0 means no drift and no noise; the ultimate-bound claim is
      // vacuous there and compliance is not evaluated.
      if (with_truth && bound.eps > 0.0) {
        const auto compliance = check_ultimate_bound(record.check_norm, bound.eps);
        report["bound"]["compliance"] = to_json(compliance);
        if (!compliance.compliant ||
            compliance.exceedances_after_transient > 0) {
          violation = true;
          log << "bound violation: error norm exceeds epsilon after the "
                 "transient\n";
        }
      }
    } else {
      report["bound"] = nullptr;  // conditions absent; no bound available
    }
  }

  nlohmann::json lemma_checks = nlohmann::json::object();
  if (checks.count("lemma5")) {
    double min_gap = std::numeric_limits<double>::infinity();
    for (const auto& entry : record.trajectory) {
      min_gap = std::min(min_gap, entry.diagnostics.delta_v_gap_mineig);
    }
    const double tol = 1e-9 * lemma_tolerance_scale(record.trajectory);
    lemma_checks["lemma5"] = {{"min_gap", min_gap}, {"tolerance", tol}};
    if (min_gap < -tol) {
      violation = true;
      log << "lemma5 violation: decrement bound residual " << min_gap << "\n";
    }
  }
  if (checks.count("lemma7") && profile) {
    if (profile->a1_proper && profile->a2_b && profile->a3_a &&
        profile->a4.is_pe &&
        static_cast<int>(record.trajectory.size()) - profile->k0 >
            config.analysis.window) {
      const auto margins =
          lemma7_check(record.trajectory, *profile, config.analysis.window);
      double min_margin = std::numeric_limits<double>::infinity();
      for (const double m : margins) {
        min_margin = std::min(min_margin, m);
      }
      const double tol = 1e-9 * lemma_tolerance_scale(record.trajectory);
      lemma_checks["lemma7"] = {
          {"window", config.analysis.window},
          {"c_n", lemma7_floor(profile->a4.alpha_bar, *profile->a2_b,
                               profile->a4.beta_bar, config.analysis.window)},
          {"min_margin", min_margin},
          {"count", margins.size()},
          {"tolerance", tol},
      };
      if (min_margin < -tol) {
        violation = true;
        log << "lemma7 violation: window margin " << min_margin << "\n";
      }
    } else {
      lemma_checks["lemma7"] = nullptr;  // conditions A1-A4 not certified
    }
  }
  if (!lemma_checks.empty()) {
    report["lemma_checks"] = lemma_checks;
  }

  if (checks.count("rate-fit") && with_truth) {
    const int last = static_cast<int>(record.tilde_norm.size()) - 1;
    const int start = config.analysis.rate_fit_start.value_or(last / 10);
    const int end = config.analysis.rate_fit_end.value_or(last);
    try {
      report["rate_fit"] = to_json(fit_exponential_rate(record.tilde_norm,
                                                        start, end));
      report["rate_fit"]["k_start"] = start;
      report["rate_fit"]["k_end"] = end;
    } catch (const InsufficientData&) {
      report["rate_fit"] = nullptr;
    }
  }

  // Artifacts.
  const std::filesystem::path dir(config.output.dir);
  std::filesystem::create_directories(dir);
  if (config.output.csv) {
    std::ostringstream trace;
    emit_trace(trace, samples,
               config.scenario &&
                   config.scenario->gamma_kind != GammaKind::Identity);
    detail::write_file(dir / "trace.csv", trace.str());
    detail::write_file(dir / "trajectory.csv",
                       detail::trajectory_csv(record, with_truth));
  }
  if (config.output.json) {
    detail::write_file(dir / "report.json", report.dump(2) + "\n");
  }
  if (config.output.plot_data) {
    detail::write_file(dir / "plot.csv", detail::plot_csv(record, epsilon));
  }

  log << "wrote artifacts to " << dir.string() << "\n";
  return overrides.strict && violation ? 2 : 0;
}

// Certifies persistent excitation of a trace file. When sweep_max is set,
// also reports the smallest window in [1, sweep_max] whose certificate
// clears the tolerance.
inline int certify_pe(const std::string& trace_path, int window, int n, int p,
                      std::optional<int> sweep_max, const std::string& format,
                      std::ostream& out = std::cout) {
  const auto samples = ingest_trace_file(trace_path, n, p);
  std::vector<RectMatrix> weighted;
  weighted.reserve(samples.size());
  for (const auto& s : samples) {
    weighted.push_back(weighted_regressor(s.phi, s.gamma));
  }
  const auto report = certify_excitation(weighted, window);

  nlohmann::json j = to_json(report);
  if (sweep_max) {
    std::optional<int> smallest;
    for (int candidate = 1;
         candidate <= *sweep_max &&
         candidate <= static_cast<int>(weighted.size());
         ++candidate) {
      if (certify_excitation(weighted, candidate).is_pe) {
        smallest = candidate;
        break;
      }
    }
    j["smallest_pe_window"] =
        smallest ? nlohmann::json(*smallest) : nlohmann::json(nullptr);
  }

  if (format == "csv") {
    out << "window,alpha_bar,beta_bar,is_pe,k_start,k_end\n"
        << report.window << ',' << format_double(report.alpha_bar) << ','
        << format_double(report.beta_bar) << ',' << (report.is_pe ? 1 : 0)
        << ',' << report.k_start << ',' << report.k_end << "\n";
  } else {
    out << j.dump(2) << "\n";
  }
  return report.is_pe ? 0 : 1;
}

// Computes the robustness bound from explicit constants:
//   {a, b, alpha_bar, beta_bar, window,
//    delta_theta, delta_y_bar, delta_phi_bar, theta_max}
inline int bound_from_inputs(const std::string& inputs_path, bool eiv,
                             std::ostream& out = std::cout) {
  std::ifstream in(inputs_path);
  if (!in) {
    throw IoError("cannot open bound inputs '" + inputs_path + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bound inputs are not valid JSON: " +
                      std::string(e.what()));
  }
  ConditionProfile profile;
  profile.a1_proper = true;
  profile.a3_a = detail::require_number(j, "a", "bound inputs");
  profile.a2_b = detail::require_number(j, "b", "bound inputs");
  profile.a4.window =
      static_cast<int>(detail::require_number(j, "window", "bound inputs"));
  profile.a4.alpha_bar =
      detail::require_number(j, "alpha_bar", "bound inputs");
  profile.a4.beta_bar = detail::require_number(j, "beta_bar", "bound inputs");
  profile.a4.is_pe = profile.a4.alpha_bar > kPeTolerance;
  NoiseProfile noise;
  noise.delta_theta = j.value("delta_theta", 0.0);
  noise.delta_y_bar = j.value("delta_y_bar", 0.0);
  noise.delta_phi_bar = j.value("delta_phi_bar", 0.0);
  noise.theta_max = j.value("theta_max", 0.0);
  const auto bound =
      eiv ? eiv_bound(profile, noise) : compute_bound(profile, noise);
  out << to_json(bound).dump(2) << "\n";
  return 0;
}

// Recursive-versus-batch check over a configured experiment: runs the
// estimator and the independent batch cost side by side and compares the
// final estimates.
inline int oracle_check(const std::string& config_path,
                        const CliOverrides& overrides,
                        std::ostream& out = std::cout) {
  ExperimentConfig config = load_config(config_path);
  if (overrides.seed && config.scenario) {
    config.scenario->seed = *overrides.seed;
  }
  const int n = config.scenario ? config.scenario->n : config.external_trace->n;
  const int p = config.scenario ? config.scenario->p : config.external_trace->p;
  auto strategy =
      make_strategy(config.strategy_tag, config.strategy_params, n, p);

  std::vector<Sample> samples;
  if (config.scenario) {
    for (const auto& step_data : generate(*config.scenario)) {
      samples.push_back(step_data.sample);
    }
  } else {
    samples = ingest_trace_file(config.external_trace->path, n, p);
  }

  auto state = EstimatorState::init(config.theta0, config.p0, p);
  BatchAccumulator acc(config.p0, config.theta0);
  for (const auto& sample : samples) {
    const auto d = strategy->directive(state, sample);
    acc = batch_accumulate(std::move(acc), sample, d.f, state.theta());
    state = step(state, sample, d.f).state;
  }
  const Vector batch = batch_minimizer(acc);
  const double gap = (batch - state.theta()).norm();
  const double rel = gap / std::max(1.0, state.theta().norm());
  const bool pass = rel <= 1e-8;
  nlohmann::json j{
      {"steps", samples.size()},
      {"recursive_batch_gap", gap},
      {"relative_error", rel},
      {"tolerance", 1e-8},
      {"pass", pass},
  };
  out << j.dump(2) << "\n";
  return pass ? 0 : 3;
}

}  // namespace gfrls
