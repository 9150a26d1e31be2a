#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gfrls/errors.hpp"
#include "gfrls/estimator.hpp"
#include "gfrls/excitation.hpp"
#include "gfrls/forgetting.hpp"
#include "gfrls/matrix.hpp"

namespace gfrls {

// One executed estimator step with everything the analysis needs: the state
// entering the step, the directive applied, the data consumed, the
// diagnostics, and the state produced.
struct TrajectoryStep {
  EstimatorState before;
  ForgettingDirective directive;
  Sample sample;
  StepDiagnostics diagnostics;
  EstimatorState after;
};

using Trajectory = std::vector<TrajectoryStep>;

// Empirical certificate of the stability/robustness conditions over a
// finite horizon starting at k0:
//   a1_proper : every F_k from k0 on is positive semidefinite
//   a2_b      : tightest b with (P_k^{-1} - F_k)^{-1} <= b I
//   a3_a      : tightest a with a I <= P_k
//   a4        : excitation certificate on the weighted regressors
// The constants are horizon extrema, which give the tightest bound the
// observed data supports; they are not proofs about the infinite tail.
struct ConditionProfile {
  bool a1_proper = false;
  std::optional<double> a2_b;
  std::optional<double> a3_a;
  ExcitationReport a4;
  int k0 = 0;
};

// Bounds on parameter drift, weighted measurement noise, weighted regressor
// noise (in the positive-semidefinite-order sense, i.e. a bound on
// lambda_max(dbar^T dbar)), and the parameter magnitude.
struct NoiseProfile {
  double delta_theta = 0.0;
  double delta_y_bar = 0.0;
  double delta_phi_bar = 0.0;
  double theta_max = 0.0;
};

struct RobustnessBound {
  double a = 0.0;
  double b = 0.0;
  double alpha_bar = 0.0;
  double beta_bar = 0.0;
  int window = 1;      // N
  double delta_n = 0.0;
  double eps_star = 0.0;
  double eps = 0.0;
};

enum class StabilityTier {
  None,
  Lyapunov,
  UniformLyapunov,
  GlobalAsymptotic,
  GlobalUniformExponential,
};

inline std::string_view tier_name(StabilityTier tier) {
  switch (tier) {
    case StabilityTier::None:
      return "none";
    case StabilityTier::Lyapunov:
      return "lyapunov";
    case StabilityTier::UniformLyapunov:
      return "uniform-lyapunov";
    case StabilityTier::GlobalAsymptotic:
      return "global-asymptotic";
    case StabilityTier::GlobalUniformExponential:
      return "global-uniform-exponential";
  }
  return "none";
}

// Certifies the conditions on the supplied horizon. a1_proper is the
// whole-horizon verdict: an improper F_k anywhere makes it false. k0 is the
// earliest index from which every later F_k is proper; the constants are
// extrema over [k0, end], the tightest anchor a suffix certificate could
// use. Callers wanting the suffix verdict can re-profile from k0.
inline ConditionProfile profile_conditions(const Trajectory& trajectory,
                                           int window) {
  if (trajectory.empty()) {
    throw EmptyTrajectory("cannot profile an empty trajectory");
  }
  const int steps = static_cast<int>(trajectory.size());

  std::vector<bool> proper(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    proper[static_cast<std::size_t>(k)] =
        is_psd_within_tolerance(trajectory[static_cast<std::size_t>(k)].directive.f);
  }
  int k0 = steps;
  while (k0 > 0 && proper[static_cast<std::size_t>(k0 - 1)]) {
    --k0;
  }
  if (k0 == steps) {
    k0 = 0;  // no clean suffix; certify constants over the whole horizon
  }

  ConditionProfile out;
  out.a1_proper =
      std::all_of(proper.begin(), proper.end(), [](bool ok) { return ok; });
  out.k0 = k0;

  double b = 0.0;
  double a = std::numeric_limits<double>::infinity();
  bool bounded = true;
  std::vector<RectMatrix> weighted;
  weighted.reserve(static_cast<std::size_t>(steps - k0));
  for (int k = k0; k < steps; ++k) {
    const auto& entry = trajectory[static_cast<std::size_t>(k)];
    const double margin =
        min_eigenvalue(entry.before.info().m() - entry.directive.f.m());
    if (!(margin > 0.0)) {
      bounded = false;
    } else {
      b = std::max(b, 1.0 / margin);
    }
    a = std::min(a, 1.0 / max_eigenvalue(entry.before.info().m()));
    weighted.push_back(entry.diagnostics.weighted_phi);
  }
  // The final state exists in the data; include it in the covariance floor.
  a = std::min(a, 1.0 / max_eigenvalue(trajectory.back().after.info().m()));

  if (bounded && b > 0.0) {
    out.a2_b = b;
  }
  if (a > 0.0 && std::isfinite(a)) {
    out.a3_a = a;
  }
  out.a4 = certify_excitation(weighted, window);
  out.a4.k_start += k0;
  out.a4.k_end += k0;
  return out;
}

// Strongest tier whose sufficient conditions hold:
//   A1+A2          -> Lyapunov
//   A1+A2+A3       -> uniform Lyapunov
//   A1+A2+A4       -> global asymptotic
//   A1+A2+A3+A4    -> global uniform exponential
inline StabilityTier classify_stability(const ConditionProfile& profile) {
  const bool a1 = profile.a1_proper;
  const bool a2 = profile.a2_b.has_value();
  const bool a3 = profile.a3_a.has_value();
  const bool a4 = profile.a4.is_pe;
  if (!(a1 && a2)) {
    return StabilityTier::None;
  }
  if (a3 && a4) {
    return StabilityTier::GlobalUniformExponential;
  }
  if (a4) {
    return StabilityTier::GlobalAsymptotic;
  }
  if (a3) {
    return StabilityTier::UniformLyapunov;
  }
  return StabilityTier::Lyapunov;
}

// Ultimate-bound constants:
//   Delta_N = (N/(a alpha))(1 + b beta)[1 + ((N-1)/2)(b beta)^2] - 1
//   eps*    = max{1, 1/sqrt(a)} (Delta_N + sqrt(Delta_N + Delta_N^2)) N
//   eps     = eps* [delta_theta + b sqrt(beta)(sqrt(delta_phi) theta_max + delta_y)]
inline RobustnessBound compute_bound(const ConditionProfile& profile,
                                     const NoiseProfile& noise) {
  if (!profile.a2_b.has_value()) {
    throw MissingCondition("bound needs the (P^{-1}-F)^{-1} upper bound b");
  }
  if (!profile.a3_a.has_value()) {
    throw MissingCondition("bound needs the covariance floor a");
  }
  if (!(profile.a4.alpha_bar > 0.0)) {
    throw MissingCondition("bound needs a positive excitation lower bound");
  }
  const double a = *profile.a3_a;
  const double b = *profile.a2_b;
  const double alpha = profile.a4.alpha_bar;
  const double beta = profile.a4.beta_bar;
  const double n_window = static_cast<double>(profile.a4.window);

  const double bb = b * beta;
  const double delta_n =
      (n_window / (a * alpha)) * (1.0 + bb) *
          (1.0 + 0.5 * (n_window - 1.0) * bb * bb) -
      1.0;
  const double eps_star = std::max(1.0, 1.0 / std::sqrt(a)) *
                          (delta_n + std::sqrt(delta_n + delta_n * delta_n)) *
                          n_window;
  const double eps =
      eps_star * (noise.delta_theta +
                  b * std::sqrt(beta) *
                      (std::sqrt(noise.delta_phi_bar) * noise.theta_max +
                       noise.delta_y_bar));
  return RobustnessBound{a,       b,        alpha, beta,
                         profile.a4.window, delta_n, eps_star, eps};
}

// Errors-in-variables specialization: fixed parameters, so the drift term
// drops and eps = eps* b sqrt(beta) (sqrt(delta_phi) theta_max + delta_y).
inline RobustnessBound eiv_bound(const ConditionProfile& profile,
                                 const NoiseProfile& noise) {
  NoiseProfile fixed = noise;
  fixed.delta_theta = 0.0;
  return compute_bound(profile, fixed);
}

// c_N = (alpha/N)(1 + b beta)^{-1} [1 + ((N-1)/2)(b beta)^2]^{-1}, the
// guaranteed floor on the N-step Lyapunov decrement.
inline double lemma7_floor(double alpha_bar, double b, double beta_bar,
                           int window) {
  const double n = static_cast<double>(window);
  const double bb = b * beta_bar;
  return (alpha_bar / n) / (1.0 + bb) / (1.0 + 0.5 * (n - 1.0) * bb * bb);
}

// For each window start k in [k0, steps - N], the margin
//   lambda_min(Delta^N V_k) - c_N
// where Delta^N V_k = P_k^{-1} - (M_{k+N-1} ... M_k)^T P_{k+N}^{-1}
// (M_{k+N-1} ... M_k). All margins should be nonnegative up to rounding
// scaled by the largest information matrix.
inline std::vector<double> lemma7_check(const Trajectory& trajectory,
                                        const ConditionProfile& profile,
                                        int window) {
  if (!profile.a1_proper || !profile.a2_b.has_value() ||
      !profile.a3_a.has_value() || !profile.a4.is_pe) {
    throw MissingCondition("the N-step decrement floor needs A1 through A4");
  }
  const int steps = static_cast<int>(trajectory.size());
  if (window < 1 || steps - profile.k0 < window + 1) {
    throw InvalidParameter("trajectory too short for window " +
                           std::to_string(window));
  }
  const double c_n = lemma7_floor(profile.a4.alpha_bar, *profile.a2_b,
                                  profile.a4.beta_bar, window);

  const auto info_at = [&](int k) -> const Matrix& {
    return k < steps ? trajectory[static_cast<std::size_t>(k)].before.info().m()
                     : trajectory.back().after.info().m();
  };

  std::vector<double> margins;
  margins.reserve(static_cast<std::size_t>(steps - window - profile.k0 + 1));
  for (int k = profile.k0; k + window <= steps; ++k) {
    Matrix product =
        trajectory[static_cast<std::size_t>(k)].diagnostics.m_matrix;
    for (int i = 1; i < window; ++i) {
      product =
          trajectory[static_cast<std::size_t>(k + i)].diagnostics.m_matrix *
          product;
    }
    const Matrix delta_nv =
        info_at(k) - product.transpose() * info_at(k + window) * product;
    margins.push_back(
        min_eigenvalue(SymMatrix::from_upper(delta_nv).m()) - c_n);
  }
  return margins;
}

// Rounding scale for the lemma margins: matrix products of window length
// amplify rounding in proportion to the information matrix magnitude.
inline double lemma_tolerance_scale(const Trajectory& trajectory) {
  double scale = 1.0;
  for (const auto& entry : trajectory) {
    scale = std::max(scale, max_eigenvalue(entry.before.info().m()));
  }
  if (!trajectory.empty()) {
    scale = std::max(scale, max_eigenvalue(trajectory.back().after.info().m()));
  }
  return scale;
}

}  // namespace gfrls
