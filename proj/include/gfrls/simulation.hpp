#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gfrls/errors.hpp"
#include "gfrls/estimator.hpp"
#include "gfrls/forgetting.hpp"
#include "gfrls/guarantees.hpp"
#include "gfrls/matrix.hpp"

namespace gfrls {

enum class RegressorKind {
  SinusoidalPe,  // incommensurate unit-amplitude sinusoids
  RandomPe,      // entries uniform in [-1, 1]
  Constant,      // all-ones matrix
  Zero,
  CustomTrace,  // supplied externally, never generated
};

enum class GammaKind {
  Identity,
  DiagonalSchedule,  // deterministic diagonal entries in [0.5, 1.5]
};

struct ScenarioSpec {
  int n = 1;
  int p = 1;
  int horizon = 100;
  Vector theta_true0;
  double walk_bound = 0.0;       // ||delta_theta_k|| <= walk_bound
  double meas_noise_bound = 0.0; // ||delta_y_k|| <= meas_noise_bound
  double reg_noise_bound = 0.0;  // sigma_max(delta_phi_k) <= reg_noise_bound
  RegressorKind regressor_kind = RegressorKind::SinusoidalPe;
  GammaKind gamma_kind = GammaKind::Identity;
  std::uint64_t seed = 0;
};

// One generated step: the sample the estimator sees plus the ground truth
// and noise realizations behind it.
struct GeneratedStep {
  Sample sample;
  Vector theta_true;
  Vector delta_theta;
  Vector delta_y;
  Matrix delta_phi;
};

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

// Deterministic draws independent of the standard library's distribution
// implementations, so a seed pins the trace bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  // Uniform draw from the closed Euclidean ball of the given radius.
  // Radius zero consumes no entropy.
  Vector ball(int dim, double radius) {
    if (radius == 0.0) {
      return Vector::Zero(dim);
    }
    Vector direction(dim);
    double norm_sq = 0.0;
    do {
      norm_sq = 0.0;
      for (int i = 0; i < dim; ++i) {
        direction(i) = gaussian();
        norm_sq += direction(i) * direction(i);
      }
    } while (norm_sq == 0.0);
    const double r = radius * std::pow(uniform(), 1.0 / dim);
    return direction * (r / std::sqrt(norm_sq));
  }

  // Matrix draw uniform in the Frobenius ball; the spectral norm is then
  // bounded by the radius as well.
  Matrix ball_matrix(int rows, int cols, double radius) {
    if (radius == 0.0) {
      return Matrix::Zero(rows, cols);
    }
    const Vector flat = ball(rows * cols, radius);
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        out(i, j) = flat(i * cols + j);
      }
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline double sinusoid_frequency(int j) {
  // Square roots of distinct primes give pairwise incommensurate rates.
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                               37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
                               83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
  const int count = static_cast<int>(sizeof(primes) / sizeof(primes[0]));
  return std::sqrt(static_cast<double>(primes[j % count])) *
         (1.0 + j / count);
}

inline Matrix sinusoidal_regressor(int k, int p, int n) {
  Matrix phi(p, n);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < n; ++j) {
      const double phase = 0.61803398875 * (i * n + j + 1);
      phi(i, j) = std::sin(sinusoid_frequency(j) * k + phase);
    }
  }
  return phi;
}

inline SpdMatrix gamma_for(const ScenarioSpec& spec, int k) {
  if (spec.gamma_kind == GammaKind::Identity) {
    return SpdMatrix::identity(spec.p);
  }
  Matrix g = Matrix::Zero(spec.p, spec.p);
  for (int j = 0; j < spec.p; ++j) {
    g(j, j) = 1.0 + 0.5 * std::sin(0.37 * k + 0.9 * j);
  }
  return SpdMatrix(SymMatrix::from_upper(g));
}

}  // namespace detail

// Generates the scenario deterministically from the seed:
//   theta_true_{k+1} = theta_true_k + delta_theta_k
//   y_k = (phi_k + delta_phi_k) theta_true_k + delta_y_k
// with all noise drawn uniformly in balls of the stated radii, so the
// bounds hold exactly by construction.
inline std::vector<GeneratedStep> generate(const ScenarioSpec& spec) {
  if (spec.horizon < 1) {
    throw InvalidParameter("horizon must be at least 1");
  }
  detail::check_dim(spec.n, "parameter");
  detail::check_dim(spec.p, "measurement");
  if (spec.theta_true0.size() != spec.n) {
    throw InvalidParameter("theta_true0 length does not match n");
  }
  if (spec.walk_bound < 0.0 || spec.meas_noise_bound < 0.0 ||
      spec.reg_noise_bound < 0.0) {
    throw InvalidParameter("noise bounds must be nonnegative");
  }
  if (spec.regressor_kind == RegressorKind::CustomTrace) {
    throw InvalidParameter("custom traces are ingested, not generated");
  }

  detail::Rng rng(spec.seed);
  std::vector<GeneratedStep> steps;
  steps.reserve(static_cast<std::size_t>(spec.horizon));
  Vector theta_true = spec.theta_true0;

  for (int k = 0; k < spec.horizon; ++k) {
    Matrix phi;
    switch (spec.regressor_kind) {
      case RegressorKind::SinusoidalPe:
        phi = detail::sinusoidal_regressor(k, spec.p, spec.n);
        break;
      case RegressorKind::RandomPe:
        phi.resize(spec.p, spec.n);
        for (int i = 0; i < spec.p; ++i) {
          for (int j = 0; j < spec.n; ++j) {
            phi(i, j) = rng.uniform(-1.0, 1.0);
          }
        }
        break;
      case RegressorKind::Constant:
        phi = Matrix::Ones(spec.p, spec.n);
        break;
      case RegressorKind::Zero:
        phi = Matrix::Zero(spec.p, spec.n);
        break;
      case RegressorKind::CustomTrace:
        break;  // rejected above
    }

    const Vector delta_theta = rng.ball(spec.n, spec.walk_bound);
    const Vector delta_y = rng.ball(spec.p, spec.meas_noise_bound);
    const Matrix delta_phi =
        rng.ball_matrix(spec.p, spec.n, spec.reg_noise_bound);
    const Vector y = (phi + delta_phi) * theta_true + delta_y;

    steps.push_back(GeneratedStep{
        Sample(y, RectMatrix(phi), detail::gamma_for(spec, k)),
        theta_true, delta_theta, delta_y, delta_phi});
    theta_true += delta_theta;
  }
  return steps;
}

// Tightest noise constants the generated data supports: empirical maxima of
// the weighted noise norms and the parameter magnitude.
inline NoiseProfile empirical_noise_profile(
    const std::vector<GeneratedStep>& steps) {
  NoiseProfile out;
  for (const auto& step : steps) {
    const SpdMatrix w = spd_inverse_sqrt(step.sample.gamma);
    out.delta_theta = std::max(out.delta_theta, step.delta_theta.norm());
    out.delta_y_bar = std::max(out.delta_y_bar, (w.m() * step.delta_y).norm());
    const double s = sigma_max(w.m() * step.delta_phi);
    out.delta_phi_bar = std::max(out.delta_phi_bar, s * s);
    out.theta_max = std::max(out.theta_max, step.theta_true.norm());
  }
  return out;
}

// Full run of one estimator/strategy pair over a generated scenario.
// Per-step arrays have horizon + 1 entries: the estimate after the final
// update is part of the outcome.
struct RunRecord {
  Trajectory trajectory;
  std::vector<Vector> theta_estimate;  // theta_k, k = 0..K
  std::vector<Vector> theta_true;      // theta_true_k, k = 0..K
  std::vector<double> tilde_norm;      // ||theta_k - theta_true_k||
  std::vector<double> check_norm;      // ||theta_k - theta_true_{k-1}||
};

inline RunRecord run(const std::vector<GeneratedStep>& steps,
                     ForgettingStrategy& strategy,
                     const EstimatorState& initial) {
  if (steps.empty()) {
    throw InvalidParameter("scenario has no steps");
  }
  RunRecord record;
  record.trajectory.reserve(steps.size());
  record.theta_estimate.reserve(steps.size() + 1);
  record.theta_true.reserve(steps.size() + 1);
  record.tilde_norm.reserve(steps.size() + 1);
  record.check_norm.reserve(steps.size() + 1);

  EstimatorState state = initial;
  // theta_true_{-1} is taken as theta_true_0 for the delayed error at k = 0.
  Vector theta_true_prev = steps.front().theta_true;
  for (const auto& step_data : steps) {
    record.theta_estimate.push_back(state.theta());
    record.theta_true.push_back(step_data.theta_true);
    record.tilde_norm.push_back((state.theta() - step_data.theta_true).norm());
    record.check_norm.push_back((state.theta() - theta_true_prev).norm());

    ForgettingDirective directive = strategy.directive(state, step_data.sample);
    StepResult result = step(state, step_data.sample, directive.f);
    record.trajectory.push_back(TrajectoryStep{state, std::move(directive),
                                               step_data.sample,
                                               std::move(result.diagnostics),
                                               result.state});
    theta_true_prev = step_data.theta_true;
    state = std::move(result.state);
  }

  const auto& last = steps.back();
  record.theta_estimate.push_back(state.theta());
  record.theta_true.push_back(last.theta_true + last.delta_theta);
  record.tilde_norm.push_back(
      (state.theta() - record.theta_true.back()).norm());
  record.check_norm.push_back((state.theta() - last.theta_true).norm());
  return record;
}

struct RateFit {
  double alpha_fit = 0.0;
  double beta_fit = 0.0;
  double r_squared = 0.0;
};

// Least-squares line through log||error_k|| on [k_start, k_end]. For a
// geometric decay alpha beta^{-k} the fit recovers beta exactly; beta_fit
// above 1 means decay.
inline RateFit fit_exponential_rate(const std::vector<double>& error_norms,
                                    int k_start, int k_end) {
  const int len = static_cast<int>(error_norms.size());
  if (k_start < 0 || k_end >= len || k_end - k_start + 1 < 3) {
    throw InsufficientData("rate fit needs at least 3 in-range points");
  }
  const int count = k_end - k_start + 1;
  double mean_k = 0.0;
  double mean_y = 0.0;
  for (int k = k_start; k <= k_end; ++k) {
    mean_k += k;
    mean_y += std::log(std::max(error_norms[static_cast<std::size_t>(k)],
                                1e-300));
  }
  mean_k /= count;
  mean_y /= count;
  double skk = 0.0;
  double sky = 0.0;
  double syy = 0.0;
  for (int k = k_start; k <= k_end; ++k) {
    const double dk = k - mean_k;
    const double dy = std::log(std::max(error_norms[static_cast<std::size_t>(k)],
                                        1e-300)) -
                      mean_y;
    skk += dk * dk;
    sky += dk * dy;
    syy += dy * dy;
  }
  const double slope = sky / skk;
  const double intercept = mean_y - slope * mean_k;
  double r_squared = 1.0;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (int k = k_start; k <= k_end; ++k) {
      const double y = std::log(std::max(
          error_norms[static_cast<std::size_t>(k)], 1e-300));
      const double fit = intercept + slope * k;
      ss_res += (y - fit) * (y - fit);
    }
    r_squared = 1.0 - ss_res / syy;
  }
  return RateFit{std::exp(intercept), std::exp(-slope), r_squared};
}

// V(k, theta_k - theta) = (theta_k - theta)^T P_k^{-1} (theta_k - theta)
// along the trajectory, including the final state. For proper strategies on
// noiseless fixed-parameter data this sequence never increases.
inline std::vector<double> lyapunov_sequence(const Trajectory& trajectory,
                                             const Vector& theta_fixed) {
  std::vector<double> v;
  v.reserve(trajectory.size() + 1);
  for (const auto& entry : trajectory) {
    const Vector err = entry.before.theta() - theta_fixed;
    v.push_back(err.dot(entry.before.info().m() * err));
  }
  if (!trajectory.empty()) {
    const Vector err = trajectory.back().after.theta() - theta_fixed;
    v.push_back(err.dot(trajectory.back().after.info().m() * err));
  }
  return v;
}

struct BoundCompliance {
  double epsilon = 0.0;
  int transient = 0;  // smallest index from which every later error is < eps
  int exceedances_after_transient = 0;
  bool compliant = false;  // transient exists within the horizon
};

inline BoundCompliance check_ultimate_bound(
    const std::vector<double>& check_norms, double epsilon) {
  BoundCompliance out;
  out.epsilon = epsilon;
  int transient = static_cast<int>(check_norms.size());
  for (int k = static_cast<int>(check_norms.size()) - 1; k >= 0; --k) {
    if (check_norms[static_cast<std::size_t>(k)] >= epsilon) {
      break;
    }
    transient = k;
  }
  out.transient = transient;
  out.compliant = transient < static_cast<int>(check_norms.size());
  for (std::size_t k = static_cast<std::size_t>(transient);
       k < check_norms.size(); ++k) {
    if (check_norms[k] >= epsilon) {
      ++out.exceedances_after_transient;
    }
  }
  return out;
}

}  // namespace gfrls
