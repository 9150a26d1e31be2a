#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gfrls/errors.hpp"
#include "gfrls/estimator.hpp"
#include "gfrls/matrix.hpp"

namespace gfrls {

// The forgetting matrix a strategy emits for one step, with its properness
// declaration. declared_proper guarantees min eig(f) >= -psd slack.
struct ForgettingDirective {
  SymMatrix f;
  bool declared_proper;
  std::string strategy_tag;
};

// Produces F_k for each step. Stateful strategies keep explicit private
// memory, so directive() must be called exactly once per estimator step, in
// step order, starting at step 0.
class ForgettingStrategy {
 public:
  virtual ~ForgettingStrategy() = default;
  virtual ForgettingDirective directive(const EstimatorState& state,
                                        const Sample& sample) = 0;
  virtual std::string_view tag() const = 0;
};

namespace detail {

inline void check_unit_interval(double lambda, const char* name) {
  if (!(lambda > 0.0) || lambda > 1.0) {
    throw InvalidParameter(std::string(name) + " = " + std::to_string(lambda) +
                           " outside (0, 1]");
  }
}

// Stateful strategies anchor their memory at step 0 and advance one step per
// directive.
class StepSequenced {
 protected:
  void expect_step(int k) {
    if (k != last_step_ + 1) {
      throw InvalidParameter("strategy memory is at step " +
                             std::to_string(last_step_ + 1) +
                             " but was asked for step " + std::to_string(k));
    }
    last_step_ = k;
  }

 private:
  int last_step_ = -1;
};

}  // namespace detail

// Ordinary recursive least squares: F_k = 0.
class PlainRls final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "plain-rls";

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample&) override {
    return {SymMatrix::zero(state.n()), true, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }
};

// Constant forgetting factor: F_k = (1 - lambda) P_k^{-1}.
class ExponentialForgetting final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "exponential-forgetting";

  explicit ExponentialForgetting(double lambda) : lambda_(lambda) {
    detail::check_unit_interval(lambda, "lambda");
  }

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample&) override {
    return {SymMatrix::from_upper((1.0 - lambda_) * state.info().m()), true,
            std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }
  double lambda() const { return lambda_; }

 private:
  double lambda_;
};

// Per-step forgetting factor: F_k = (1 - lambda_k) P_k^{-1}.
class VariableRateForgetting final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "variable-rate-forgetting";

  explicit VariableRateForgetting(std::function<double(int)> lambda_schedule)
      : schedule_(std::move(lambda_schedule)) {}

  explicit VariableRateForgetting(std::vector<double> lambdas)
      : schedule_([values = std::move(lambdas)](int k) {
          if (k < 0 || k >= static_cast<int>(values.size())) {
            throw InvalidParameter("lambda schedule has no entry for step " +
                                   std::to_string(k));
          }
          return values[static_cast<std::size_t>(k)];
        }) {}

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample&) override {
    const double lambda = schedule_(state.step_index());
    detail::check_unit_interval(lambda, "lambda_k");
    return {SymMatrix::from_upper((1.0 - lambda) * state.info().m()), true,
            std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }

 private:
  std::function<double(int)> schedule_;
};

// Data-dependent updating expressed as variable-rate forgetting through the
// mapping lambda_k = (1 - mu_k) mu_{k-1} / mu_k with mu_{-1} = 1, run
// against the rescaled covariance. mu_k = 0 has no forgetting-factor
// representation (the gain is simply zeroed in the native update) and is
// rejected here; use the native recursion for that case.
class DataDependentUpdating final : public ForgettingStrategy,
                                    detail::StepSequenced {
 public:
  static constexpr std::string_view kTag = "data-dependent-updating";

  explicit DataDependentUpdating(std::function<double(int)> mu_schedule)
      : schedule_(std::move(mu_schedule)) {}

  explicit DataDependentUpdating(std::vector<double> mus)
      : schedule_([values = std::move(mus)](int k) {
          if (k < 0 || k >= static_cast<int>(values.size())) {
            throw InvalidParameter("mu schedule has no entry for step " +
                                   std::to_string(k));
          }
          return values[static_cast<std::size_t>(k)];
        }) {}

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample&) override {
    expect_step(state.step_index());
    const double mu = schedule_(state.step_index());
    if (mu < 0.0 || mu >= 1.0) {
      throw InvalidParameter("mu_k = " + std::to_string(mu) +
                             " outside [0, 1)");
    }
    if (mu == 0.0) {
      throw InvalidParameter(
          "mu_k = 0 leaves the mapped forgetting factor undefined");
    }
    const double lambda = (1.0 - mu) * mu_prev_ / mu;
    mu_prev_ = mu;
    return {SymMatrix::from_upper((1.0 - lambda) * state.info().m()),
            lambda <= 1.0, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }
  double mu_prev() const { return mu_prev_; }

 private:
  std::function<double(int)> schedule_;
  double mu_prev_ = 1.0;
};

// F_k = (1 - lambda)(P_k^{-1} - R_inf). With zero regressors the
// information matrix contracts geometrically toward R_inf. Proper whenever
// P_k^{-1} stays above R_inf, which holds if P_0^{-1} >= R_inf; properness
// is checked numerically each step rather than assumed.
class ExponentialResetting final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "exponential-resetting";

  ExponentialResetting(double lambda, SymMatrix r_inf)
      : lambda_(lambda), r_inf_(std::move(r_inf)) {
    detail::check_unit_interval(lambda, "lambda");
    if (!is_psd_within_tolerance(r_inf_)) {
      throw InvalidParameter("R_inf must be positive semidefinite");
    }
  }

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample&) override {
    if (r_inf_.dim() != state.n()) {
      throw DimensionMismatch("R_inf dimension does not match n");
    }
    SymMatrix f = SymMatrix::from_upper(
        (1.0 - lambda_) * (state.info().m() - r_inf_.m()));
    const bool proper = is_psd_within_tolerance(f);
    return {std::move(f), proper, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }

 private:
  double lambda_;
  SymMatrix r_inf_;
};

// When the criterion fires, F_k = P_k^{-1} - P_inf^{-1} so the next
// information update restarts from P_inf; otherwise F_k = 0. Proper at a
// firing step only if P_k <= P_inf, reported through the properness flag.
class CovarianceResetting final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "covariance-resetting";

  using Criterion = std::function<bool(const EstimatorState&, const Sample&)>;
  using TargetProvider = std::function<SpdMatrix(const EstimatorState&)>;

  CovarianceResetting(Criterion criterion, TargetProvider p_inf)
      : criterion_(std::move(criterion)), p_inf_(std::move(p_inf)) {}

  CovarianceResetting(Criterion criterion, const SpdMatrix& p_inf)
      : CovarianceResetting(std::move(criterion),
                            [p_inf](const EstimatorState&) { return p_inf; }) {}

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample& sample) override {
    if (!criterion_(state, sample)) {
      return {SymMatrix::zero(state.n()), true, std::string(kTag)};
    }
    const SpdMatrix target = p_inf_(state);
    if (target.dim() != state.n()) {
      throw DimensionMismatch("reset target dimension does not match n");
    }
    SymMatrix f = SymMatrix::from_upper(state.info().m() -
                                        spd_inverse(target).m());
    const bool proper = is_psd_within_tolerance(f);
    return {std::move(f), proper, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }

  // Example criteria. The published method leaves the criterion to the
  // application; these two are artifact choices, not published rules.
  static Criterion fire_every(int period) {
    if (period < 1) {
      throw InvalidParameter("reset period must be at least 1");
    }
    return [period](const EstimatorState& s, const Sample&) {
      return s.step_index() > 0 && s.step_index() % period == 0;
    };
  }

  static Criterion fire_when_trace_below(double threshold) {
    if (!(threshold > 0.0)) {
      throw InvalidParameter("trace threshold must be positive");
    }
    return [threshold](const EstimatorState& s, const Sample&) {
      return s.covariance().m().trace() < threshold;
    };
  }

 private:
  Criterion criterion_;
  TargetProvider p_inf_;
};

// Directional forgetting by information matrix decomposition (scalar
// measurements): F_k = (1-lambda) P^{-1} phi^T phi P^{-1} / (phi P^{-1} phi^T)
// when ||phi|| > eps, else 0.
class DirectionalForgettingImd final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "directional-forgetting-imd";

  DirectionalForgettingImd(double lambda, double eps)
      : lambda_(lambda), eps_(eps) {
    detail::check_unit_interval(lambda, "lambda");
    if (!(eps > 0.0)) {
      throw InvalidParameter("eps must be positive");
    }
  }

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample& sample) override {
    if (state.p() != 1) {
      throw UnsupportedDimension(
          "directional forgetting by information matrix decomposition is "
          "published for scalar measurements only");
    }
    const Matrix& phi = sample.phi.m();  // 1 x n
    if (phi.norm() <= eps_) {
      return {SymMatrix::zero(state.n()), true, std::string(kTag)};
    }
    const Vector w = state.info().m() * phi.transpose();
    const double q = (phi * w)(0, 0);  // phi P^{-1} phi^T > 0
    SymMatrix f =
        SymMatrix::from_upper(((1.0 - lambda_) / q) * (w * w.transpose()));
    return {std::move(f), true, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }

 private:
  double lambda_;
  double eps_;
};

// F_k = P_k^{-1} - Lambda_k P_k^{-1} Lambda_k. Well-posed for any
// positive-definite Lambda_k; the construction of Lambda_k itself is left
// to the caller via the provider.
class VariableDirectionForgetting final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "variable-direction-forgetting";

  using LambdaProvider =
      std::function<SpdMatrix(const EstimatorState&, const Sample&)>;

  explicit VariableDirectionForgetting(LambdaProvider provider)
      : provider_(std::move(provider)) {}

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample& sample) override {
    const SpdMatrix lambda = provider_(state, sample);
    if (lambda.dim() != state.n()) {
      throw DimensionMismatch("Lambda_k dimension does not match n");
    }
    SymMatrix f = SymMatrix::from_upper(
        state.info().m() - lambda.m() * state.info().m() * lambda.m());
    const bool proper = is_psd_within_tolerance(f);
    return {std::move(f), proper, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }

 private:
  LambdaProvider provider_;
};

// Directional forgetting for slowly varying parameters (scalar
// measurements): F_k = (1 - beta_{k-1}) phi_{k-1}^T phi_{k-1} with
//   beta_k = mu - (1-mu)/(phi_k P_k phi_k^T)  when phi_k P_k phi_k^T > 0,
//   beta_k = 1                                otherwise,
// where P_k is the covariance of the native recursion, recovered here as
// (P_bar_k^{-1} - F_k)^{-1} from the running state.
class DirectionalForgettingSlow final : public ForgettingStrategy,
                                        detail::StepSequenced {
 public:
  static constexpr std::string_view kTag = "directional-forgetting-slow";

  explicit DirectionalForgettingSlow(double mu) : mu_(mu) {
    detail::check_unit_interval(mu, "mu");
  }

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample& sample) override {
    if (state.p() != 1) {
      throw UnsupportedDimension(
          "slowly-varying directional forgetting is published for scalar "
          "measurements only");
    }
    expect_step(state.step_index());
    const int n = state.n();

    SymMatrix f = prev_phi_.size() == 0
                      ? SymMatrix::zero(n)
                      : SymMatrix::from_upper((1.0 - prev_beta_) *
                                              (prev_phi_.transpose() *
                                               prev_phi_));

    // Native covariance for the beta update.
    const SpdMatrix native_info(SymMatrix::from_upper(state.info().m() - f.m()));
    const Matrix& phi = sample.phi.m();  // 1 x n
    const double s =
        (phi * native_info.solve_matrix(phi.transpose()))(0, 0);
    prev_beta_ = s > 0.0 ? mu_ - (1.0 - mu_) / s : 1.0;
    prev_phi_ = phi;

    return {std::move(f), true, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }
  double prev_beta() const { return prev_beta_; }
  const Matrix& prev_phi() const { return prev_phi_; }

 private:
  double mu_;
  Matrix prev_phi_;       // 1 x n, empty until the first step
  double prev_beta_ = 0.0;
};

// Multiple forgetting (n = 2, p = 1): with the information matrix
// partitioned as [[R1, R12], [R12, R2]],
//   F_k = [[(1-lambda1) R1, R12], [R12, (1-lambda2) R2]]
// so that P^{-1} - F = diag(lambda1 R1, lambda2 R2) > 0. F_k need not be
// positive semidefinite; the flag reports the per-step numeric check.
class MultipleForgetting final : public ForgettingStrategy {
 public:
  static constexpr std::string_view kTag = "multiple-forgetting";

  MultipleForgetting(std::function<double(int)> lambda1_schedule,
                     std::function<double(int)> lambda2_schedule)
      : lambda1_(std::move(lambda1_schedule)),
        lambda2_(std::move(lambda2_schedule)) {}

  MultipleForgetting(double lambda1, double lambda2)
      : MultipleForgetting([lambda1](int) { return lambda1; },
                           [lambda2](int) { return lambda2; }) {}

  ForgettingDirective directive(const EstimatorState& state,
                                const Sample&) override {
    if (state.n() != 2 || state.p() != 1) {
      throw UnsupportedDimension(
          "multiple forgetting is published for n = 2, p = 1 only");
    }
    const int k = state.step_index();
    const double l1 = lambda1_(k);
    const double l2 = lambda2_(k);
    detail::check_unit_interval(l1, "lambda1_k");
    detail::check_unit_interval(l2, "lambda2_k");
    const Matrix& r = state.info().m();
    Matrix f(2, 2);
    f(0, 0) = (1.0 - l1) * r(0, 0);
    f(0, 1) = r(0, 1);
    f(1, 0) = r(0, 1);
    f(1, 1) = (1.0 - l2) * r(1, 1);
    SymMatrix fs = SymMatrix::from_upper(f);
    const bool proper = is_psd_within_tolerance(fs);
    return {std::move(fs), proper, std::string(kTag)};
  }

  std::string_view tag() const override { return kTag; }

 private:
  std::function<double(int)> lambda1_;
  std::function<double(int)> lambda2_;
};

inline const std::array<std::string_view, 10>& strategy_tags() {
  static const std::array<std::string_view, 10> tags = {
      PlainRls::kTag,
      ExponentialForgetting::kTag,
      VariableRateForgetting::kTag,
      DataDependentUpdating::kTag,
      ExponentialResetting::kTag,
      CovarianceResetting::kTag,
      DirectionalForgettingImd::kTag,
      VariableDirectionForgetting::kTag,
      DirectionalForgettingSlow::kTag,
      MultipleForgetting::kTag,
  };
  return tags;
}

}  // namespace gfrls
