#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gfrls/errors.hpp"
#include "gfrls/matrix.hpp"

namespace gfrls {

// One time step of data: measurement y, regressor phi (p x n), and the
// positive-definite weighting Gamma.
struct Sample {
  Sample(Vector y_in, RectMatrix phi_in, SpdMatrix gamma_in)
      : y(std::move(y_in)), phi(std::move(phi_in)), gamma(std::move(gamma_in)) {
    if (y.size() != phi.rows() || gamma.dim() != phi.rows()) {
      throw DimensionMismatch("sample measurement/regressor/weight shapes disagree");
    }
  }

  // Convenience for the common identity-weighted case.
  Sample(Vector y_in, RectMatrix phi_in)
      : y(std::move(y_in)),
        phi(std::move(phi_in)),
        gamma(SpdMatrix::identity(phi.rows())) {
    if (y.size() != phi.rows()) {
      throw DimensionMismatch("sample measurement/regressor shapes disagree");
    }
  }

  Vector y;
  RectMatrix phi;
  SpdMatrix gamma;
};

// Estimator state after k steps: the parameter estimate and the information
// matrix P_k^{-1}. The information matrix is the canonical representation;
// the covariance is materialized by solves, never maintained in parallel.
class EstimatorState {
 public:
  static EstimatorState init(const Vector& theta0, const SpdMatrix& p0,
                             int measurement_dim) {
    if (theta0.size() != p0.dim()) {
      throw DimensionMismatch("theta0 length does not match P0 dimension");
    }
    detail::check_dim(measurement_dim, "measurement");
    if (!theta0.allFinite()) {
      throw InvalidParameter("theta0 has non-finite entries");
    }
    return EstimatorState(0, theta0, spd_inverse(p0), measurement_dim);
  }

  int step_index() const { return step_index_; }
  const Vector& theta() const { return theta_; }
  const SpdMatrix& info() const { return info_; }
  int n() const { return static_cast<int>(theta_.size()); }
  int p() const { return p_; }

  // Covariance P_k, materialized on demand.
  SpdMatrix covariance() const { return spd_inverse(info_); }

  EstimatorState advanced(Vector theta, SpdMatrix info) const {
    return EstimatorState(step_index_ + 1, std::move(theta), std::move(info), p_);
  }

 private:
  EstimatorState(int k, Vector theta, SpdMatrix info, int p)
      : step_index_(k), theta_(std::move(theta)), info_(std::move(info)), p_(p) {}

  int step_index_;
  Vector theta_;
  SpdMatrix info_;
  int p_;
};

// Per-step observability into the update: the error-propagation matrix M_k,
// the well-posedness margin lambda_min(P_k^{-1} - F_k), the properness of
// F_k, the residual of the one-step Lyapunov decrement lower bound, and the
// weighted regressor.
struct StepDiagnostics {
  Matrix m_matrix;
  double well_posed_margin = 0.0;
  bool proper = false;
  double delta_v_gap_mineig = 0.0;
  RectMatrix weighted_phi;
};

struct StepResult {
  EstimatorState state;
  StepDiagnostics diagnostics;
};

// One GF-RLS step:
//   P_{k+1}^{-1} = P_k^{-1} - F_k + phi^T Gamma^{-1} phi
//   theta_{k+1}  = theta_k + P_{k+1} phi^T Gamma^{-1} (y - phi theta_k)
// The well-posedness condition P_k^{-1} - F_k > 0 is checked every step and
// never trusted from strategy contracts.
inline StepResult step(const EstimatorState& state, const Sample& sample,
                       const SymMatrix& f) {
  const int n = state.n();
  const int p = state.p();
  if (sample.phi.rows() != p || sample.phi.cols() != n) {
    throw DimensionMismatch("regressor is " + std::to_string(sample.phi.rows()) +
                            "x" + std::to_string(sample.phi.cols()) +
                            ", estimator expects " + std::to_string(p) + "x" +
                            std::to_string(n));
  }
  if (f.dim() != n) {
    throw DimensionMismatch("forgetting matrix dimension does not match n");
  }

  // Difference of exactly-symmetric storage stays exactly symmetric.
  const Matrix posed = state.info().m() - f.m();
  const double margin = min_eigenvalue(posed);
  const double tol = kSpdTolerance * posed.diagonal().maxCoeff();
  if (!(margin > tol)) {
    throw IllPosedForgetting(
        "P^{-1} - F has minimum eigenvalue " + std::to_string(margin) +
        " at step " + std::to_string(state.step_index()));
  }

  Matrix phi_bar;
  Vector y_bar;
  // Identity weighting short-circuits the square-root weighting exactly.
  if (sample.gamma.m().isIdentity(0.0)) {
    phi_bar = sample.phi.m();
    y_bar = sample.y;
  } else {
    const SpdMatrix weight = spd_inverse_sqrt(sample.gamma);
    phi_bar = weight.m() * sample.phi.m();
    y_bar = weight.m() * sample.y;
  }
  const SymMatrix gram = SymMatrix::from_upper(phi_bar.transpose() * phi_bar);

  const SpdMatrix new_info(SymMatrix::from_upper(posed + gram.m()));
  const Vector residual = y_bar - phi_bar * state.theta();
  const Vector gain_rhs = phi_bar.transpose() * residual;
  const Vector theta_next = state.theta() + new_info.solve(gain_rhs);

  StepDiagnostics diag{
      Matrix(Matrix::Identity(n, n) - new_info.solve_matrix(gram.m())),
      margin,
      is_psd_within_tolerance(f),
      0.0,
      RectMatrix(phi_bar),
  };

  // Residual of the one-step decrement bound
  //   DeltaV_k >= F_k + phibar^T phibar / (1 + lmax(phibar phibar^T) * lmax((P^{-1}-F)^{-1}))
  // with DeltaV_k = -M_k^T P_{k+1}^{-1} M_k + P_k^{-1}.
  const Matrix delta_v = state.info().m() -
                         diag.m_matrix.transpose() * new_info.m() * diag.m_matrix;
  const double denom = 1.0 + max_eigenvalue(gram.m()) / margin;
  const Matrix gap = delta_v - f.m() - gram.m() / denom;
  diag.delta_v_gap_mineig = min_eigenvalue(SymMatrix::from_upper(gap).m());

  return StepResult{state.advanced(theta_next, new_info), std::move(diag)};
}

// Running batch form of the GF-RLS cost: H_k and b_k such that the cost
// after k steps equals theta^T H theta + 2 b^T theta + const, with the
// constant dropped (it does not move the argmin). The minimizer -H^{-1} b
// is the independent check on the recursion.
class BatchAccumulator {
 public:
  BatchAccumulator(const SpdMatrix& p0, const Vector& theta0)
      : h_(spd_inverse(p0).sym()), b_(prior_b(h_, theta0)) {}

  const SymMatrix& h() const { return h_; }
  const Vector& b() const { return b_; }
  const std::vector<Vector>& theta_history() const { return theta_history_; }
  int steps_consumed() const { return static_cast<int>(theta_history_.size()); }

  friend BatchAccumulator batch_accumulate(BatchAccumulator acc,
                                           const Sample& sample,
                                           const SymMatrix& f,
                                           const Vector& theta_i);

 private:
  static Vector prior_b(const SymMatrix& h, const Vector& theta0) {
    if (theta0.size() != h.dim()) {
      throw DimensionMismatch("theta0 length does not match P0 dimension");
    }
    return -(h.m() * theta0);
  }

  SymMatrix h_;
  Vector b_;
  std::vector<Vector> theta_history_;
};

// Advances the batch cost by one step:
//   H_k = H_{k-1} - F_k + phi^T Gamma^{-1} phi
//   b_k = b_{k-1} - phi^T Gamma^{-1} y + F_k theta_k
// theta_i is the recursive estimate entering step i.
inline BatchAccumulator batch_accumulate(BatchAccumulator acc,
                                         const Sample& sample,
                                         const SymMatrix& f,
                                         const Vector& theta_i) {
  const int n = acc.h_.dim();
  if (sample.phi.cols() != n || f.dim() != n || theta_i.size() != n) {
    throw DimensionMismatch("batch accumulation shapes do not conform");
  }
  Matrix phi_bar;
  Vector y_bar;
  if (sample.gamma.m().isIdentity(0.0)) {
    phi_bar = sample.phi.m();
    y_bar = sample.y;
  } else {
    const SpdMatrix weight = spd_inverse_sqrt(sample.gamma);
    phi_bar = weight.m() * sample.phi.m();
    y_bar = weight.m() * sample.y;
  }

  acc.h_ = SymMatrix::from_upper(acc.h_.m() - f.m() +
                                 phi_bar.transpose() * phi_bar);
  acc.b_ += -(phi_bar.transpose() * y_bar) + f.m() * theta_i;
  acc.theta_history_.push_back(theta_i);
  return acc;
}

// Global minimizer -H_k^{-1} b_k of the accumulated cost. Fails when the
// accumulated H has lost positive definiteness, i.e. the cost no longer has
// a unique minimizer.
inline Vector batch_minimizer(const BatchAccumulator& acc) {
  return quadratic_minimizer(SpdMatrix(acc.h()), acc.b());
}

}  // namespace gfrls
