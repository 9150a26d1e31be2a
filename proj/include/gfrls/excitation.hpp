#pragma once

#include <string>
#include <vector>

#include "gfrls/errors.hpp"
#include "gfrls/matrix.hpp"

namespace gfrls {

// alpha below this is treated as numerically zero excitation.
inline constexpr double kPeTolerance = 1e-9;

// Empirical persistent-excitation and boundedness certificate over a finite
// horizon. This certifies the examined windows only; it says nothing about
// the infinite tail of the sequence.
struct ExcitationReport {
  int window = 1;          // N
  double alpha_bar = 0.0;  // min over window starts of lambda_min(window sum)
  double beta_bar = 0.0;   // max over steps of lambda_max(phi^T phi)
  bool is_pe = false;
  int k_start = 0;
  int k_end = 0;  // inclusive
};

// phibar = Gamma^{-1/2} phi, so that phibar^T phibar = phi^T Gamma^{-1} phi.
inline RectMatrix weighted_regressor(const RectMatrix& phi,
                                     const SpdMatrix& gamma) {
  if (gamma.dim() != phi.rows()) {
    throw DimensionMismatch("weighting dimension does not match regressor rows");
  }
  return RectMatrix(spd_inverse_sqrt(gamma).m() * phi.m());
}

// Scans every length-N window of Gram matrices with an incremental running
// sum. The unit tests hold this to a brute-force window assembly.
inline ExcitationReport certify_excitation(const std::vector<RectMatrix>& seq,
                                           int window) {
  if (seq.empty()) {
    throw EmptySequence("cannot certify an empty regressor sequence");
  }
  const int len = static_cast<int>(seq.size());
  const int p = seq.front().rows();
  const int n = seq.front().cols();
  for (const auto& phi : seq) {
    if (phi.rows() != p || phi.cols() != n) {
      throw DimensionMismatch("regressor sequence shapes are inconsistent");
    }
  }
  if (window < 1 || window > len) {
    throw InvalidParameter("window " + std::to_string(window) +
                           " outside [1, " + std::to_string(len) + "]");
  }

  std::vector<Matrix> grams;
  grams.reserve(seq.size());
  double beta_bar = 0.0;
  for (const auto& phi : seq) {
    grams.push_back(SymMatrix::from_upper(phi.m().transpose() * phi.m()).m());
    beta_bar = std::max(beta_bar, max_eigenvalue(grams.back()));
  }

  Matrix window_sum = Matrix::Zero(n, n);
  for (int i = 0; i < window; ++i) {
    window_sum += grams[static_cast<std::size_t>(i)];
  }
  double alpha_bar = min_eigenvalue(window_sum);
  for (int k = 1; k + window <= len; ++k) {
    window_sum += grams[static_cast<std::size_t>(k + window - 1)] -
                  grams[static_cast<std::size_t>(k - 1)];
    alpha_bar = std::min(alpha_bar, min_eigenvalue(window_sum));
  }
  alpha_bar = std::max(alpha_bar, 0.0);

  return ExcitationReport{window, alpha_bar, beta_bar,
                          alpha_bar > kPeTolerance, 0, len - 1};
}

// Transfers a certificate on unweighted regressors to the weighted sequence
// under gamma_min I <= Gamma_k <= gamma_max I: alpha/gamma_max and
// beta/gamma_min with the same window. These transferred constants are
// guaranteed but typically loose; certifying the weighted sequence directly
// is preferable.
inline ExcitationReport transfer_bounds(const ExcitationReport& report,
                                        double gamma_min, double gamma_max) {
  if (!(gamma_min > 0.0) || !(gamma_min <= gamma_max)) {
    throw InvalidParameter("need 0 < gamma_min <= gamma_max");
  }
  ExcitationReport out = report;
  out.alpha_bar = report.alpha_bar / gamma_max;
  out.beta_bar = report.beta_bar / gamma_min;
  out.is_pe = out.alpha_bar > kPeTolerance;
  return out;
}

}  // namespace gfrls
