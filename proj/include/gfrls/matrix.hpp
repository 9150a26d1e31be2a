#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gfrls/errors.hpp"

namespace gfrls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Small dense kernel: dimensions are capped, this is not a BLAS replacement.
inline constexpr int kMaxDim = 64;

// Cholesky pivots must exceed this fraction of the largest diagonal entry
// for a matrix to be accepted as positive definite.
inline constexpr double kSpdTolerance = 1e-12;

// Relative asymmetry above this is a caller bug, not rounding noise.
inline constexpr double kSymTolerance = 1e-9;

// Slack used when declaring a symmetric matrix positive semidefinite.
inline constexpr double kPsdTolerance = 1e-10;

namespace detail {

inline void check_dim(int value, const char* name) {
  if (value < 1 || value > kMaxDim) {
    throw InvalidParameter(std::string(name) + " dimension " +
                           std::to_string(value) + " outside [1, " +
                           std::to_string(kMaxDim) + "]");
  }
}

inline void check_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw InvalidParameter(std::string(name) + " has non-finite entries");
  }
}

// Mirrors the upper triangle onto the lower, making entry (i,j) and (j,i)
// bit-identical.
inline Matrix mirror_upper(const Matrix& m) {
  Matrix out = m;
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < i; ++j) {
      out(i, j) = out(j, i);
    }
  }
  return out;
}

}  // namespace detail

class RectMatrix {
 public:
  RectMatrix(Matrix m) : m_(std::move(m)) {
    detail::check_dim(static_cast<int>(m_.rows()), "row");
    detail::check_dim(static_cast<int>(m_.cols()), "column");
    detail::check_finite(m_, "RectMatrix");
  }

  int rows() const { return static_cast<int>(m_.rows()); }
  int cols() const { return static_cast<int>(m_.cols()); }
  const Matrix& m() const { return m_; }

 private:
  Matrix m_;
};

// Symmetric matrix stored exactly symmetric by construction from the upper
// triangle. Asymmetric input is rejected, never silently symmetrized.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m) : m_(checked(m)) {}

  static SymMatrix zero(int n) {
    detail::check_dim(n, "matrix");
    return SymMatrix(Matrix::Zero(n, n), FromUpperTag{});
  }

  static SymMatrix identity(int n) {
    detail::check_dim(n, "matrix");
    return SymMatrix(Matrix::Identity(n, n), FromUpperTag{});
  }

  // Takes the upper triangle as authoritative without an asymmetry check.
  // For products like B^T B whose asymmetry is pure rounding.
  static SymMatrix from_upper(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("symmetric matrix must be square");
    }
    detail::check_dim(static_cast<int>(m.rows()), "matrix");
    detail::check_finite(m, "SymMatrix");
    return SymMatrix(detail::mirror_upper(m), FromUpperTag{});
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& m() const { return m_; }

 private:
  struct FromUpperTag {};
  SymMatrix(Matrix m, FromUpperTag) : m_(std::move(m)) {}

  static Matrix checked(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("symmetric matrix must be square");
    }
    detail::check_dim(static_cast<int>(m.rows()), "matrix");
    detail::check_finite(m, "SymMatrix");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymTolerance * scale) {
      throw InvalidParameter("matrix asymmetry " + std::to_string(asym) +
                             " exceeds relative tolerance");
    }
    return detail::mirror_upper(m);
  }

  Matrix m_;
};

// Symmetric positive-definite matrix with a cached Cholesky factor.
// Construction fails unless every pivot clears kSpdTolerance relative to
// the largest diagonal entry and the factor reconstructs the input.
class SpdMatrix {
 public:
  explicit SpdMatrix(const SymMatrix& s) : sym_(s), llt_(factor(sym_)) {}
  explicit SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}

  static SpdMatrix identity(int n) { return SpdMatrix(SymMatrix::identity(n)); }

  int dim() const { return sym_.dim(); }
  const Matrix& m() const { return sym_.m(); }
  const SymMatrix& sym() const { return sym_; }

  Vector solve(const Vector& rhs) const {
    if (rhs.size() != dim()) {
      throw DimensionMismatch("solve rhs length does not match dimension");
    }
    return llt_.solve(rhs);
  }

  Matrix solve_matrix(const Matrix& rhs) const {
    if (rhs.rows() != dim()) {
      throw DimensionMismatch("solve rhs rows do not match dimension");
    }
    return llt_.solve(rhs);
  }

 private:
  static Eigen::LLT<Matrix> factor(const SymMatrix& s) {
    const Matrix& a = s.m();
    const double max_diag = a.diagonal().maxCoeff();
    if (!(max_diag > 0.0)) {
      throw NotPositiveDefinite("largest diagonal entry is not positive");
    }
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("Cholesky factorization failed");
    }
    const double tol = kSpdTolerance * max_diag;
    const Vector d = llt.matrixLLT().diagonal();
    for (int i = 0; i < d.size(); ++i) {
      if (!(d(i) * d(i) > tol)) {
        throw NotPositiveDefinite("Cholesky pivot " + std::to_string(i) +
                                  " at or below tolerance");
      }
    }
    // The cached factor must reproduce the entries it will stand in for,
    // within 1e-12 relative Frobenius error.
    const Matrix l = llt.matrixL();
    const double err = (l * l.transpose() - a).norm();
    if (err > 1e-12 * a.norm()) {
      throw NotPositiveDefinite("Cholesky factor fails to reconstruct input");
    }
    return llt;
  }

  SymMatrix sym_;
  Eigen::LLT<Matrix> llt_;
};

inline double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric,
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric,
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double sigma_max(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

// Slack below zero tolerated when declaring F positive semidefinite.
inline double psd_slack(const Matrix& f) {
  return kPsdTolerance * std::max(1.0, f.cwiseAbs().maxCoeff());
}

inline bool is_psd_within_tolerance(const SymMatrix& f) {
  return min_eigenvalue(f.m()) >= -psd_slack(f.m());
}

inline SpdMatrix spd_inverse(const SpdMatrix& m) {
  const Matrix inv = m.solve_matrix(Matrix::Identity(m.dim(), m.dim()));
  return SpdMatrix(SymMatrix::from_upper(inv));
}

// Unique symmetric positive-definite S with S^T S = m^{-1}, via
// eigendecomposition. Cholesky would give a triangular root, not this one.
inline SpdMatrix spd_inverse_sqrt(const SpdMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.m());
  if (es.info() != Eigen::Success) {
    throw NotPositiveDefinite("eigendecomposition failed");
  }
  const Vector& lam = es.eigenvalues();
  const double tol = kSpdTolerance * lam.maxCoeff();
  Vector scaled(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    if (!(lam(i) > tol)) {
      throw NotPositiveDefinite("eigenvalue at or below tolerance");
    }
    scaled(i) = 1.0 / std::sqrt(lam(i));
  }
  const Matrix s =
      es.eigenvectors() * scaled.asDiagonal() * es.eigenvectors().transpose();
  return SpdMatrix(SymMatrix::from_upper(s));
}

// Unique global minimizer -h^{-1} b of x^T h x + 2 b^T x + c.
inline Vector quadratic_minimizer(const SpdMatrix& h, const Vector& b) {
  if (b.size() != h.dim()) {
    throw DimensionMismatch("minimizer rhs length does not match dimension");
  }
  return -h.solve(b);
}

// (A + U C U^T)^{-1} from A^{-1} and C^{-1}:
//   A^{-1} - A^{-1} U (C^{-1} + U^T A^{-1} U)^{-1} U^T A^{-1}
inline SpdMatrix mil_inverse(const SpdMatrix& a_inv, const RectMatrix& u,
                             const SpdMatrix& c_inv) {
  if (u.rows() != a_inv.dim() || u.cols() != c_inv.dim()) {
    throw DimensionMismatch("matrix inversion lemma shapes do not conform");
  }
  const Matrix au = a_inv.m() * u.m();
  const Matrix inner = c_inv.m() + u.m().transpose() * au;
  const SpdMatrix inner_spd(SymMatrix::from_upper(inner));
  const Matrix result =
      a_inv.m() - au * inner_spd.solve_matrix(au.transpose());
  return SpdMatrix(SymMatrix::from_upper(result));
}

// sqrt(sum_ij sigma_max(A_ij)^2): an upper bound on sigma_max of the
// assembled block matrix.
inline double block_sigma_max_bound(
    const std::vector<std::vector<RectMatrix>>& blocks) {
  if (blocks.empty() || blocks.front().empty()) {
    throw DimensionMismatch("block grid is empty");
  }
  const std::size_t grid_cols = blocks.front().size();
  for (const auto& row : blocks) {
    if (row.size() != grid_cols) {
      throw DimensionMismatch("block grid rows have unequal lengths");
    }
  }
  // Within a grid row all blocks share the row count; within a grid column
  // all blocks share the column count.
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < grid_cols; ++j) {
      if (blocks[i][j].rows() != blocks[i][0].rows() ||
          blocks[i][j].cols() != blocks[0][j].cols()) {
        throw DimensionMismatch("block grid dimensions do not conform");
      }
    }
  }
  double sum = 0.0;
  for (const auto& row : blocks) {
    for (const auto& block : row) {
      const double s = sigma_max(block.m());
      sum += s * s;
    }
  }
  return std::sqrt(sum);
}

}  // namespace gfrls
