#pragma once

#include <random>

#include "gfrls/matrix.hpp"

namespace gfrls::testing {

// Deterministic generators for test instances.
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  Matrix matrix(int rows, int cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        m(i, j) = uniform(lo, hi);
      }
    }
    return m;
  }

  Vector vector(int n, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) {
      v(i) = uniform(lo, hi);
    }
    return v;
  }

  // B B^T + ridge I: positive definite by construction.
  SpdMatrix spd(int n, double ridge = 1.0) {
    const Matrix b = matrix(n, n);
    return SpdMatrix(SymMatrix::from_upper(b * b.transpose() +
                                           ridge * Matrix::Identity(n, n)));
  }

 private:
  std::mt19937_64 gen_;
};

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace gfrls::testing
