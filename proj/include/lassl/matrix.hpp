#pragma once

#include <Eigen/Core>
#include <string>

#include "lassl/errors.hpp"

namespace lassl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  }
  return a * b;
}

// Row norms below this are treated as degenerate (cannot be normalized).
inline constexpr double kDegenerateRowNorm = 1e-12;

inline Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (norm < kDegenerateRowNorm) {
      throw NumericError("l2_normalize_rows: degenerate row " + std::to_string(r));
    }
    out.row(r) = m.row(r) / norm;
  }
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace lassl
