#pragma once

#include "qhinf/types.hpp"

namespace qhinf {

/// Assemble [[X1, X2], [conj(X2), conj(X1)]] from two equally shaped blocks.
inline Mat build_doubled(const Mat& x1, const Mat& x2) {
  require(x1.rows() == x2.rows() && x1.cols() == x2.cols(),
          "build_doubled: block shapes differ");
  Mat out(2 * x1.rows(), 2 * x1.cols());
  out << x1, x2, x2.conjugate(), x1.conjugate();
  return out;
}

struct DoubledCheck {
  bool ok = false;
  double max_deviation = 0.0;
};

/// Verify the block-conjugacy structure of a doubled-up matrix.
inline DoubledCheck check_doubled(const Mat& x, double tol = 1e-12) {
  require(x.rows() % 2 == 0 && x.cols() % 2 == 0,
          "check_doubled: dimensions must be even");
  const auto r = x.rows() / 2, c = x.cols() / 2;
  if (r == 0 || c == 0) return {true, 0.0};
  double dev = std::max(
      (x.bottomRightCorner(r, c) - x.topLeftCorner(r, c).conjugate())
          .cwiseAbs()
          .maxCoeff(),
      (x.bottomLeftCorner(r, c) - x.topRightCorner(r, c).conjugate())
          .cwiseAbs()
          .maxCoeff());
  return {dev <= tol, dev};
}

}  // namespace qhinf
