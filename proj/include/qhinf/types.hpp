#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace qhinf {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

inline constexpr Complex iu{0.0, 1.0};

/// J = diag(I_n, -I_n), the signature matrix of the doubled-up coordinates.
inline Mat j_matrix(int n) {
  Mat j = Mat::Identity(2 * n, 2 * n);
  j.bottomRightCorner(n, n) *= -1.0;
  return j;
}

inline Mat hermitize(const Mat& x) { return 0.5 * (x + x.adjoint()); }

inline double hermitian_deviation(const Mat& x) {
  return (x - x.adjoint()).norm();
}

/// Largest |eigenvalue|.
inline double spectral_radius(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::ComplexEigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// max Re lambda(m); -inf for an empty matrix.
inline double spectral_abscissa(const Mat& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::ComplexEigenSolver<Mat> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

inline bool is_stable(const Mat& m) { return spectral_abscissa(m) < 0.0; }

inline void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace qhinf
