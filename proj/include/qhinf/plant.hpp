#pragma once

#include <cmath>
#include <vector>

#include "qhinf/doubled.hpp"
#include "qhinf/types.hpp"

namespace qhinf {

/// Linear quantum system in doubled-up coordinates [a; a#]:
///   A (2n x 2n), B (2n x 2m), C (2m x 2n), D (2m x 2m),
/// plus the selector L (p x 2n) of the quantity to estimate.
struct QuantumPlant {
  int n = 0;  // mode count
  int m = 0;  // field count
  Mat A, B, C, D, L;

  int p() const { return static_cast<int>(L.rows()); }
};

/// Validating constructor; enforces dimensions and the doubled-up structure
/// of A, B, C, D.
inline QuantumPlant make_plant(const Mat& a, const Mat& b, const Mat& c,
                               const Mat& d, const Mat& l,
                               double structure_tol = 1e-10) {
  require(a.rows() == a.cols() && a.rows() % 2 == 0, "plant: A must be square 2n x 2n");
  const int n = static_cast<int>(a.rows()) / 2;
  require(b.rows() == 2 * n && b.cols() % 2 == 0, "plant: B must be 2n x 2m");
  const int m = static_cast<int>(b.cols()) / 2;
  require(c.rows() == 2 * m && c.cols() == 2 * n, "plant: C must be 2m x 2n");
  require(d.rows() == 2 * m && d.cols() == 2 * m, "plant: D must be 2m x 2m");
  require(l.cols() == 2 * n, "plant: L must have 2n columns");
  for (const auto* x : {&a, &b, &c, &d})
    require(check_doubled(*x, structure_tol).ok, "plant: matrix is not doubled-up");
  return {n, m, a, b, c, d, l};
}

/// Linearized dynamic squeezer: an optical cavity with a nonlinear medium,
/// parameterized by the cavity loss beta, mirror coupling kappa and the
/// nonlinearity chi. Single mode, single field.
inline QuantumPlant make_squeezer(double beta, double kappa, Complex chi,
                                  const Mat& l) {
  require(beta > 0.0, "make_squeezer: beta must be positive");
  require(kappa > 0.0, "make_squeezer: kappa must be positive");
  Mat a1(1, 1), a2(1, 1);
  a1 << Complex(-beta / 2.0, 0.0);
  a2 << -chi;
  const Mat a = build_doubled(a1, a2);
  const Mat b = -std::sqrt(kappa) * Mat::Identity(2, 2);
  const Mat c = std::sqrt(kappa) * Mat::Identity(2, 2);
  const Mat d = Mat::Identity(2, 2);
  return make_plant(a, b, c, d, l);
}

/// Homodyne detection angles, radians, one per field.
struct HomodyneConfig {
  std::vector<double> thetas;
};

/// S = [S1 S2] with S1 = diag(e^{-i theta_k}/sqrt(2)), S2 = conj(S1).
/// Satisfies S S^† = I_m.
inline Mat homodyne_matrix(const HomodyneConfig& config) {
  const int m = static_cast<int>(config.thetas.size());
  Mat s = Mat::Zero(m, 2 * m);
  for (int k = 0; k < m; ++k) {
    const Complex e = std::exp(-iu * config.thetas[k]) / std::sqrt(2.0);
    s(k, k) = e;
    s(k, m + k) = std::conj(e);
  }
  return s;
}

}  // namespace qhinf
