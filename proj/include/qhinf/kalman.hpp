#pragma once

#include "qhinf/care.hpp"
#include "qhinf/plant.hpp"

namespace qhinf {

/// Steady-state complex Kalman filter for a plant under homodyne detection.
struct KalmanFilter {
  Mat A_e;  // A - K_e S C
  Mat K_e;  // (B + P C^†) S^†
  Mat L_e;  // = L
  Mat P;    // error covariance
  double riccati_residual = 0.0;
};

/// Error-covariance equation
///   A P + P A^† + B B^† - (B + P C^†) S^† S (B + P C^†)^† = 0,
/// solved by rearranging into the canonical form
///   F P + P F^† - P (C^† S^† S C) P + B (I - S^† S) B^† = 0,
/// F = A - B S^† S C. The residual reported is always that of the original
/// equation, so a convention slip in the rearrangement cannot go unnoticed.
inline Mat solve_kalman_riccati(const QuantumPlant& plant, const Mat& s,
                                double tol = 1e-8) {
  require(s.rows() >= 1 && s.cols() == 2 * plant.m,
          "solve_kalman_riccati: S must be m x 2m");
  const double feedthrough_dev =
      (plant.D - Mat::Identity(2 * plant.m, 2 * plant.m)).norm();
  require(feedthrough_dev <= 1e-8 * (1.0 + plant.D.norm()),
          "solve_kalman_riccati: requires a canonical plant with D = I");

  const Mat sts = s.adjoint() * s;
  const Mat f = plant.A - plant.B * sts * plant.C;
  CareProblem canonical;
  canonical.A = f.adjoint();
  canonical.R = hermitize(-(plant.C.adjoint() * sts * plant.C));
  canonical.Q = hermitize(
      plant.B * (Mat::Identity(2 * plant.m, 2 * plant.m) - sts) * plant.B.adjoint());
  CareSolution sol = solve_care(canonical, tol);

  const Mat& p = sol.X;
  const Mat gain = plant.B + p * plant.C.adjoint();
  const double residual =
      (plant.A * p + p * plant.A.adjoint() + plant.B * plant.B.adjoint() -
       gain * sts * gain.adjoint())
          .norm();
  const double scale = plant.A.norm() * p.norm() +
                       plant.B.norm() * plant.B.norm() +
                       sts.norm() * gain.norm() * gain.norm() + 1.0;
  if (residual > tol * scale)
    throw CareError(CareError::Reason::residual,
                    "solve_kalman_riccati: covariance equation residual " +
                        std::to_string(residual));
  if (!sol.is_psd)
    throw CareError(CareError::Reason::residual,
                    "solve_kalman_riccati: covariance solution is not PSD");
  return p;
}

inline KalmanFilter kalman_filter(const QuantumPlant& plant, const Mat& s,
                                  const Mat& p) {
  KalmanFilter kf;
  kf.P = p;
  kf.K_e = (plant.B + p * plant.C.adjoint()) * s.adjoint();
  kf.A_e = plant.A - kf.K_e * s * plant.C;
  kf.L_e = plant.L;
  const Mat sts = s.adjoint() * s;
  const Mat gain = plant.B + p * plant.C.adjoint();
  kf.riccati_residual =
      (plant.A * p + p * plant.A.adjoint() + plant.B * plant.B.adjoint() -
       gain * sts * gain.adjoint())
          .norm();
  if (!is_stable(kf.A_e))
    throw CareError(CareError::Reason::residual,
                    "kalman_filter: A - K_e S C is not stable; P is not stabilizing");
  return kf;
}

}  // namespace qhinf
