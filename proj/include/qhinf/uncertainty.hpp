#pragma once

#include <functional>
#include <utility>

#include "qhinf/plant.hpp"

namespace qhinf {

/// Structured norm-bounded uncertainty
///   [dA; dC] = [H1; H3] F1(delta) E,   dB = H2 F2(delta) G,
/// with contraction factors F1, F2 supplied as functions of the scalar
/// uncertain parameter (they may depend on it nonlinearly).
struct UncertaintyModel {
  Mat H1;  // 2n x r1
  Mat H3;  // 2m x r1
  Mat E;   // r1 x 2n
  Mat H2;  // 2n x r2
  Mat G;   // r2 x 2m
  std::function<Mat(double)> F1;  // r1 x r1
  std::function<Mat(double)> F2;  // r2 x r2

  int r1() const { return static_cast<int>(E.rows()); }
  int r2() const { return static_cast<int>(G.rows()); }
};

/// Uncertainty model with all factors zero (nominal plant), r1 = r2 = 0.
inline UncertaintyModel no_uncertainty(const QuantumPlant& plant) {
  UncertaintyModel u;
  u.H1 = Mat::Zero(2 * plant.n, 0);
  u.H3 = Mat::Zero(2 * plant.m, 0);
  u.E = Mat::Zero(0, 2 * plant.n);
  u.H2 = Mat::Zero(2 * plant.n, 0);
  u.G = Mat::Zero(0, 2 * plant.m);
  u.F1 = [](double) { return Mat::Zero(0, 0); };
  u.F2 = [](double) { return Mat::Zero(0, 0); };
  return u;
}

inline void validate_uncertainty(const QuantumPlant& plant,
                                 const UncertaintyModel& u) {
  const int r1 = u.r1(), r2 = u.r2();
  require(u.H1.rows() == 2 * plant.n && u.H1.cols() == r1,
          "uncertainty: H1 must be 2n x r1");
  require(u.H3.rows() == 2 * plant.m && u.H3.cols() == r1,
          "uncertainty: H3 must be 2m x r1");
  require(u.E.cols() == 2 * plant.n, "uncertainty: E must be r1 x 2n");
  require(u.H2.rows() == 2 * plant.n && u.H2.cols() == r2,
          "uncertainty: H2 must be 2n x r2");
  require(u.G.cols() == 2 * plant.m, "uncertainty: G must be r2 x 2m");
}

struct Perturbation {
  Mat dA, dB, dC;
};

/// Evaluate the perturbations at a given value of the uncertain parameter.
inline Perturbation apply_uncertainty(const QuantumPlant& plant,
                                      const UncertaintyModel& u, double delta) {
  require(std::abs(delta) <= 1.0, "apply_uncertainty: |delta| must be <= 1");
  validate_uncertainty(plant, u);
  const Mat f1 = u.F1(delta);
  const Mat f2 = u.F2(delta);
  require(f1.rows() == u.r1() && f1.cols() == u.r1(),
          "apply_uncertainty: F1(delta) must be r1 x r1");
  require(f2.rows() == u.r2() && f2.cols() == u.r2(),
          "apply_uncertainty: F2(delta) must be r2 x r2");
  Perturbation d;
  d.dA = u.H1 * f1 * u.E;
  d.dC = u.H3 * f1 * u.E;
  d.dB = u.H2 * f2 * u.G;
  if (d.dA.size() == 0) d.dA = Mat::Zero(2 * plant.n, 2 * plant.n);
  if (d.dC.size() == 0) d.dC = Mat::Zero(2 * plant.m, 2 * plant.n);
  if (d.dB.size() == 0) d.dB = Mat::Zero(2 * plant.n, 2 * plant.m);
  return d;
}

struct UncertainRealizabilityReport {
  double lyapunov_residual = 0.0;  // ||dA Th + Th dA^† + B J dB^† + dB J B^† + dB J dB^†||
  double gain_residual = 0.0;      // ||dB + Theta dC^† J||
  bool pass = false;
};

/// Residuals of the realizability constraints for a perturbed plant. The
/// constraints need not hold for every admissible perturbation, so this
/// reports rather than enforces.
inline UncertainRealizabilityReport check_uncertain_realizability(
    const QuantumPlant& plant, const Mat& theta, const Perturbation& pert,
    double tol = 1e-8) {
  require(pert.dA.rows() == 2 * plant.n && pert.dA.cols() == 2 * plant.n &&
              pert.dB.rows() == 2 * plant.n && pert.dB.cols() == 2 * plant.m &&
              pert.dC.rows() == 2 * plant.m && pert.dC.cols() == 2 * plant.n,
          "check_uncertain_realizability: perturbation dimension mismatch");
  const Mat j = j_matrix(plant.m);
  UncertainRealizabilityReport rep;
  rep.lyapunov_residual =
      (pert.dA * theta + theta * pert.dA.adjoint() +
       plant.B * j * pert.dB.adjoint() + pert.dB * j * plant.B.adjoint() +
       pert.dB * j * pert.dB.adjoint())
          .norm();
  rep.gain_residual = (pert.dB + theta * pert.dC.adjoint() * j).norm();
  const double scale =
      std::max(plant.A.norm() + plant.B.norm() * plant.B.norm(), 1e-300);
  rep.pass = rep.lyapunov_residual <= tol * scale && rep.gain_residual <= tol * scale;
  return rep;
}

/// F(delta) = diag(delta^e_1, ..., delta^e_k); covers the factor shapes used
/// by the squeezer examples.
inline std::function<Mat(double)> delta_power_factor(std::vector<int> exponents) {
  return [exps = std::move(exponents)](double delta) {
    const int k = static_cast<int>(exps.size());
    Mat f = Mat::Zero(k, k);
    for (int idx = 0; idx < k; ++idx)
      f(idx, idx) = Complex(std::pow(delta, exps[idx]), 0.0);
    return f;
  };
}

inline std::function<Mat(double)> constant_factor(Mat value) {
  return [v = std::move(value)](double) { return v; };
}

/// Largest singular value of F1(delta) and F2(delta) sampled over
/// delta in [-1, 1]; admissible models keep this <= 1.
inline double max_factor_gain(const UncertaintyModel& u, int samples = 21) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double delta = samples == 1 ? 0.0 : -1.0 + 2.0 * i / (samples - 1);
    for (const Mat& f : {u.F1(delta), u.F2(delta)}) {
      if (f.size() == 0) continue;
      Eigen::JacobiSVD<Mat> svd(f);
      worst = std::max(worst, svd.singularValues().maxCoeff());
    }
  }
  return worst;
}

}  // namespace qhinf
