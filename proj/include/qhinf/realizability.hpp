#pragma once

#include <Eigen/Eigenvalues>

#include <string>

#include "qhinf/care.hpp"
#include "qhinf/plant.hpp"

namespace qhinf {

struct Inertia {
  int positive = 0, negative = 0, zero = 0;
};

/// Signature of a Hermitian matrix, with eigenvalues inside
/// +-threshold counted as zero.
inline Inertia hermitian_inertia(const Mat& x, double rel_threshold = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(x), Eigen::EigenvaluesOnly);
  const double thr = rel_threshold * std::max(x.norm(), 1e-300);
  Inertia out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam > thr)
      ++out.positive;
    else if (lam < -thr)
      ++out.negative;
    else
      ++out.zero;
  }
  return out;
}

struct RealizabilityResult {
  bool ok = false;
  Mat theta;                      // commutation matrix, valid when solved
  double lyapunov_residual = 0.0; // ||A Theta + Theta A^† + B J B^†||
  double gain_residual = 0.0;     // ||B + Theta C^† J||
  double feedthrough_deviation = 0.0;  // ||D - I||
  Inertia inertia;
  std::string failed_condition;   // empty on success
};

/// Theorem-style physical-realizability check: solve
/// A Theta + Theta A^† + B J B^† = 0, then verify Theta Hermitian with
/// inertia (n, n, 0) and B = -Theta C^† J. The tolerance is relative to
/// ||A|| + ||B||^2.
inline RealizabilityResult check_physical_realizability(
    const QuantumPlant& plant, double tol = 1e-8) {
  RealizabilityResult r;
  const double scale =
      std::max(plant.A.norm() + plant.B.norm() * plant.B.norm(), 1e-300);
  const double abs_tol = tol * scale;

  r.feedthrough_deviation =
      (plant.D - Mat::Identity(plant.D.rows(), plant.D.cols())).norm();
  if (r.feedthrough_deviation > abs_tol) {
    r.failed_condition = "D = I";
    return r;
  }

  const Mat j = j_matrix(plant.m);
  try {
    r.theta = hermitize(solve_lyapunov(plant.A, plant.B * j * plant.B.adjoint()));
  } catch (const CareError& e) {
    r.failed_condition = std::string("Lyapunov solve: ") + e.what();
    return r;
  }

  r.lyapunov_residual =
      (plant.A * r.theta + r.theta * plant.A.adjoint() + plant.B * j * plant.B.adjoint())
          .norm();
  r.gain_residual = (plant.B + r.theta * plant.C.adjoint() * j).norm();
  r.inertia = hermitian_inertia(r.theta);

  if (r.lyapunov_residual > abs_tol) {
    r.failed_condition = "A Theta + Theta A^† + B J B^† = 0";
    return r;
  }
  if (r.gain_residual > abs_tol) {
    r.failed_condition = "B = -Theta C^† J";
    return r;
  }
  if (r.inertia.positive != plant.n || r.inertia.negative != plant.n ||
      r.inertia.zero != 0) {
    r.failed_condition = "Theta congruent to J (inertia)";
    return r;
  }
  r.ok = true;
  return r;
}

struct HamiltonianCoupling {
  Mat M;  // Hermitian, doubled-up
  Mat N;  // equals C
  double reconstruction_residual = 0.0;
};

/// Recover the Hamiltonian and coupling matrices of a realizable plant:
/// N = C and M = (i/2)(Theta^{-1} A - A^† Theta^{-1}), verified against
/// A = -i Theta M - (1/2) Theta N^† J N.
inline HamiltonianCoupling extract_hamiltonian(const QuantumPlant& plant,
                                               const Mat& theta,
                                               double tol = 1e-8) {
  Eigen::FullPivLU<Mat> lu(theta);
  require(lu.isInvertible(), "extract_hamiltonian: Theta is singular");
  const Mat theta_inv = lu.inverse();

  HamiltonianCoupling hc;
  hc.N = plant.C;
  hc.M = hermitize((iu / 2.0) *
                   (theta_inv * plant.A - plant.A.adjoint() * theta_inv));

  const Mat j = j_matrix(plant.m);
  const Mat rebuilt =
      -iu * theta * hc.M - 0.5 * theta * hc.N.adjoint() * j * hc.N;
  hc.reconstruction_residual = (plant.A - rebuilt).norm();

  const double scale = std::max(plant.A.norm(), 1e-300);
  if (hc.reconstruction_residual > tol * scale)
    throw std::invalid_argument(
        "extract_hamiltonian: reconstruction residual too large; "
        "plant and Theta are inconsistent");
  return hc;
}

}  // namespace qhinf
