#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <vector>

#include "qhinf/hinf.hpp"
#include "qhinf/kalman.hpp"
#include "qhinf/plant.hpp"
#include "qhinf/uncertainty.hpp"

namespace qhinf {

struct StateSpaceSystem {
  Mat A, B, C, D;
};

/// Scalar rational transfer function; coefficients in descending powers of s,
/// denominator monic.
struct RationalTF {
  Vec num;
  Vec den;

  Complex eval(Complex s) const {
    Complex n(0, 0), d(0, 0);
    for (Eigen::Index i = 0; i < num.size(); ++i) n = n * s + num(i);
    for (Eigen::Index i = 0; i < den.size(); ++i) d = d * s + den(i);
    return n / d;
  }
};

struct FrequencyResponse {
  std::vector<double> omegas;
  std::vector<Mat> values;
  std::vector<double> magnitudes_db;  // 20 log10 of the largest singular value
  std::vector<bool> defined;          // false where i*omega is a pole
};

inline std::vector<double> log_grid(double lo, double hi, int points) {
  require(lo > 0 && hi > lo && points >= 2, "log_grid: invalid range");
  std::vector<double> grid(points);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < points; ++i)
    grid[i] = std::pow(10.0, llo + (lhi - llo) * i / (points - 1));
  return grid;
}

/// Default analysis grid: 400 points covering the squeezer dynamics.
inline std::vector<double> default_omega_grid() { return log_grid(1e-2, 1e2, 400); }

namespace detail {

inline double sigma_max(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().maxCoeff();
}

// Characteristic polynomial from the spectrum, expanded to monic descending
// coefficients.
inline Vec char_poly_from_eigs(const Vec& eigs) {
  Vec coeff = Vec::Zero(eigs.size() + 1);
  coeff(0) = Complex(1, 0);
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    for (Eigen::Index j = i + 1; j >= 1; --j) coeff(j) -= eigs(i) * coeff(j - 1);
  }
  return coeff;
}

}  // namespace detail

/// Rational transfer-function matrix of C (sI - A)^{-1} B, one entry per
/// (output, input) pair. The common denominator is the characteristic
/// polynomial expanded from the spectrum of A; numerators come from the
/// Leverrier-Faddeev adjugate recursion, cross-checked by sampling against
/// direct resolvent evaluation.
inline std::vector<std::vector<RationalTF>> transfer_function_matrix(
    const Mat& a, const Mat& b, const Mat& c) {
  require(a.rows() == a.cols() && b.rows() == a.rows() && c.cols() == a.rows(),
          "transfer_function_matrix: dimension mismatch");
  const Eigen::Index k = a.rows();
  const Eigen::Index p = c.rows(), q = b.cols();

  Eigen::ComplexEigenSolver<Mat> es(a, false);
  const Vec den = detail::char_poly_from_eigs(es.eigenvalues());

  // adj(sI - A) = M_1 s^{k-1} + ... + M_k
  std::vector<Mat> adj(k);
  Mat mj = Mat::Identity(k, k);
  Complex cj(0, 0);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j > 0) mj = a * mj + cj * Mat::Identity(k, k);
    adj[j] = mj;
    cj = -(a * mj).trace() / Complex(double(j + 1), 0);
  }

  std::vector<std::vector<RationalTF>> out(p, std::vector<RationalTF>(q));
  for (Eigen::Index row = 0; row < p; ++row) {
    for (Eigen::Index ch = 0; ch < q; ++ch) {
      RationalTF tf;
      tf.den = den;
      tf.num = Vec::Zero(k);
      for (Eigen::Index j = 0; j < k; ++j)
        tf.num(j) = (c.row(row) * adj[j] * b.col(ch))(0, 0);

      // sampling guard against drift between the two coefficient routes
      for (int sample = 0; sample < 20; ++sample) {
        const double w = std::pow(10.0, -2.0 + 4.0 * sample / 19.0);
        const Mat resolvent =
            (iu * w * Mat::Identity(k, k) - a).partialPivLu().solve(b.col(ch));
        const Complex direct = (c.row(row) * resolvent)(0, 0);
        const Complex rational = tf.eval(iu * w);
        if (std::abs(rational - direct) > 1e-8 * (1.0 + std::abs(direct)))
          throw std::runtime_error(
              "transfer_function_matrix: rational coefficients disagree with "
              "resolvent evaluation");
      }
      out[row][ch] = tf;
    }
  }
  return out;
}

/// Scalar rational form of a single-output estimator, one function per input
/// channel; use transfer_function_matrix for p > 1.
inline std::vector<RationalTF> estimator_tf(const Estimator& est) {
  require(est.C_K.rows() == 1, "estimator_tf: scalar rational form needs p = 1");
  return transfer_function_matrix(est.A_K, est.B_K, est.C_K)[0];
}

/// Closed plant-estimator error system: state [x; xhat], output
/// e = zhat - z, driven by the plant disturbance field.
inline StateSpaceSystem error_system(const QuantumPlant& plant,
                                     const Perturbation& pert, const Mat& s,
                                     const Estimator& est) {
  const int n2 = 2 * plant.n, m2 = 2 * plant.m, p = plant.p();
  require(est.A_K.rows() == n2 && est.B_K.rows() == n2 &&
              est.B_K.cols() == plant.m && est.C_K.rows() == p &&
              est.C_K.cols() == n2,
          "error_system: estimator dimensions do not match the plant");
  StateSpaceSystem sys;
  sys.A.resize(2 * n2, 2 * n2);
  sys.A << plant.A + pert.dA, Mat::Zero(n2, n2),
      est.B_K * s * (plant.C + pert.dC), est.A_K;
  sys.B.resize(2 * n2, m2);
  sys.B << plant.B + pert.dB, est.B_K * s * plant.D;
  sys.C.resize(p, 2 * n2);
  sys.C << -plant.L, est.C_K;
  sys.D = Mat::Zero(p, m2);
  return sys;
}

inline Estimator as_estimator(const KalmanFilter& kf) {
  return {kf.A_e, kf.K_e, kf.L_e};
}

/// Restrict the input map to one disturbance component.
inline StateSpaceSystem select_channel(const StateSpaceSystem& sys,
                                       int input_index) {
  require(input_index >= 0 && input_index < sys.B.cols(),
          "select_channel: input index out of range");
  return {sys.A, sys.B.col(input_index), sys.C, sys.D.col(input_index)};
}

/// Evaluate C (i w I - A)^{-1} B + D over a frequency grid. Points where
/// i*omega is an eigenvalue of A are flagged undefined.
inline FrequencyResponse freq_response(const StateSpaceSystem& sys,
                                       const std::vector<double>& omegas) {
  const Eigen::Index k = sys.A.rows();
  FrequencyResponse fr;
  fr.omegas = omegas;
  fr.values.reserve(omegas.size());
  for (double w : omegas) {
    Eigen::FullPivLU<Mat> lu(iu * w * Mat::Identity(k, k) - sys.A);
    if (!lu.isInvertible()) {
      fr.values.push_back(Mat::Constant(sys.C.rows(), sys.B.cols(),
                                        Complex(std::nan(""), std::nan(""))));
      fr.magnitudes_db.push_back(std::nan(""));
      fr.defined.push_back(false);
      continue;
    }
    Mat value = sys.C * lu.solve(sys.B) + sys.D;
    const double mag = detail::sigma_max(value);
    fr.values.push_back(std::move(value));
    fr.magnitudes_db.push_back(20.0 * std::log10(mag));
    fr.defined.push_back(true);
  }
  return fr;
}

struct PeakEstimate {
  double omega = 0.0;
  double magnitude = 0.0;
  double magnitude_db = -std::numeric_limits<double>::infinity();
};

/// Largest response magnitude over an explicit grid.
inline PeakEstimate peak_magnitude(const StateSpaceSystem& sys,
                                   const std::vector<double>& omegas) {
  PeakEstimate peak;
  const Eigen::Index k = sys.A.rows();
  for (double w : omegas) {
    Eigen::FullPivLU<Mat> lu(iu * w * Mat::Identity(k, k) - sys.A);
    if (!lu.isInvertible()) continue;
    const double mag = detail::sigma_max(Mat(sys.C * lu.solve(sys.B) + sys.D));
    if (mag > peak.magnitude) {
      peak.magnitude = mag;
      peak.omega = w;
    }
  }
  peak.magnitude_db = 20.0 * std::log10(peak.magnitude);
  return peak;
}

struct HinfNorm {
  bool finite = false;
  double value = std::numeric_limits<double>::infinity();
  double peak_omega = 0.0;
};

/// Supremum of the largest singular value of the response over frequency:
/// coarse logarithmic search refined by golden-section around the best grid
/// point. Unstable systems report an infinite norm.
inline HinfNorm hinf_norm(const StateSpaceSystem& sys, double tol = 1e-6) {
  HinfNorm out;
  if (sys.A.size() > 0 && !is_stable(sys.A)) return out;

  const Eigen::Index k = sys.A.rows();
  auto gain = [&](double w) {
    if (k == 0) return detail::sigma_max(sys.D);
    return detail::sigma_max(
        Mat(sys.C * (iu * w * Mat::Identity(k, k) - sys.A).partialPivLu().solve(sys.B) +
            sys.D));
  };

  std::vector<double> grid = log_grid(1e-3, 1e3, 200);
  grid.insert(grid.begin(), 0.0);
  size_t best = 0;
  double best_val = -1.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    const double g = gain(grid[i]);
    if (g > best_val) {
      best_val = g;
      best = i;
    }
  }

  double lo = best > 0 ? grid[best - 1] : 0.0;
  double hi = best + 1 < grid.size() ? grid[best + 1] : grid.back() * 10.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = gain(x1), f2 = gain(x2);
  while (b - a > tol * std::max(1.0, b)) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = gain(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = gain(x1);
    }
  }
  const double refined = std::max(f1, f2);
  out.finite = true;
  if (refined > best_val) {
    out.value = refined;
    out.peak_omega = f1 > f2 ? x1 : x2;
  } else {
    out.value = best_val;
    out.peak_omega = grid[best];
  }
  out.value = std::max(out.value, detail::sigma_max(sys.D));
  return out;
}

}  // namespace qhinf
