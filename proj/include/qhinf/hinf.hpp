#pragma once

#include <Eigen/SVD>

#include <string>
#include <vector>

#include "qhinf/care.hpp"
#include "qhinf/plant.hpp"
#include "qhinf/uncertainty.hpp"

namespace qhinf {

struct SynthesisError : std::runtime_error {
  SynthesisError(std::string condition_, const std::string& msg)
      : std::runtime_error(msg), condition(std::move(condition_)) {}
  std::string condition;  // "a", "b", "c", "conditioning", "assumption"
};

struct SynthesisParams {
  double gamma = 1.0;  // disturbance attenuation level
  double eps1 = 1.0;   // scaling of the F1 uncertainty channel
  double eps2 = 1.0;   // scaling of the F2 uncertainty channel
};

/// The scaled control-form problem data. Block dimensions:
///   state n2 = 2n, fields m2 = 2m, measurements m,
///   uncertainty channels r1, r2, estimate dimension p.
struct ScaledPlant {
  Mat A, B1, B2, C1, D11, D12, C2, D21, D22, S;
  int n2 = 0, m2 = 0, m = 0, r1 = 0, r2 = 0, p = 0;
};

/// Loop-shifted problem data with zero D11 feedthrough.
struct BarredPlant {
  Mat A, B1, C1, D12, C2, D21, S, E1, E2;
  int n2 = 0, m2 = 0, m = 0, r1 = 0, r2 = 0, p = 0;
};

struct Estimator {
  Mat A_K, B_K, C_K;
};

/// Which gain-scaling convention synthesize() applies when forming B_K.
///   paper:           B_K = g^-2 (I - YX)^-1      (Y C2^† S^† + g^-2 B1 D21^† S^†) E2^-1
///   scaled_coupling: B_K = g^2  (I - g^-2 YX)^-1 (Y C2^† S^† + g^-2 B1 D21^† S^†) E2^-1
/// The first reproduces the reference squeezer estimators.
enum class GainVariant { paper, scaled_coupling };

/// Assemble the scaled problem: disturbance channels are augmented with the
/// uncertainty factors weighted by gamma/eps1 and gamma/eps2, the regulated
/// output stacks the scaled E rows, a zero block and L, and the estimator
/// input u enters the last p rows of the regulated output through -I.
inline ScaledPlant build_scaled_plant(const QuantumPlant& plant, const Mat& s,
                                      const UncertaintyModel& unc,
                                      const SynthesisParams& params) {
  require(params.gamma > 0 && params.eps1 > 0 && params.eps2 > 0,
          "build_scaled_plant: gamma, eps1, eps2 must be positive");
  require(s.rows() == plant.m && s.cols() == 2 * plant.m,
          "build_scaled_plant: S must be m x 2m");
  validate_uncertainty(plant, unc);

  ScaledPlant sp;
  sp.n2 = 2 * plant.n;
  sp.m2 = 2 * plant.m;
  sp.m = plant.m;
  sp.r1 = unc.r1();
  sp.r2 = unc.r2();
  sp.p = plant.p();
  const int wdim = sp.m2 + sp.r1 + sp.r2;
  const int zdim = sp.r1 + sp.r2 + sp.p;

  sp.A = plant.A;
  sp.B1.resize(sp.n2, wdim);
  sp.B1 << plant.B, (params.gamma / params.eps1) * unc.H1,
      (params.gamma / params.eps2) * unc.H2;
  sp.B2 = Mat::Zero(sp.n2, sp.p);
  sp.C1.resize(zdim, sp.n2);
  sp.C1 << params.eps1 * unc.E, Mat::Zero(sp.r2, sp.n2), plant.L;
  sp.D11 = Mat::Zero(zdim, wdim);
  sp.D11.block(sp.r1, 0, sp.r2, sp.m2) = params.eps2 * unc.G;
  sp.D12 = Mat::Zero(zdim, sp.p);
  sp.D12.bottomRightCorner(sp.p, sp.p) = -Mat::Identity(sp.p, sp.p);
  sp.C2 = plant.C;
  sp.D21.resize(sp.m2, wdim);
  sp.D21 << plant.D, (params.gamma / params.eps1) * unc.H3,
      Mat::Zero(sp.m2, sp.r2);
  sp.D22 = Mat::Zero(sp.m2, sp.p);
  sp.S = s;
  return sp;
}

namespace detail {

// Inverse square root of a Hermitian positive definite matrix. The nonzero
// pattern is split into connected components first, so decoupled diagonal
// blocks (identity blocks in particular) pass through exactly.
inline Mat hermitian_inverse_sqrt(const Mat& m) {
  const Eigen::Index n = m.rows();
  Mat out = Mat::Zero(n, n);
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (Eigen::Index seed = 0; seed < n; ++seed) {
    if (comp[seed] >= 0) continue;
    std::vector<Eigen::Index> stack{seed}, members;
    comp[seed] = ncomp;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      members.push_back(i);
      for (Eigen::Index j = 0; j < n; ++j)
        if (comp[j] < 0 && (m(i, j) != Complex(0, 0) || m(j, i) != Complex(0, 0))) {
          comp[j] = ncomp;
          stack.push_back(j);
        }
    }
    if (members.size() == 1) {
      const double v = m(seed, seed).real();
      require(v > 0.0, "hermitian_inverse_sqrt: matrix is not positive definite");
      out(seed, seed) = Complex(1.0 / std::sqrt(v), 0.0);
    } else {
      Mat sub(members.size(), members.size());
      for (size_t i = 0; i < members.size(); ++i)
        for (size_t j = 0; j < members.size(); ++j)
          sub(i, j) = m(members[i], members[j]);
      Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(sub));
      require(es.eigenvalues().minCoeff() > 0.0,
              "hermitian_inverse_sqrt: matrix is not positive definite");
      Mat sub_out = es.eigenvectors() *
                    es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    es.eigenvectors().adjoint();
      for (size_t i = 0; i < members.size(); ++i)
        for (size_t j = 0; j < members.size(); ++j)
          out(members[i], members[j]) = sub_out(i, j);
    }
    ++ncomp;
  }
  return out;
}

}  // namespace detail

/// Absorb the D11 feedthrough. The D11 block partition splits regulated
/// outputs as (r1 + r2 | p) and disturbances as (m2 + r1 | r2); the resulting
/// feedthrough correction vanishes for every plant assembled by
/// build_scaled_plant, and the transformation reduces to row/column scaling
/// by R1^{-1/2} and Rtilde1^{-1/2}.
inline BarredPlant loop_shift(const ScaledPlant& sp) {
  require(sp.B2.norm() == 0.0 && sp.D22.norm() == 0.0,
          "loop_shift: expects B2 = 0 and D22 = 0");
  const int zdim = sp.r1 + sp.r2 + sp.p;
  const int wdim = sp.m2 + sp.r1 + sp.r2;
  require(sp.D11.rows() == zdim && sp.D11.cols() == wdim,
          "loop_shift: D11 dimension mismatch");

  const Mat d1111 = sp.D11.topLeftCorner(sp.r1 + sp.r2, sp.m2 + sp.r1);
  const Mat d1112 = sp.D11.topRightCorner(sp.r1 + sp.r2, sp.r2);
  const Mat d1121 = sp.D11.bottomLeftCorner(sp.p, sp.m2 + sp.r1);
  const Mat d1122 = sp.D11.bottomRightCorner(sp.p, sp.r2);

  if (d1111.size() > 0) {
    Eigen::JacobiSVD<Mat> svd1111(d1111);
    if (svd1111.singularValues().maxCoeff() >= 1.0)
      throw SynthesisError("assumption",
                           "loop_shift: ||D1111|| >= 1, feedthrough cannot be "
                           "absorbed");
  }
  const Mat contraction =
      Mat::Identity(sp.m2 + sp.r1, sp.m2 + sp.r1) - d1111.adjoint() * d1111;
  Eigen::LLT<Mat> llt(hermitize(contraction));
  const Mat dinf =
      -d1122 - d1121 * llt.solve(d1111.adjoint() * d1112);
  require(dinf.norm() <= 1e-12 * (1.0 + sp.D11.norm()),
          "loop_shift: nonzero feedthrough correction is outside this problem class");

  Mat d11t = sp.D11;
  d11t.bottomRightCorner(sp.p, sp.r2) = d1122 + dinf;

  double d11_norm = 0.0;
  if (d11t.size() > 0) {
    Eigen::JacobiSVD<Mat> svd(d11t);
    d11_norm = svd.singularValues().maxCoeff();
  }
  if (d11_norm >= 1.0)
    throw SynthesisError("assumption",
                         "loop_shift: ||D11|| >= 1, feedthrough cannot be absorbed");

  const Mat r1 = Mat::Identity(wdim, wdim) - d11t.adjoint() * d11t;
  const Mat r1t = Mat::Identity(zdim, zdim) - d11t * d11t.adjoint();
  const Mat r1_ih = detail::hermitian_inverse_sqrt(r1);
  const Mat r1t_ih = detail::hermitian_inverse_sqrt(r1t);
  Eigen::LLT<Mat> r1_llt(hermitize(r1));

  BarredPlant bp;
  bp.n2 = sp.n2;
  bp.m2 = sp.m2;
  bp.m = sp.m;
  bp.r1 = sp.r1;
  bp.r2 = sp.r2;
  bp.p = sp.p;
  bp.A = sp.A + sp.B1 * r1_llt.solve(d11t.adjoint() * sp.C1);
  bp.B1 = sp.B1 * r1_ih;
  bp.C1 = r1t_ih * sp.C1;
  bp.D12 = r1t_ih * sp.D12;
  bp.C2 = sp.C2 + sp.D21 * r1_llt.solve(d11t.adjoint() * sp.C1);
  bp.D21 = sp.D21 * r1_ih;
  bp.S = sp.S;
  bp.E1 = bp.D12.adjoint() * bp.D12;
  bp.E2 = bp.S * bp.D21 * bp.D21.adjoint() * bp.S.adjoint();
  return bp;
}

/// Literal residual of the first synthesis Riccati equation at X.
inline double x_riccati_residual(const BarredPlant& bp, const Mat& x,
                                 double gamma) {
  const double g2 = gamma * gamma;
  const Mat proj = Mat::Identity(bp.C1.rows(), bp.C1.rows()) -
                   bp.D12 * bp.E1.inverse() * bp.D12.adjoint();
  return (bp.A.adjoint() * x + x * bp.A +
          x * ((1.0 / g2) * bp.B1 * bp.B1.adjoint()) * x +
          bp.C1.adjoint() * proj * bp.C1)
      .norm();
}

/// Literal residual of the second synthesis Riccati equation at Y.
inline double y_riccati_residual(const BarredPlant& bp, const Mat& y,
                                 double gamma) {
  const double g2 = gamma * gamma;
  const Mat gain = (1.0 / gamma) * bp.B1 * bp.D21.adjoint() +
                   gamma * y * bp.C2.adjoint();
  return (bp.A * y + y * bp.A.adjoint() + y * bp.C1.adjoint() * bp.C1 * y +
          (1.0 / g2) * bp.B1 * bp.B1.adjoint() -
          gain * bp.S.adjoint() * bp.E2.inverse() * bp.S * gain.adjoint())
      .norm();
}

/// Residual scale for relative tolerances, matching the equation's terms.
inline double x_riccati_scale(const BarredPlant& bp, const Mat& x, double gamma) {
  const double g2 = gamma * gamma;
  const double xn = x.norm();
  return 1.0 + 2.0 * bp.A.norm() * xn +
         (1.0 / g2) * bp.B1.norm() * bp.B1.norm() * xn * xn +
         bp.C1.norm() * bp.C1.norm();
}

inline double x_riccati_relative_residual(const BarredPlant& bp, const Mat& x,
                                          double gamma) {
  return x_riccati_residual(bp, x, gamma) / x_riccati_scale(bp, x, gamma);
}

inline double y_riccati_scale(const BarredPlant& bp, const Mat& y, double gamma) {
  const double g2 = gamma * gamma;
  const double yn = y.norm();
  const double gain_n =
      (1.0 / gamma) * bp.B1.norm() * bp.D21.norm() + gamma * yn * bp.C2.norm();
  const double w_n = bp.S.norm() * bp.S.norm() * bp.E2.inverse().norm();
  return 1.0 + 2.0 * bp.A.norm() * yn + bp.C1.norm() * bp.C1.norm() * yn * yn +
         (1.0 / g2) * bp.B1.norm() * bp.B1.norm() + gain_n * gain_n * w_n;
}

inline double y_riccati_relative_residual(const BarredPlant& bp, const Mat& y,
                                          double gamma) {
  return y_riccati_residual(bp, y, gamma) / y_riccati_scale(bp, y, gamma);
}

/// Condition (a): stabilizing X = X^† >= 0 of
///   A^† X + X A + X (g^-2 B1 B1^†) X + C1^† (I - D12 E1^-1 D12^†) C1 = 0.
inline CareSolution solve_x_riccati(const BarredPlant& bp, double gamma,
                                    double tol = 1e-8) {
  require(gamma > 0, "solve_x_riccati: gamma must be positive");
  const double g2 = gamma * gamma;
  CareProblem pr;
  pr.A = bp.A;
  pr.R = hermitize((1.0 / g2) * bp.B1 * bp.B1.adjoint());
  const Mat proj = Mat::Identity(bp.C1.rows(), bp.C1.rows()) -
                   bp.D12 * bp.E1.inverse() * bp.D12.adjoint();
  pr.Q = hermitize(bp.C1.adjoint() * proj * bp.C1);
  CareSolution sol = solve_care(pr, tol);
  sol.residual_norm = x_riccati_residual(bp, sol.X, gamma);
  return sol;
}

/// Condition (b): stabilizing Y = Y^† >= 0 of
///   A Y + Y A^† + Y C1^† C1 Y + g^-2 B1 B1^†
///     - (g^-1 B1 D21^† + g Y C2^†) S^† E2^-1 S (g^-1 B1 D21^† + g Y C2^†)^† = 0,
/// solved by completing the square: with T = g^-1 B1 D21^†, U = g C2^†,
/// W = S^† E2^-1 S the equation becomes
///   (A - T W U^†) Y + Y (A - T W U^†)^† + Y (C1^† C1 - U W U^†) Y
///     + (g^-2 B1 B1^† - T W T^†) = 0.
/// The reported residual is evaluated against the original form.
inline CareSolution solve_y_riccati(const BarredPlant& bp, double gamma,
                                    double tol = 1e-8) {
  require(gamma > 0, "solve_y_riccati: gamma must be positive");
  const double g2 = gamma * gamma;
  Eigen::SelfAdjointEigenSolver<Mat> e2eig(hermitize(bp.E2), Eigen::EigenvaluesOnly);
  if (e2eig.eigenvalues().minCoeff() <= 0.0)
    throw SynthesisError("b", "solve_y_riccati: E2 is not positive definite");

  const Mat t = (1.0 / gamma) * bp.B1 * bp.D21.adjoint();
  const Mat u = gamma * bp.C2.adjoint();
  const Mat w = bp.S.adjoint() * bp.E2.inverse() * bp.S;

  CareProblem pr;
  pr.A = (bp.A - t * w * u.adjoint()).adjoint();
  pr.R = hermitize(bp.C1.adjoint() * bp.C1 - u * w * u.adjoint());
  pr.Q = hermitize((1.0 / g2) * bp.B1 * bp.B1.adjoint() - t * w * t.adjoint());
  CareSolution sol = solve_care(pr, tol);
  sol.residual_norm = y_riccati_residual(bp, sol.X, gamma);

  const double scale = bp.A.norm() * sol.X.norm() + pr.Q.norm() +
                       pr.R.norm() * sol.X.norm() * sol.X.norm() + 1.0;
  if (sol.residual_norm > tol * scale)
    throw CareError(CareError::Reason::residual,
                    "solve_y_riccati: residual of the original equation "
                    "exceeds tolerance");
  return sol;
}

struct CouplingCheck {
  bool ok = false;
  double margin = 0.0;  // gamma^2 - rho(X Y)
  double rho = 0.0;
};

/// Condition (c): spectral coupling of the two Riccati solutions.
inline CouplingCheck check_coupling(const Mat& x, const Mat& y, double gamma) {
  CouplingCheck c;
  c.rho = spectral_radius(x * y);
  c.margin = gamma * gamma - c.rho;
  c.ok = c.margin > 0.0;
  return c;
}

/// Central estimator for the loop-shifted problem. Expects conditions
/// (a)-(c) already verified on (X, Y).
inline Estimator synthesize(const BarredPlant& bp, const Mat& x, const Mat& y,
                            double gamma,
                            GainVariant variant = GainVariant::paper) {
  const double g2 = gamma * gamma;
  const Mat eye = Mat::Identity(bp.n2, bp.n2);
  Mat gram;
  double front;
  if (variant == GainVariant::paper) {
    gram = eye - y * x;
    front = 1.0 / g2;
  } else {
    gram = eye - (1.0 / g2) * y * x;
    front = g2;
  }
  Eigen::JacobiSVD<Mat> svd(gram);
  const double cond = svd.singularValues().maxCoeff() /
                      std::max(svd.singularValues().minCoeff(), 1e-300);
  if (cond > 1e12)
    throw SynthesisError("conditioning",
                         "synthesize: I - YX is numerically singular (condition "
                         "number " + std::to_string(cond) + ")");

  Estimator est;
  const Mat m = y * bp.C2.adjoint() * bp.S.adjoint() +
                (1.0 / g2) * bp.B1 * bp.D21.adjoint() * bp.S.adjoint();
  est.B_K = front * gram.partialPivLu().solve(m * bp.E2.inverse());
  est.C_K = -bp.E1.inverse() * bp.D12.adjoint() * bp.C1;
  est.A_K = bp.A - est.B_K * bp.S * bp.C2 +
            (1.0 / g2) * (bp.B1 - est.B_K * bp.S * bp.D21) * bp.B1.adjoint() * x;
  return est;
}

struct AssumptionReport {
  bool a1_stable = false;
  double a1_abscissa = 0.0;       // max Re eig(A)
  double a2_margin = 0.0;         // 1 - lambda_max(eps2^2 G^† G)
  int a3_rank = 0;                // row rank of [S D, S H3]
  bool a3_full = false;
  bool a4_ok = false;
  double a4_min_sv = 0.0;         // over the frequency grid
  bool a4_growth_ok = false;
  bool barred_rank_x = false;     // [A - iw I, B2; C1, D12] full column rank
  bool barred_rank_y = false;     // [A - iw I, B1; S C2, S D21] full row rank
  double barred_x_min_sv = 0.0;
  double barred_y_min_sv = 0.0;
};

inline std::vector<double> default_a4_grid() {
  std::vector<double> grid{0.0};
  for (int i = 0; i < 400; ++i)
    grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 399.0));
  return grid;
}

namespace detail {

inline double min_singular_value(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

}  // namespace detail

/// Evaluate the standing assumptions and the rank conditions of the
/// loop-shifted problem over a frequency grid. Report-only: nothing throws,
/// the caller decides what a failed entry means.
inline AssumptionReport check_assumptions(
    const QuantumPlant& plant, const Mat& s, const UncertaintyModel& unc,
    const BarredPlant& bp, const SynthesisParams& params,
    const std::vector<double>& omegas = default_a4_grid()) {
  AssumptionReport rep;
  rep.a1_abscissa = spectral_abscissa(plant.A);
  rep.a1_stable = rep.a1_abscissa < 0.0;

  if (unc.r2() > 0) {
    Eigen::JacobiSVD<Mat> gsvd(unc.G);
    const double smax = gsvd.singularValues().size()
                            ? gsvd.singularValues().maxCoeff()
                            : 0.0;
    rep.a2_margin = 1.0 - params.eps2 * params.eps2 * smax * smax;
  } else {
    rep.a2_margin = 1.0;
  }

  Mat a3(plant.m, 2 * plant.m + unc.r1());
  a3 << s * plant.D, s * unc.H3;
  Eigen::JacobiSVD<Mat> a3svd(a3);
  const double a3thr = 1e-9 * std::max(1.0, a3svd.singularValues().maxCoeff());
  rep.a3_rank = static_cast<int>(
      (a3svd.singularValues().array() > a3thr).count());
  rep.a3_full = rep.a3_rank == plant.m;

  const int n2 = 2 * plant.n, m2 = 2 * plant.m;
  const double plant_scale =
      1.0 + plant.A.norm() + plant.B.norm() + plant.C.norm() + plant.D.norm();
  rep.a4_min_sv = std::numeric_limits<double>::infinity();
  double w_max = 0.0, sv_at_w_max = 0.0;
  for (double w : omegas) {
    Mat pencil(n2 + m2, n2 + m2);
    pencil << plant.A - iu * w * Mat::Identity(n2, n2), plant.B, plant.C, plant.D;
    const double sv = detail::min_singular_value(pencil);
    rep.a4_min_sv = std::min(rep.a4_min_sv, sv);
    if (w >= w_max) {
      w_max = w;
      sv_at_w_max = sv;
    }
  }
  {
    // past the grid the pencil is dominated by -iwI, so the smallest singular
    // value must already be growing at the endpoint
    Mat pencil(n2 + m2, n2 + m2);
    const double w = 10.0 * std::max(w_max, 1.0);
    pencil << plant.A - iu * w * Mat::Identity(n2, n2), plant.B, plant.C, plant.D;
    rep.a4_growth_ok = detail::min_singular_value(pencil) >= sv_at_w_max;
  }
  rep.a4_ok = rep.a4_min_sv > 1e-6 * plant_scale && rep.a4_growth_ok;

  const int zdim = bp.r1 + bp.r2 + bp.p;
  const int wdim = bp.m2 + bp.r1 + bp.r2;
  rep.barred_x_min_sv = std::numeric_limits<double>::infinity();
  rep.barred_y_min_sv = std::numeric_limits<double>::infinity();
  for (double w : omegas) {
    Mat px(n2 + zdim, n2 + bp.p);
    px << bp.A - iu * w * Mat::Identity(n2, n2), Mat::Zero(n2, bp.p), bp.C1,
        bp.D12;
    rep.barred_x_min_sv = std::min(rep.barred_x_min_sv, detail::min_singular_value(px));
    Mat py(n2 + bp.m, n2 + wdim);
    py << bp.A - iu * w * Mat::Identity(n2, n2), bp.B1, bp.S * bp.C2,
        bp.S * bp.D21;
    rep.barred_y_min_sv = std::min(rep.barred_y_min_sv, detail::min_singular_value(py));
  }
  const double bscale = 1.0 + bp.A.norm() + bp.B1.norm() + bp.C1.norm();
  rep.barred_rank_x = rep.barred_x_min_sv > 1e-6 * bscale;
  rep.barred_rank_y = rep.barred_y_min_sv > 1e-6 * bscale;
  return rep;
}

/// One-call pipeline: scale, loop-shift, solve both Riccati equations, check
/// the coupling condition and emit the estimator. Infeasibility is reported
/// in the outcome rather than thrown.
struct SynthesisOutcome {
  bool feasible = false;
  std::string failed_condition;  // "a", "b", "c" or "conditioning"
  std::string detail;
  ScaledPlant scaled;
  BarredPlant barred;
  CareSolution x, y;
  double x_residual = 0.0, y_residual = 0.0;
  CouplingCheck coupling;
  Estimator estimator;
};

inline SynthesisOutcome synthesize_robust(const QuantumPlant& plant,
                                          const Mat& s,
                                          const UncertaintyModel& unc,
                                          const SynthesisParams& params,
                                          GainVariant variant = GainVariant::paper) {
  SynthesisOutcome out;
  out.scaled = build_scaled_plant(plant, s, unc, params);
  out.barred = loop_shift(out.scaled);
  try {
    out.x = solve_x_riccati(out.barred, params.gamma);
    out.x_residual = out.x.residual_norm;
    if (!out.x.is_stabilizing || !out.x.is_psd) {
      out.failed_condition = "a";
      out.detail = "X exists but is not a stabilizing PSD solution";
      return out;
    }
  } catch (const std::runtime_error& e) {
    out.failed_condition = "a";
    out.detail = e.what();
    return out;
  }
  try {
    out.y = solve_y_riccati(out.barred, params.gamma);
    out.y_residual = out.y.residual_norm;
    if (!out.y.is_stabilizing || !out.y.is_psd) {
      out.failed_condition = "b";
      out.detail = "Y exists but is not a stabilizing PSD solution";
      return out;
    }
  } catch (const std::runtime_error& e) {
    out.failed_condition = "b";
    out.detail = e.what();
    return out;
  }
  out.coupling = check_coupling(out.x.X, out.y.X, params.gamma);
  if (!out.coupling.ok) {
    out.failed_condition = "c";
    out.detail = "spectral radius of XY reaches gamma^2";
    return out;
  }
  try {
    out.estimator = synthesize(out.barred, out.x.X, out.y.X, params.gamma, variant);
  } catch (const SynthesisError& e) {
    out.failed_condition = e.condition;
    out.detail = e.what();
    return out;
  }
  out.feasible = true;
  return out;
}

/// Bisection for the smallest attenuation level at which the synthesis
/// conditions hold, at fixed eps1/eps2.
struct GammaSearch {
  bool bracketed = false;  // lo infeasible and hi feasible
  double gamma_min = 0.0;
  int evaluations = 0;
};

inline GammaSearch find_min_gamma(const QuantumPlant& plant, const Mat& s,
                                  const UncertaintyModel& unc, double eps1,
                                  double eps2, double lo, double hi,
                                  double rel_tol = 1e-3) {
  require(0 < lo && lo < hi, "find_min_gamma: need 0 < lo < hi");
  GammaSearch gs;
  auto feasible = [&](double gamma) {
    ++gs.evaluations;
    return synthesize_robust(plant, s, unc, {gamma, eps1, eps2}).feasible;
  };
  if (!feasible(hi)) return gs;  // nothing to bracket
  if (feasible(lo)) {
    gs.bracketed = false;
    gs.gamma_min = lo;  // feasible over the whole range
    return gs;
  }
  gs.bracketed = true;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  gs.gamma_min = hi;
  return gs;
}

}  // namespace qhinf
