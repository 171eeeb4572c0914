#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/Jacobi>

#include <string>

#include "qhinf/types.hpp"

namespace qhinf {

/// Thrown when an algebraic Riccati or Lyapunov equation has no usable
/// stabilizing solution.
struct CareError : std::runtime_error {
  enum class Reason { imaginary_axis, subspace_extraction, residual, singular_operator };
  CareError(Reason r, const std::string& msg) : std::runtime_error(msg), reason(r) {}
  Reason reason;
};

namespace detail {

// Swap the diagonal entries T(i,i) and T(i+1,i+1) of a complex Schur form by
// a unitary similarity, updating U accordingly. The rotation is built from the
// eigenvector [b; c-a] of the 2x2 block [[a, b], [0, c]] for eigenvalue c.
inline void schur_swap_adjacent(Mat& t, Mat& u, Eigen::Index i) {
  const Complex a = t(i, i), b = t(i, i + 1), c = t(i + 1, i + 1);
  if (a == c) return;
  Eigen::JacobiRotation<Complex> rot;
  rot.makeGivens(b, c - a);
  t.applyOnTheLeft(i, i + 1, rot.adjoint());
  t.applyOnTheRight(i, i + 1, rot);
  u.applyOnTheRight(i, i + 1, rot);
  t(i + 1, i) = Complex(0.0, 0.0);
}

// Reorder a complex Schur decomposition so that eigenvalues selected by
// `select` occupy the leading diagonal positions. Bubble scheme with adjacent
// swaps; fine at the problem sizes handled here.
template <class Select>
void schur_reorder(Mat& t, Mat& u, Select select) {
  const Eigen::Index k = t.rows();
  Eigen::Index front = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!select(t(i, i))) continue;
    for (Eigen::Index j = i; j > front; --j) schur_swap_adjacent(t, u, j - 1);
    ++front;
  }
}

inline void check_hermitian_input(const Mat& x, const char* name) {
  const double scale = std::max(x.norm(), 1e-300);
  if (hermitian_deviation(x) > 1e-10 * scale)
    throw std::invalid_argument(std::string("solve_care: ") + name +
                                " is not Hermitian within 1e-10 relative");
}

}  // namespace detail

/// A^† X + X A + X R X + Q = 0 with Hermitian R, Q.
struct CareProblem {
  Mat A, R, Q;
};

struct CareSolution {
  Mat X;
  double residual_norm = 0.0;  // Frobenius norm of A^† X + X A + X R X + Q
  Vec closed_loop_eigs;        // spectrum of A + R X
  bool is_stabilizing = false;
  bool is_psd = false;
};

/// Hermitian X solving A X + X A^† + Q = 0 (Bartels-Stewart on the complex
/// Schur form of A).
inline Mat solve_lyapunov(const Mat& a, const Mat& q, double tol = 1e-9) {
  require(a.rows() == a.cols() && q.rows() == q.cols() && a.rows() == q.rows(),
          "solve_lyapunov: dimension mismatch");
  const Eigen::Index k = a.rows();
  if (k == 0) return Mat(0, 0);

  Eigen::ComplexSchur<Mat> schur(a);
  const Mat& t = schur.matrixT();
  const Mat& u = schur.matrixU();

  // lambda_i + conj(lambda_j) ~ 0 makes the Sylvester operator singular
  double scale = std::max(t.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      if (std::abs(t(i, i) + std::conj(t(j, j))) < 1e-12 * scale)
        throw CareError(CareError::Reason::singular_operator,
                        "solve_lyapunov: eigenvalue pair with lambda_i + conj(lambda_j) ~ 0");

  // T Y + Y T^† = -U^† Q U, solved entrywise from the bottom-right corner
  Mat c = -(u.adjoint() * q * u);
  Mat y = Mat::Zero(k, k);
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      Complex rhs = c(i, j);
      for (Eigen::Index l = i + 1; l < k; ++l) rhs -= t(i, l) * y(l, j);
      for (Eigen::Index l = j + 1; l < k; ++l) rhs -= y(i, l) * std::conj(t(j, l));
      y(i, j) = rhs / (t(i, i) + std::conj(t(j, j)));
    }
  }
  Mat x = hermitize(u * y * u.adjoint());

  const double res = (a * x + x * a.adjoint() + q).norm();
  if (res > tol * std::max(q.norm(), 1e-300))
    throw CareError(CareError::Reason::residual,
                    "solve_lyapunov: residual " + std::to_string(res) +
                        " exceeds tolerance");
  return x;
}

/// Stabilizing solution of A^† X + X A + X R X + Q = 0 via the stable
/// invariant subspace of the Hamiltonian [[A, R], [-Q, -A^†]] (complex Schur
/// form with eigenvalue reordering), followed by Newton refinement when the
/// residual warrants it.
inline CareSolution solve_care(const CareProblem& problem, double tol = 1e-8) {
  const Mat& a = problem.A;
  require(a.rows() == a.cols(), "solve_care: A must be square");
  const Eigen::Index k = a.rows();
  require(problem.R.rows() == k && problem.R.cols() == k &&
              problem.Q.rows() == k && problem.Q.cols() == k,
          "solve_care: dimension mismatch");
  detail::check_hermitian_input(problem.R, "R");
  detail::check_hermitian_input(problem.Q, "Q");
  const Mat r = hermitize(problem.R);
  const Mat q = hermitize(problem.Q);

  CareSolution sol;
  if (k == 0) {
    sol.X = Mat(0, 0);
    sol.closed_loop_eigs = Vec(0);
    sol.is_stabilizing = true;
    sol.is_psd = true;
    return sol;
  }

  Mat ham(2 * k, 2 * k);
  ham << a, r, -q, -a.adjoint();

  Eigen::ComplexSchur<Mat> schur(ham);
  Mat t = schur.matrixT();
  Mat u = schur.matrixU();

  const double hscale = std::max(ham.norm(), 1e-300);
  Eigen::Index stable_count = 0;
  for (Eigen::Index i = 0; i < 2 * k; ++i) {
    if (std::abs(t(i, i).real()) < 1e-9 * hscale)
      throw CareError(CareError::Reason::imaginary_axis,
                      "solve_care: Hamiltonian eigenvalue on the imaginary axis");
    if (t(i, i).real() < 0.0) ++stable_count;
  }
  if (stable_count != k)
    throw CareError(CareError::Reason::subspace_extraction,
                    "solve_care: Hamiltonian has " + std::to_string(stable_count) +
                        " stable eigenvalues, expected " + std::to_string(k));

  detail::schur_reorder(t, u, [](Complex lam) { return lam.real() < 0.0; });

  Mat u1 = u.topLeftCorner(k, k);
  Mat u2 = u.bottomLeftCorner(k, k);
  Eigen::FullPivLU<Mat> lu(u1);
  if (!lu.isInvertible())
    throw CareError(CareError::Reason::subspace_extraction,
                    "solve_care: singular U1, stabilizing solution does not exist");
  Mat x = hermitize(u2 * lu.inverse());

  auto residual = [&](const Mat& xx) {
    return Mat(a.adjoint() * xx + xx * a + xx * r * xx + q);
  };
  const double res_scale =
      a.norm() * x.norm() + q.norm() + r.norm() * x.norm() * x.norm() + 1.0;

  // Newton step: (A + R X)^† D + D (A + R X) = -residual
  for (int iter = 0; iter < 2 && residual(x).norm() > tol * res_scale; ++iter) {
    Mat closed = a + r * x;
    try {
      x += solve_lyapunov(closed.adjoint(), residual(x), 1e-2);
      x = hermitize(x);
    } catch (const CareError&) {
      break;  // refinement not possible; the residual check below decides
    }
  }

  sol.X = x;
  sol.residual_norm = residual(x).norm();
  if (sol.residual_norm > tol * res_scale)
    throw CareError(CareError::Reason::residual,
                    "solve_care: residual " + std::to_string(sol.residual_norm) +
                        " above tolerance after refinement");

  Mat closed = a + r * x;
  Eigen::ComplexEigenSolver<Mat> es(closed, false);
  sol.closed_loop_eigs = es.eigenvalues();
  sol.is_stabilizing = sol.closed_loop_eigs.real().maxCoeff() < 0.0;

  Eigen::SelfAdjointEigenSolver<Mat> sa(x, Eigen::EigenvaluesOnly);
  sol.is_psd = sa.eigenvalues().minCoeff() >= -1e-8 * std::max(x.norm(), 1e-300);
  return sol;
}

}  // namespace qhinf
