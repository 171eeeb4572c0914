#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "qhinf/freq.hpp"

using namespace qhinf;

namespace {

SynthesisOutcome robust_example1() {
  return synthesize_robust(testing::example_squeezer(), testing::example_homodyne(),
                           testing::example1_uncertainty(), {0.65, 0.2, 0.6});
}

SynthesisOutcome robust_example2() {
  return synthesize_robust(testing::example_squeezer(), testing::example_homodyne(),
                           testing::example2_uncertainty(), {0.65, 0.7, 1.0});
}

StateSpaceSystem first_order() {
  StateSpaceSystem sys;
  sys.A = -Mat::Identity(1, 1);
  sys.B = Mat::Identity(1, 1);
  sys.C = Mat::Identity(1, 1);
  sys.D = Mat::Zero(1, 1);
  return sys;
}

}  // namespace

TEST_CASE("estimator_tf reproduces the reference transfer functions") {
  SUBCASE("mirror-coupling example") {
    const SynthesisOutcome oc = robust_example1();
    REQUIRE(oc.feasible);
    const auto tfs = estimator_tf(oc.estimator);
    REQUIRE(tfs.size() == 1);
    const RationalTF& tf = tfs[0];
    REQUIRE(tf.den.size() == 3);
    REQUIRE(tf.num.size() == 2);
    CHECK(std::abs(tf.den(0) - Complex(1, 0)) < 1e-12);
    CHECK(std::abs(tf.den(1) - Complex(-0.381, 0)) < 1e-3 * 0.381);
    CHECK(std::abs(tf.den(2) - Complex(-2.118, 0)) < 1e-3 * 2.118);
    CHECK(std::abs(tf.num(0) - Complex(0, -0.2943)) < 1e-3 * 0.2943);
    CHECK(std::abs(tf.num(1) - Complex(0, -0.3759)) < 1e-3 * 0.3759);
  }

  SUBCASE("nonlinearity example") {
    const SynthesisOutcome oc = robust_example2();
    REQUIRE(oc.feasible);
    const RationalTF tf = estimator_tf(oc.estimator)[0];
    CHECK(std::abs(tf.den(1) - Complex(-0.6461, 0)) < 1e-3 * 0.6461);
    CHECK(std::abs(tf.den(2) - Complex(-1.762, 0)) < 1e-3 * 1.762);
    CHECK(std::abs(tf.num(0) - Complex(0, -0.297)) < 1e-3 * 0.297);
    CHECK(std::abs(tf.num(1) - Complex(0, -0.3098)) < 1e-3 * 0.3098);
  }

  SUBCASE("zero output map gives a zero transfer function") {
    Estimator est;
    est.A_K = -Mat::Identity(2, 2);
    est.B_K = Mat::Identity(2, 1);
    est.C_K = Mat::Zero(1, 2);
    const RationalTF tf = estimator_tf(est)[0];
    CHECK(tf.num.cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("rational form agrees with the resolvent at random frequencies") {
    std::mt19937 gen(808);
    std::uniform_real_distribution<double> freq(1e-2, 1e2);
    for (int trial = 0; trial < 10; ++trial) {
      Estimator est;
      const Eigen::Index k = 2 + trial % 4;
      est.A_K = testing::random_stable(gen, k);
      est.B_K = testing::random_complex(gen, k, 1);
      est.C_K = testing::random_complex(gen, 1, k);
      const RationalTF tf = estimator_tf(est)[0];
      for (int q = 0; q < 5; ++q) {
        const double w = freq(gen);
        const Complex direct =
            (est.C_K * (iu * w * Mat::Identity(k, k) - est.A_K)
                           .partialPivLu()
                           .solve(est.B_K))(0, 0);
        CHECK(std::abs(tf.eval(iu * w) - direct) < 1e-8 * (1.0 + std::abs(direct)));
      }
    }
  }

  SUBCASE("multi-output systems yield a matrix of rationals") {
    std::mt19937 gen(4096);
    const Eigen::Index k = 3;
    const Mat a = testing::random_stable(gen, k);
    const Mat b = testing::random_complex(gen, k, 2);
    const Mat c = testing::random_complex(gen, 2, k);
    const auto tfm = transfer_function_matrix(a, b, c);
    REQUIRE(tfm.size() == 2);
    REQUIRE(tfm[0].size() == 2);
    const double w = 0.37;
    const Mat direct = c * (iu * w * Mat::Identity(k, k) - a).partialPivLu().solve(b);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(std::abs(tfm[i][j].eval(iu * w) - direct(i, j)) <
              1e-8 * (1.0 + std::abs(direct(i, j))));
  }
}

TEST_CASE("error_system") {
  const QuantumPlant plant = testing::example_squeezer();
  const Mat s = testing::example_homodyne();
  const Perturbation zero{Mat::Zero(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2)};

  SUBCASE("block structure at delta = 0") {
    const Mat p = solve_kalman_riccati(plant, s);
    const Estimator kal = as_estimator(kalman_filter(plant, s, p));
    const StateSpaceSystem sys = error_system(plant, zero, s, kal);
    CHECK((sys.A.topLeftCorner(2, 2) - plant.A).norm() == 0.0);
    CHECK(sys.A.topRightCorner(2, 2).norm() == 0.0);
    CHECK((sys.A.bottomLeftCorner(2, 2) - kal.B_K * s * plant.C).norm() == 0.0);
    CHECK((sys.A.bottomRightCorner(2, 2) - kal.A_K).norm() == 0.0);
    CHECK((sys.B.topRows(2) - plant.B).norm() == 0.0);
    CHECK((sys.B.bottomRows(2) - kal.B_K * s * plant.D).norm() == 0.0);
    CHECK((sys.C.leftCols(2) + plant.L).norm() == 0.0);
    CHECK((sys.C.rightCols(2) - kal.C_K).norm() == 0.0);
    CHECK(sys.D.norm() == 0.0);
  }

  SUBCASE("plant block is estimator-independent") {
    const SynthesisOutcome oc = robust_example1();
    REQUIRE(oc.feasible);
    const Mat p = solve_kalman_riccati(plant, s);
    const Estimator kal = as_estimator(kalman_filter(plant, s, p));
    const StateSpaceSystem a = error_system(plant, zero, s, kal);
    const StateSpaceSystem b = error_system(plant, zero, s, oc.estimator);
    CHECK((a.A.topLeftCorner(2, 2) - b.A.topLeftCorner(2, 2)).norm() == 0.0);
    CHECK((a.B.topRows(2) - b.B.topRows(2)).norm() == 0.0);
  }

  SUBCASE("L = 0 and C_K = 0 produce a vanishing response") {
    QuantumPlant mute = plant;
    mute.L = Mat::Zero(1, 2);
    Estimator est;
    est.A_K = -Mat::Identity(2, 2);
    est.B_K = Mat::Zero(2, 1);
    est.C_K = Mat::Zero(1, 2);
    const StateSpaceSystem sys = error_system(mute, zero, s, est);
    const FrequencyResponse fr = freq_response(select_channel(sys, 0), {0.1, 1.0});
    CHECK(std::abs(fr.values[0](0, 0)) == 0.0);
    CHECK(std::abs(fr.values[1](0, 0)) == 0.0);
  }
}

TEST_CASE("select_channel") {
  StateSpaceSystem sys;
  sys.A = -Mat::Identity(2, 2);
  sys.B = Mat::Zero(2, 2);
  sys.B(0, 0) = 1.0;
  sys.B(1, 1) = 2.0;
  sys.C = Mat::Identity(2, 2);
  sys.D = Mat::Zero(2, 2);
  const StateSpaceSystem ch0 = select_channel(sys, 0);
  CHECK(ch0.B.cols() == 1);
  CHECK(ch0.B(0, 0) == Complex(1, 0));
  CHECK(ch0.D.cols() == 1);
  CHECK_THROWS_AS(select_channel(sys, 2), std::invalid_argument);
  CHECK_THROWS_AS(select_channel(sys, -1), std::invalid_argument);
}

TEST_CASE("freq_response") {
  const StateSpaceSystem sys = first_order();

  SUBCASE("first-order values") {
    const FrequencyResponse fr = freq_response(sys, {0.0, 1.0});
    CHECK(std::abs(fr.values[0](0, 0) - Complex(1, 0)) < 1e-14);
    CHECK(fr.magnitudes_db[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(fr.values[1](0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-14);
    CHECK(fr.magnitudes_db[1] == doctest::Approx(-3.0103).epsilon(1e-4));
  }

  SUBCASE("tends to |D| as omega grows") {
    StateSpaceSystem with_d = sys;
    with_d.D = 0.5 * Mat::Identity(1, 1);
    const FrequencyResponse fr = freq_response(with_d, {1e6});
    CHECK(std::abs(std::abs(fr.values[0](0, 0)) - 0.5) < 1e-5);
  }

  SUBCASE("pole on the imaginary axis is reported undefined") {
    StateSpaceSystem osc;
    osc.A = Mat(1, 1);
    osc.A << Complex(0, 1);  // eigenvalue exactly i
    osc.B = Mat::Identity(1, 1);
    osc.C = Mat::Identity(1, 1);
    osc.D = Mat::Zero(1, 1);
    const FrequencyResponse fr = freq_response(osc, {0.5, 1.0});
    CHECK(fr.defined[0]);
    CHECK(!fr.defined[1]);
    CHECK(std::isnan(fr.magnitudes_db[1]));
  }
}

TEST_CASE("hinf_norm") {
  SUBCASE("first-order low-pass has norm 1 at omega 0") {
    const HinfNorm n = hinf_norm(first_order());
    CHECK(n.finite);
    CHECK(n.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(n.peak_omega < 1e-2);
  }

  SUBCASE("pure gain") {
    StateSpaceSystem gain;
    gain.A = Mat::Zero(0, 0);
    gain.B = Mat::Zero(0, 1);
    gain.C = Mat::Zero(1, 0);
    gain.D = 2.0 * Mat::Identity(1, 1);
    const HinfNorm n = hinf_norm(gain);
    CHECK(n.finite);
    CHECK(n.value == doctest::Approx(2.0));
  }

  SUBCASE("unstable dynamics report an infinite norm") {
    StateSpaceSystem sys = first_order();
    sys.A = Mat::Identity(1, 1);
    const HinfNorm n = hinf_norm(sys);
    CHECK(!n.finite);
    CHECK(std::isinf(n.value));
  }

  SUBCASE("refinement never loses the grid maximum") {
    std::mt19937 gen(117);
    for (int trial = 0; trial < 8; ++trial) {
      StateSpaceSystem sys;
      const Eigen::Index k = 2 + trial % 3;
      sys.A = testing::random_stable(gen, k, 0.3);
      sys.B = testing::random_complex(gen, k, 2);
      sys.C = testing::random_complex(gen, 1, k);
      sys.D = Mat::Zero(1, 2);
      const HinfNorm n = hinf_norm(sys);
      const PeakEstimate grid_peak = peak_magnitude(sys, default_omega_grid());
      CHECK(n.value >= grid_peak.magnitude * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("robust filter beats the optimal filter at full uncertainty") {
  const QuantumPlant plant = testing::example_squeezer();
  const Mat s = testing::example_homodyne();
  const SynthesisOutcome oc = robust_example1();
  REQUIRE(oc.feasible);
  const Perturbation pert =
      apply_uncertainty(plant, testing::example1_uncertainty(), 1.0);

  const Mat p = solve_kalman_riccati(plant, s);
  const Estimator kal = as_estimator(kalman_filter(plant, s, p));

  const StateSpaceSystem robust_err =
      select_channel(error_system(plant, pert, s, oc.estimator), 0);
  const StateSpaceSystem kalman_err =
      select_channel(error_system(plant, pert, s, kal), 0);

  const auto grid = default_omega_grid();
  const PeakEstimate robust_peak = peak_magnitude(robust_err, grid);
  const PeakEstimate kalman_peak = peak_magnitude(kalman_err, grid);
  CHECK(robust_peak.magnitude < kalman_peak.magnitude);

  // the robust filter matrix is unstable for this data, so its error system
  // has no finite supremum over the closed right half-plane
  CHECK(!hinf_norm(robust_err).finite);
  CHECK(hinf_norm(kalman_err).finite);
  CHECK(hinf_norm(kalman_err).value >= kalman_peak.magnitude * (1.0 - 1e-12));
}

TEST_CASE("robust error curve regression (frozen from the verified build)") {
  const SynthesisOutcome oc = robust_example1();
  REQUIRE(oc.feasible);
  const Perturbation pert = apply_uncertainty(
      testing::example_squeezer(), testing::example1_uncertainty(), 1.0);
  const StateSpaceSystem err = select_channel(
      error_system(testing::example_squeezer(), pert, testing::example_homodyne(),
                   oc.estimator),
      0);
  const PeakEstimate peak = peak_magnitude(err, default_omega_grid());
  // regression values frozen from the first verified synthesis; the response
  // is largest at the low end of the default grid
  CHECK(peak.magnitude_db == doctest::Approx(-42.861544405860).epsilon(1e-9));
  CHECK(peak.omega == doctest::Approx(0.01).epsilon(1e-12));
}
