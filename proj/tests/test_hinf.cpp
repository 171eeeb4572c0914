#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "qhinf/hinf.hpp"

using namespace qhinf;

namespace {

struct ExampleSetup {
  QuantumPlant plant;
  Mat s;
  UncertaintyModel unc;
  SynthesisParams params;
};

ExampleSetup example1() {
  return {testing::example_squeezer(), testing::example_homodyne(),
          testing::example1_uncertainty(), {0.65, 0.2, 0.6}};
}

ExampleSetup example2() {
  return {testing::example_squeezer(), testing::example_homodyne(),
          testing::example2_uncertainty(), {0.65, 0.7, 1.0}};
}

BarredPlant closed_form_barred(const ExampleSetup& ex) {
  return testing::closed_form_barred(ex.plant, ex.s, ex.unc, ex.params);
}

}  // namespace

TEST_CASE("build_scaled_plant block layout") {
  SUBCASE("mirror-coupling example") {
    const ExampleSetup ex = example1();
    const ScaledPlant sp = build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params);
    CHECK(sp.B1.cols() == 2 + 4 + 2);
    CHECK((sp.B1.leftCols(2) - ex.plant.B).norm() == 0.0);
    CHECK((sp.B1.middleCols(2, 4) - 3.25 * ex.unc.H1).norm() < 1e-14);
    CHECK((sp.B1.rightCols(2) - (0.65 / 0.6) * ex.unc.H2).norm() < 1e-14);
    CHECK(sp.B2.norm() == 0.0);
    CHECK((sp.C1.topRows(4) - 0.2 * ex.unc.E).norm() < 1e-15);
    CHECK(sp.C1.middleRows(4, 2).norm() == 0.0);
    CHECK((sp.C1.bottomRows(1) - ex.plant.L).norm() == 0.0);
    CHECK(sp.D11.norm() == doctest::Approx((0.6 * ex.unc.G).norm()));
    CHECK((sp.D11.block(4, 0, 2, 2) - 0.6 * ex.unc.G).norm() == 0.0);
    CHECK(sp.D12.topRows(6).norm() == 0.0);
    CHECK((sp.D12.bottomRows(1) + Mat::Identity(1, 1)).norm() == 0.0);
    CHECK((sp.C2 - ex.plant.C).norm() == 0.0);
    CHECK((sp.D21.leftCols(2) - ex.plant.D).norm() == 0.0);
    CHECK((sp.D21.middleCols(2, 4) - 3.25 * ex.unc.H3).norm() < 1e-14);
    CHECK(sp.D21.rightCols(2).norm() == 0.0);
    CHECK(sp.D22.norm() == 0.0);
  }

  SUBCASE("nonlinearity example has a zero H3 block in D21") {
    const ExampleSetup ex = example2();
    const ScaledPlant sp = build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params);
    CHECK(sp.D21.middleCols(2, 2).norm() == 0.0);
    CHECK((sp.D21.leftCols(2) - ex.plant.D).norm() == 0.0);
  }

  SUBCASE("all-zero uncertainty reduces to the padded nominal plant") {
    const ExampleSetup ex = example1();
    UncertaintyModel zero = ex.unc;
    zero.H1.setZero();
    zero.H2.setZero();
    zero.H3.setZero();
    zero.E.setZero();
    zero.G.setZero();
    const ScaledPlant sp = build_scaled_plant(ex.plant, ex.s, zero, ex.params);
    CHECK((sp.B1.leftCols(2) - ex.plant.B).norm() == 0.0);
    CHECK(sp.B1.rightCols(6).norm() == 0.0);
    CHECK(sp.D11.norm() == 0.0);
    CHECK(sp.C1.topRows(6).norm() == 0.0);
  }
}

TEST_CASE("loop_shift") {
  SUBCASE("matches the closed forms on both reference examples") {
    for (const ExampleSetup& ex : {example1(), example2()}) {
      const BarredPlant general =
          loop_shift(build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params));
      const BarredPlant closed = closed_form_barred(ex);
      CHECK((general.A - closed.A).norm() == 0.0);
      CHECK((general.B1 - closed.B1).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((general.C1 - closed.C1).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((general.D12 - closed.D12).norm() == 0.0);
      CHECK((general.C2 - closed.C2).norm() == 0.0);
      CHECK((general.D21 - closed.D21).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((general.E2 - closed.E2).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((general.E1 - Mat::Identity(1, 1)).norm() == 0.0);
    }
  }

  SUBCASE("closed-form equality over random admissible problems") {
    std::mt19937 gen(90210);
    for (int trial = 0; trial < 120; ++trial) {
      const testing::RandomScaledInstance ri = testing::random_scaled_instance(gen);
      const BarredPlant general =
          loop_shift(build_scaled_plant(ri.plant, ri.s, ri.unc, ri.params));
      const BarredPlant closed =
          testing::closed_form_barred(ri.plant, ri.s, ri.unc, ri.params);
      const double scale = 1.0 + closed.B1.cwiseAbs().maxCoeff() +
                           closed.D21.cwiseAbs().maxCoeff();
      CHECK((general.A - closed.A).cwiseAbs().maxCoeff() < 1e-12 * scale);
      CHECK((general.B1 - closed.B1).cwiseAbs().maxCoeff() < 1e-12 * scale);
      CHECK((general.C1 - closed.C1).cwiseAbs().maxCoeff() < 1e-12 * scale);
      CHECK((general.D21 - closed.D21).cwiseAbs().maxCoeff() < 1e-12 * scale);
      CHECK((general.D12 - closed.D12).norm() == 0.0);
      CHECK((general.E1 - Mat::Identity(ri.plant.p(), ri.plant.p())).norm() == 0.0);
    }
  }

  SUBCASE("zero D11 passes through unchanged") {
    const ExampleSetup ex = example2();  // G = 0 makes D11 = 0
    const ScaledPlant sp = build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params);
    REQUIRE(sp.D11.norm() == 0.0);
    const BarredPlant bp = loop_shift(sp);
    CHECK((bp.B1 - sp.B1).norm() == 0.0);
    CHECK((bp.C1 - sp.C1).norm() == 0.0);
    CHECK((bp.D21 - sp.D21).norm() == 0.0);
    CHECK((bp.A - sp.A).norm() == 0.0);
  }

  SUBCASE("contraction violation is rejected") {
    ExampleSetup ex = example1();
    ex.params.eps2 = 2.0;  // eps2^2 G^†G >= I
    const ScaledPlant sp = build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params);
    CHECK_THROWS_AS(loop_shift(sp), SynthesisError);
  }
}

TEST_CASE("synthesis Riccati equations on the reference examples") {
  for (const ExampleSetup& ex : {example1(), example2()}) {
    CAPTURE(ex.params.eps1);
    const BarredPlant bp =
        loop_shift(build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params));

    const CareSolution xs = solve_x_riccati(bp, ex.params.gamma);
    CHECK(xs.is_stabilizing);
    CHECK(xs.is_psd);
    CHECK(x_riccati_relative_residual(bp, xs.X, ex.params.gamma) < 1e-8);

    const CareSolution ys = solve_y_riccati(bp, ex.params.gamma);
    CHECK(ys.is_stabilizing);
    CHECK(ys.is_psd);
    CHECK(y_riccati_relative_residual(bp, ys.X, ex.params.gamma) < 1e-8);

    // independent route: forward integration of the two differential forms
    const double g2 = ex.params.gamma * ex.params.gamma;
    const Mat proj = Mat::Identity(bp.C1.rows(), bp.C1.rows()) -
                     bp.D12 * bp.E1.inverse() * bp.D12.adjoint();
    const Mat x_ode = testing::integrate_care_ode(
        bp.A, (1.0 / g2) * bp.B1 * bp.B1.adjoint(),
        hermitize(bp.C1.adjoint() * proj * bp.C1));
    CHECK((xs.X - x_ode).norm() < 1e-6 * (1.0 + x_ode.norm()));

    const Mat y_ode = testing::integrate_y_ode(bp, ex.params.gamma);
    CHECK((ys.X - y_ode).norm() < 1e-6 * (1.0 + y_ode.norm()));

    const CouplingCheck cc = check_coupling(xs.X, ys.X, ex.params.gamma);
    CHECK(cc.ok);
    CHECK(cc.margin > 0.0);
  }
}

TEST_CASE("X Riccati corner cases") {
  SUBCASE("zero C1 with stable A gives X = 0") {
    BarredPlant bp;
    bp.n2 = 2;
    bp.m2 = 2;
    bp.m = 1;
    bp.r1 = 0;
    bp.r2 = 0;
    bp.p = 1;
    bp.A = -Mat::Identity(2, 2);
    bp.B1 = Mat::Identity(2, 2);
    bp.C1 = Mat::Zero(1, 2);
    bp.D12 = -Mat::Identity(1, 1);
    bp.C2 = Mat::Identity(2, 2);
    bp.D21 = Mat::Identity(2, 2);
    bp.S = testing::example_homodyne();
    bp.E1 = Mat::Identity(1, 1);
    bp.E2 = bp.S * bp.S.adjoint();
    const CareSolution xs = solve_x_riccati(bp, 0.8);
    CHECK(xs.X.norm() < 1e-12);

    SUBCASE("zero B1 kills the constant term of the Y equation") {
      BarredPlant bq = bp;
      bq.B1 = Mat::Zero(2, 2);
      bq.D21 = Mat::Identity(2, 2);
      const CareSolution ys = solve_y_riccati(bq, 0.8);
      CHECK(ys.X.norm() < 1e-12);
    }
  }

  SUBCASE("X is nonincreasing in gamma and approaches the Lyapunov limit") {
    const ExampleSetup ex = example1();
    const BarredPlant bp =
        loop_shift(build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params));
    const Mat x1 = solve_x_riccati(bp, 1.0).X;
    const Mat x10 = solve_x_riccati(bp, 10.0).X;
    const Mat xinf = solve_x_riccati(bp, 1e6).X;
    auto psd_geq = [](const Mat& a, const Mat& b) {
      Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(a - b), Eigen::EigenvaluesOnly);
      return es.eigenvalues().minCoeff() > -1e-9 * (1.0 + a.norm());
    };
    CHECK(psd_geq(x1, x10));
    CHECK(psd_geq(x10, xinf));
    const Mat proj = Mat::Identity(bp.C1.rows(), bp.C1.rows()) -
                     bp.D12 * bp.E1.inverse() * bp.D12.adjoint();
    const CareSolution lyap = solve_care(
        {bp.A, Mat::Zero(2, 2), hermitize(bp.C1.adjoint() * proj * bp.C1)});
    CHECK((xinf - lyap.X).norm() < 1e-6 * (1.0 + lyap.X.norm()));
  }
}

TEST_CASE("check_coupling") {
  CHECK(check_coupling(Mat::Zero(2, 2), Mat::Zero(2, 2), 0.65).ok);
  CHECK(check_coupling(Mat::Zero(2, 2), Mat::Zero(2, 2), 0.65).margin ==
        doctest::Approx(0.65 * 0.65));
  const CouplingCheck bad =
      check_coupling(Mat::Identity(2, 2), Mat::Identity(2, 2), 0.5);
  CHECK(!bad.ok);
  CHECK(bad.rho == doctest::Approx(1.0));
}

TEST_CASE("synthesize reproduces the reference estimators") {
  SUBCASE("mirror-coupling example") {
    const ExampleSetup ex = example1();
    const SynthesisOutcome oc =
        synthesize_robust(ex.plant, ex.s, ex.unc, ex.params);
    REQUIRE(oc.feasible);
    Mat ak(2, 2), bk(2, 1), ck(1, 2);
    ak << 0.1905, -1.4676, -1.4676, 0.1905;
    bk << Complex(0, -1.4717), Complex(0, 1.4717);
    ck << 0.1, -0.1;
    CHECK((oc.estimator.A_K - ak).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((oc.estimator.B_K - bk).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((oc.estimator.C_K - ck).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("nonlinearity example") {
    const ExampleSetup ex = example2();
    const SynthesisOutcome oc =
        synthesize_robust(ex.plant, ex.s, ex.unc, ex.params);
    REQUIRE(oc.feasible);
    Mat ak(2, 2), bk(2, 1);
    ak << 0.3231, -1.3660, -1.3660, 0.3231;
    bk << Complex(0, -1.4852), Complex(0, 1.4852);
    CHECK((oc.estimator.A_K - ak).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((oc.estimator.B_K - bk).cwiseAbs().maxCoeff() < 1e-3);
  }

  SUBCASE("C_K equals L for this problem class") {
    const ExampleSetup ex = example1();
    const SynthesisOutcome oc =
        synthesize_robust(ex.plant, ex.s, ex.unc, ex.params);
    REQUIRE(oc.feasible);
    CHECK((oc.estimator.C_K - ex.plant.L).norm() == 0.0);
  }

  SUBCASE("gain variants differ by the documented scaling") {
    const ExampleSetup ex = example1();
    const SynthesisOutcome paper =
        synthesize_robust(ex.plant, ex.s, ex.unc, ex.params, GainVariant::paper);
    const SynthesisOutcome scaled = synthesize_robust(
        ex.plant, ex.s, ex.unc, ex.params, GainVariant::scaled_coupling);
    REQUIRE(paper.feasible);
    REQUIRE(scaled.feasible);
    CHECK((paper.estimator.B_K - scaled.estimator.B_K).norm() > 1e-3);
    CHECK((paper.estimator.C_K - scaled.estimator.C_K).norm() == 0.0);
  }
}

TEST_CASE("check_assumptions") {
  SUBCASE("mirror-coupling example") {
    const ExampleSetup ex = example1();
    const BarredPlant bp =
        loop_shift(build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params));
    const AssumptionReport ar =
        check_assumptions(ex.plant, ex.s, ex.unc, bp, ex.params);
    CHECK(ar.a1_stable);
    CHECK(ar.a1_abscissa == doctest::Approx(-1.5));
    CHECK(ar.a2_margin == doctest::Approx(0.64));
    CHECK(ar.a3_full);
    CHECK(ar.a3_rank == 1);
    CHECK(ar.a4_ok);
    CHECK(ar.barred_rank_x);
    CHECK(ar.barred_rank_y);
  }

  SUBCASE("nonlinearity example margin with G = 0") {
    const ExampleSetup ex = example2();
    const BarredPlant bp =
        loop_shift(build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params));
    const AssumptionReport ar =
        check_assumptions(ex.plant, ex.s, ex.unc, bp, ex.params);
    CHECK(ar.a2_margin == doctest::Approx(1.0));
  }

  SUBCASE("unstable plant is flagged") {
    ExampleSetup ex = example1();
    ex.plant.A = Mat::Identity(2, 2);
    const BarredPlant bp =
        loop_shift(build_scaled_plant(ex.plant, ex.s, ex.unc, ex.params));
    const AssumptionReport ar =
        check_assumptions(ex.plant, ex.s, ex.unc, bp, ex.params);
    CHECK(!ar.a1_stable);
    CHECK(ar.a1_abscissa == doctest::Approx(1.0));
  }
}

TEST_CASE("infeasible attenuation levels are reported with the condition") {
  const ExampleSetup ex = example1();
  SynthesisParams tight = ex.params;
  tight.gamma = 0.01;
  const SynthesisOutcome oc = synthesize_robust(ex.plant, ex.s, ex.unc, tight);
  CHECK(!oc.feasible);
  CHECK((oc.failed_condition == "a" || oc.failed_condition == "b"));
}

TEST_CASE("find_min_gamma brackets the feasibility boundary") {
  const ExampleSetup ex = example1();
  const GammaSearch gs =
      find_min_gamma(ex.plant, ex.s, ex.unc, ex.params.eps1, ex.params.eps2,
                     0.3, 1.0);
  REQUIRE(gs.bracketed);
  CHECK(gs.gamma_min > 0.38);
  CHECK(gs.gamma_min < 0.43);
  CHECK(synthesize_robust(ex.plant, ex.s, ex.unc,
                          {gs.gamma_min * 1.01, ex.params.eps1, ex.params.eps2})
            .feasible);
  CHECK(!synthesize_robust(ex.plant, ex.s, ex.unc,
                           {gs.gamma_min * 0.95, ex.params.eps1, ex.params.eps2})
             .feasible);
}
