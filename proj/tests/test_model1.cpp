#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "mmlindley/model1.hpp"

using namespace mmlindley;

namespace {

RMatrix uniform2() { return RMatrix::Constant(2, 2, 0.5); }

Model1Spec scalar_model1() {
  return Model1Spec{ModulationChain(RMatrix::Ones(1, 1)), {exponential_lst(10.0)}, {exponential_lst(2.0)},
                    0.3, 0.3, 0.4, 0.5, NegativeMultiplierLaw({{-1.0, 1.0}})};
}

}  // namespace

TEST(BuildH1, ScalarSubstitution) {
  EXPECT_NEAR(std::abs(build_H1(scalar_model1(), 1.0)(0, 0) - 20.0 / 11.0), 0.0, 1e-14);
}

TEST(BuildH1, TwoStateEntryAndNormalization) {
  const Model1Spec sp = mmtest::two_state_model1(mmtest::two_state_P());
  EXPECT_NEAR(std::abs(build_H1(sp, 1.0)(0, 1) - 15.0 / 11.0), 0.0, 1e-14);
  EXPECT_LT((build_H1(sp, 0.0) - CMatrix::Ones(2, 2)).norm(), 1e-15);
}

TEST(Model1Stability, ScalarClosedForm) {
  const StabilityReport st = check_stability_model1(scalar_model1());
  ASSERT_TRUE(st.closed_form.has_value());
  EXPECT_NEAR(*st.closed_form, 10.0 / 12.0, 1e-14);
  EXPECT_TRUE(st.stable);
  ASSERT_TRUE(st.probe_frequency.has_value());
  EXPECT_NEAR(*st.probe_frequency, 10.0 / 12.0, 0.01);
}

TEST(Model1Stability, TwoStateDoubleSum) {
  // sum_i pi_i sum_j p_ij mu_i / (mu_i + lambda_j) with pi = (3/7, 4/7)
  const double expect = 3.0 / 7.0 * (0.2 * 10.0 / 12.0 + 0.8 * 10.0 / 13.0) +
                        4.0 / 7.0 * (0.6 * 8.0 / 10.0 + 0.4 * 8.0 / 11.0);
  const StabilityReport st = check_stability_model1(mmtest::two_state_model1(mmtest::two_state_P()));
  ASSERT_TRUE(st.closed_form.has_value());
  EXPECT_NEAR(*st.closed_form, expect, 1e-14);
  EXPECT_GT(*st.closed_form, 0.0);
}

TEST(Model1Stability, NoNegativeMultiplier) {
  Model1Spec sp = scalar_model1();
  sp.p1 = 0.6;
  sp.p2 = 0.4;
  sp.p3 = 0.0;
  EXPECT_FALSE(check_stability_model1(sp).stable);
  EXPECT_THROW(solve_model1(sp), UnstableError);
}

TEST(Model1Spec, ValidationErrors) {
  Model1Spec sp = scalar_model1();
  sp.p1 = 0.5;
  EXPECT_THROW(sp.validate(), InvalidArgument);
  sp = scalar_model1();
  sp.a = 1.0;
  EXPECT_THROW(sp.validate(), InvalidArgument);
}

TEST(Model1Spec, RepeatedServicePolesRejected) {
  Model1Spec sp = mmtest::two_state_model1(mmtest::two_state_P());
  sp.service[1] = exponential_lst(10.0);
  EXPECT_THROW(solve_model1(sp), InvalidArgument);
  sp.service = {erlang_mixture_lst({0.0, 1.0}, 10.0, 2), exponential_lst(8.0)};
  EXPECT_THROW(solve_model1(sp), InvalidArgument);
}

TEST(DeltaRoots, CountsMatchInterarrivalDegrees) {
  EXPECT_EQ(find_delta_roots(scalar_model1()).zeros.size(), 1u);
  const Model1Spec sp = mmtest::two_state_model1(mmtest::two_state_P());
  const ZeroSet z = find_delta_roots(sp);
  EXPECT_EQ(z.zeros.size(), 2u);
  for (double r : z.residuals) EXPECT_LT(r, 1e-10);
  for (cplx d : z.zeros) EXPECT_GT(d.real(), 0.0);
  Model1Spec e = sp;
  e.interarrival[0] = erlang_mixture_lst({0.0, 1.0}, 4.0, 2);
  EXPECT_EQ(find_delta_roots(e).zeros.size(), 3u);
}

TEST(Model1Solve, LeadingCoefficient) {
  // c_{0,1} = pi_1 p3 D_A1(0) prod_k D_Bk(0) = 0.5 * (1/3) * 2 * 80
  const Model1Solution sol = solve_model1(mmtest::two_state_model1(uniform2()));
  EXPECT_NEAR(sol.c[0](0), 80.0 / 3.0, 1e-10);
}

TEST(Model1Solve, NormalizationAndResidual) {
  const Model1Solution sol = solve_model1(mmtest::two_state_model1(mmtest::two_state_P()));
  const CVector ph0 = sol.phi(0.0, 1e-11);
  EXPECT_NEAR(std::abs(ph0(0) - 3.0 / 7.0), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(ph0(1) - 4.0 / 7.0), 0.0, 1e-8);
  EXPECT_LT(sol.b0_residual, 1e-6);
  EXPECT_LT(sol.functional_residual(1.0), 1e-6);
}

TEST(Model1Solve, TruncationIsCauchy) {
  const Model1Solution sol = solve_model1(mmtest::two_state_model1(mmtest::two_state_P()));
  for (cplx s : {cplx(0.5), cplx(1.0, 1.0), cplx(3.0)}) {
    const double tol = 1e-6;
    EXPECT_LT((sol.phi(s, tol) - sol.phi(s, tol / 2.0)).cwiseAbs().maxCoeff(), tol);
  }
}

TEST(Model1Solve, HyperexponentialAndErlangLaws) {
  RMatrix P(2, 2);
  P << 0.7, 0.3, 0.4, 0.6;
  const Model1Spec sp{ModulationChain(P),
                      {hyperexponential_lst({0.4, 0.6}, {2.0, 9.0}), exponential_lst(5.0)},
                      {erlang_mixture_lst({0.0, 1.0}, 4.0, 2), exponential_lst(1.2)},
                      0.4,
                      0.35,
                      0.25,
                      0.5,
                      NegativeMultiplierLaw({{-1.0, 0.5}, {-0.3, 0.5}})};
  const Model1Solution sol = solve_model1(sp);
  EXPECT_LT((sol.phi(0.0, 1e-11) - sp.chain.pi().cast<cplx>()).cwiseAbs().maxCoeff(), 1e-8);
  const MeanWorkload mw = mean_workload(sol);
  EXPECT_LT(mw.relative_gap, 1e-6);
}

TEST(MeanWorkload, FrozenTwoStateValues) {
  // Frozen from the solver; agreement with simulation is checked by the oracle tests.
  const MeanWorkload mw = mean_workload(solve_model1(mmtest::two_state_model1(mmtest::two_state_P())));
  EXPECT_NEAR(mw.mean(0), 0.0113198, 1e-6);
  EXPECT_NEAR(mw.mean(1), 0.0178682, 1e-6);
  EXPECT_LT(mw.relative_gap, 1e-6);
}

TEST(MeanWorkload, ZeroServiceGivesZeroWorkload) {
  Model1Spec sp = scalar_model1();
  sp.service = {point_mass_zero_lst()};
  const MeanWorkload mw = mean_workload(solve_model1(sp));
  EXPECT_NEAR(mw.mean(0), 0.0, 1e-10);
}

TEST(MeanWorkload, IncreasesWithServiceScale) {
  double prev = 0.0;
  for (double u : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    Model1Spec sp = mmtest::two_state_model1(mmtest::two_state_P());
    sp.service = {exponential_lst(10.0 / u), exponential_lst(8.0 / u)};
    const RVector m = mean_workload(solve_model1(sp)).mean;
    EXPECT_GT(m.sum(), prev);
    prev = m.sum();
  }
}

TEST(Model1Special, LeadingCoefficientAndNormalization) {
  const Model1SpecialSpec sp{ModulationChain(uniform2()),
                             {exponential_lst(10.0), exponential_lst(8.0)},
                             {mmtest::gexp(2.0), mmtest::gexp(3.0)},
                             NegativeMultiplierLaw({{-1.0, 1.0}})};
  const Model1SpecialSolution sol = solve_model1_special(sp);
  EXPECT_NEAR(sol.c[0](0), 40.0, 1e-10);
  EXPECT_LT((sol.phi(0.0) - CVector::Constant(2, 0.5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Model1Special, ScalarAlternatingCase) {
  // W = [S - A - W]^+ with one state.
  const Model1SpecialSpec sp{ModulationChain(RMatrix::Ones(1, 1)), {exponential_lst(3.0)}, {mmtest::gexp(1.0)},
                             NegativeMultiplierLaw({{-1.0, 1.0}})};
  const Model1SpecialSolution sol = solve_model1_special(sp);
  EXPECT_NEAR(std::abs(sol.phi(0.0)(0) - 1.0), 0.0, 1e-12);
  EXPECT_GT(sol.mean()(0), 0.0);
}

TEST(Model1Special, AgreesWithGeneralSolverForSmallBoundaryWeights) {
  const double eps = 1e-3;
  const Model1SpecialSpec special{ModulationChain(RMatrix::Ones(1, 1)), {exponential_lst(20.0)}, {mmtest::gexp(1.0)},
                                  NegativeMultiplierLaw({{-1.0, 1.0}})};
  const Model1Spec general{ModulationChain(RMatrix::Ones(1, 1)), {exponential_lst(20.0)}, {exponential_lst(1.0)},
                           eps, eps, 1.0 - 2.0 * eps, 0.5, NegativeMultiplierLaw({{-1.0, 1.0}})};
  const Model1SpecialSolution a = solve_model1_special(special);
  const Model1Solution b = solve_model1(general);
  for (double s : {0.5, 1.0, 2.0}) EXPECT_LT(std::abs(a.phi(s)(0) - b.phi(s, 1e-11)(0)), 1e-4);
}
