#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "mmlindley/probcore.hpp"

using namespace mmlindley;

TEST(StationaryDistribution, SwapChainIsUniform) {
  RMatrix P(2, 2);
  P << 0, 1, 1, 0;
  const RVector pi = stationary_distribution(P);
  EXPECT_NEAR(pi(0), 0.5, 1e-14);
  EXPECT_NEAR(pi(1), 0.5, 1e-14);
}

TEST(StationaryDistribution, TwoStateMatrix) {
  // Fixed point of pi P = pi by hand: 0.8 pi_1 = 0.6 pi_2.
  const RVector pi = stationary_distribution(mmtest::two_state_P());
  EXPECT_NEAR(pi(0), 3.0 / 7.0, 1e-14);
  EXPECT_NEAR(pi(1), 4.0 / 7.0, 1e-14);
}

TEST(StationaryDistribution, SingleState) {
  EXPECT_DOUBLE_EQ(stationary_distribution(RMatrix::Ones(1, 1))(0), 1.0);
}

TEST(StationaryDistribution, ReducibleChainNamesStates) {
  RMatrix P(3, 3);
  P << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 1;
  try {
    stationary_distribution(P);
    FAIL() << "expected ReducibleChainError";
  } catch (const ReducibleChainError& e) {
    ASSERT_EQ(e.unreachable_states().size(), 1u);
    EXPECT_EQ(e.unreachable_states()[0], 2u);
  }
}

TEST(StationaryDistribution, RejectsNonStochasticRows) {
  RMatrix P(2, 2);
  P << 0.5, 0.4, 0.5, 0.5;
  EXPECT_THROW(stationary_distribution(P), InvalidArgument);
}

TEST(ExponentialLst, ValuesAndPole) {
  const RationalLst e = exponential_lst(2.0);
  EXPECT_NEAR(std::abs(e(0.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(e(2.0) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(e(cplx(0.0, 1.0)) - cplx(0.8, -0.4)), 0.0, 1e-15);
  const RationalLst t = exponential_lst(10.0);
  ASSERT_EQ(t.denominator_roots().size(), 1u);
  EXPECT_NEAR(std::abs(t.denominator_roots()[0] + 10.0), 0.0, 1e-14);
  EXPECT_THROW(t(-10.0), PoleError);
  EXPECT_THROW(exponential_lst(0.0), InvalidArgument);
}

TEST(ErlangMixtureLst, DegenerateMixtureIsExponential) {
  const RationalLst m = erlang_mixture_lst({1.0}, 3.0, 1);
  const RationalLst e = exponential_lst(3.0);
  for (cplx s : {cplx(0.5), cplx(1.0, 2.0), cplx(7.0)}) EXPECT_NEAR(std::abs(m(s) - e(s)), 0.0, 1e-14);
}

TEST(ErlangMixtureLst, DirectSubstitution) {
  const RationalLst m = erlang_mixture_lst({0.5, 0.5}, 1.0, 2);
  EXPECT_NEAR(std::abs(m(1.0) - 0.375), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(m(0.0) - 1.0), 0.0, 1e-14);
  EXPECT_EQ(m.degree(), 2);
}

TEST(RationalLst, MomentsOfErlangTwo) {
  // Erlang(2, 4): mean 1/2, second moment k(k+1)/rate^2 = 6/16.
  const RationalLst m = erlang_mixture_lst({0.0, 1.0}, 4.0, 2);
  const auto mom = m.moments(2);
  EXPECT_NEAR(mom[1], 0.5, 1e-13);
  EXPECT_NEAR(mom[2], 0.375, 1e-13);
}

TEST(RationalLst, RejectsBadInvariants) {
  // N(0)/D(0) != 1
  EXPECT_THROW(RationalLst(Polynomial({2.0}), Polynomial({1.0, 1.0}), {cplx(-1.0)}), InvalidArgument);
  // root in the right half-plane
  EXPECT_THROW(RationalLst(Polynomial({-1.0}), Polynomial({-1.0, 1.0}), {cplx(1.0)}), InvalidArgument);
  // roots do not reproduce D
  EXPECT_THROW(RationalLst(Polynomial({2.0}), Polynomial({2.0, 1.0}), {cplx(-3.0)}), InvalidArgument);
}

TEST(HyperexponentialLst, MeanAndSampler) {
  const RationalLst h = hyperexponential_lst({0.25, 0.75}, {1.0, 4.0});
  EXPECT_NEAR(h.mean(), 0.25 + 0.75 / 4.0, 1e-13);
  ASSERT_TRUE(h.mixture().has_value());
  Rng rng(5);
  double sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) sum += h.mixture()->sample(rng);
  // standard deviation of the mean: sqrt(E S^2 - E S^2) / sqrt(n), E S^2 = 2(0.25 + 0.75/16)
  const double m = 0.4375, var = 2.0 * (0.25 + 0.75 / 16.0) - m * m;
  EXPECT_NEAR(sum / n, m, 4.0 * std::sqrt(var / n));
}

TEST(GeneralLst, DeterministicValuesAndMoments) {
  const GeneralLst d = GeneralLst::deterministic(0.4, 4);
  EXPECT_NEAR(std::abs(d(1.0) - std::exp(-0.4)), 0.0, 1e-15);
  EXPECT_NEAR(d.moment(3), 0.064, 1e-15);
  EXPECT_TRUE(std::isinf(d.zeta()));
}

TEST(GeneralLst, RejectsWrongDeclaredMoment) {
  EXPECT_THROW(GeneralLst([](cplx s) { return 2.0 / (2.0 + s); }, {1.0, 0.7}, 2.0), InvalidArgument);
  EXPECT_NO_THROW(GeneralLst([](cplx s) { return 2.0 / (2.0 + s); }, {1.0, 0.5, 0.5}, 2.0));
}

TEST(GeneralLst, PoleRegionEnforced) {
  const GeneralLst g = GeneralLst::from_rational(exponential_lst(3.0));
  EXPECT_NEAR(g.zeta(), 3.0, 1e-15);
  EXPECT_THROW(g(-3.5), PoleError);
}

TEST(NegativeMultiplierLaw, Validation) {
  EXPECT_THROW(NegativeMultiplierLaw({{0.5, 1.0}}), InvalidArgument);
  EXPECT_THROW(NegativeMultiplierLaw({{-0.5, 0.5}}), InvalidArgument);
  const NegativeMultiplierLaw law({{-1.0, 0.25}, {-0.5, 0.75}});
  Rng rng(9);
  int first = 0;
  for (int k = 0; k < 40000; ++k) first += law.sample(rng) == -1.0;
  EXPECT_NEAR(first / 40000.0, 0.25, 4.0 * std::sqrt(0.25 * 0.75 / 40000.0));
}

TEST(ModulationChain, TransitionFrequencies) {
  const ModulationChain chain(mmtest::two_state_P());
  Rng rng(11);
  int to_second = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) to_second += chain.next(0, rng) == 1;
  EXPECT_NEAR(static_cast<double>(to_second) / n, 0.8, 4.0 * std::sqrt(0.16 / n));
}
