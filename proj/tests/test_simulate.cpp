#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "mmlindley/simulate.hpp"

using namespace mmlindley;

namespace {

SimConfig small(std::uint64_t seed, std::uint64_t steps = 200000, int reps = 8) {
  SimConfig c;
  c.n_steps = steps;
  c.burn_in = 10000;
  c.seed = seed;
  c.replications = reps;
  return c;
}

}  // namespace

TEST(Reflection, IdentityHoldsForSampledIncrements) {
  Rng rng(21);
  for (int k = 0; k < 10000; ++k) {
    const double x = 10.0 * (uniform01(rng) - 0.5);
    const double lhs = std::exp(-positive_part(x)) + std::exp(-negative_part(x));
    EXPECT_NEAR(lhs, std::exp(-x) + 1.0, 1e-13 * (std::exp(-x) + 1.0));
  }
}

TEST(TailSlope, ExponentialSamples) {
  const double rate = 9.099;
  std::vector<std::vector<double>> reps(8);
  Rng rng(31);
  for (auto& r : reps)
    for (int k = 0; k < 20000; ++k) r.push_back(exponential_draw(rng, rate));
  const TailSlope t = tail_decay_estimate(reps);
  EXPECT_LE(t.ci_low, -rate);
  EXPECT_GE(t.ci_high, -rate);
  EXPECT_EQ(t.per_replication.size(), 8u);
}

TEST(TailSlope, AllZeroSamples) {
  try {
    tail_slope(std::vector<double>(1000, 0.0));
    FAIL() << "expected an error";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient tail mass"), std::string::npos);
  }
}

TEST(TailSlope, IntervalShrinksWithReplications) {
  Rng rng(41);
  auto estimate = [&rng](int k) {
    std::vector<std::vector<double>> reps(static_cast<std::size_t>(k));
    for (auto& r : reps)
      for (int i = 0; i < 25000; ++i) r.push_back(exponential_draw(rng, 2.0));
    const TailSlope t = tail_decay_estimate(reps);
    return t.ci_high - t.ci_low;
  };
  const double ratio = estimate(64) / estimate(16);
  EXPECT_GT(ratio, 0.3);
  EXPECT_LT(ratio, 0.75);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  c.burn_in = c.n_steps;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SimConfig{};
  c.replications = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(SimulateModel1, ZeroServiceStaysEmpty) {
  Model1Spec sp = mmtest::two_state_model1(mmtest::two_state_P());
  sp.service = {point_mass_zero_lst(), point_mass_zero_lst()};
  const SimEstimate e = simulate_model1(sp, small(1, 50000, 2));
  EXPECT_EQ(e.mean_by_state.value.norm(), 0.0);
}

TEST(SimulateModel1, VisitFrequenciesMatchPi) {
  const Model1Spec sp = mmtest::two_state_model1(mmtest::two_state_P());
  const SimEstimate e = simulate_model1(sp, small(2));
  for (Eigen::Index i = 0; i < 2; ++i)
    EXPECT_LE(std::abs(e.visit_frequencies.value(i) - sp.chain.pi()(i)), 3.0 * e.visit_frequencies.stderr_(i));
}

TEST(SimulateModel1, MeansMatchAnalytic) {
  const Model1Spec sp = mmtest::two_state_model1(mmtest::two_state_P());
  const RVector m = mean_workload(solve_model1(sp)).mean;
  const SimEstimate e = simulate_model1(sp, small(3, 500000, 8));
  for (Eigen::Index i = 0; i < 2; ++i)
    EXPECT_LE(std::abs(e.mean_by_state.value(i) - m(i)), 3.0 * e.mean_by_state.stderr_(i));
}

TEST(SimulateModel2, MapMeanMatchesPollaczekKhinchine) {
  // lambda = 2, S ~ exp(10): E W = 0.025.
  const SimEstimate e = simulate_model2(mmtest::scalar_model2(1.0), small(4, 400000, 8));
  EXPECT_LE(std::abs(e.mean_by_state.value(0) - 0.025), 3.0 * e.mean_by_state.stderr_(0));
}

TEST(SimulateModel2, AlternatingMatchesIndependentLoop) {
  const Model2Spec sp = mmtest::scalar_model2(0.0, 5.0, 3.0);
  const SimEstimate e = simulate_model2(sp, small(5, 200000, 8));
  // W = [D - C - W]^+ written out directly, with its own generator.
  std::mt19937_64 gen(77);
  std::exponential_distribution<double> D(5.0), C(3.0);
  std::vector<double> means;
  for (int r = 0; r < 8; ++r) {
    double w = 0.0, sum = 0.0;
    for (int k = 0; k < 200000; ++k) {
      w = std::max(D(gen) - C(gen) - w, 0.0);
      if (k >= 10000) sum += w;
    }
    means.push_back(sum / 190000.0);
  }
  double mean = 0.0, var = 0.0;
  for (double m : means) mean += m / 8.0;
  for (double m : means) var += (m - mean) * (m - mean) / 7.0;
  const double se = std::sqrt(var / 8.0 + e.mean_by_state.stderr_(0) * e.mean_by_state.stderr_(0));
  EXPECT_LE(std::abs(mean - e.mean_by_state.value(0)), 3.0 * se);
}

TEST(SimulateModel2, TransformsMatchAnalytic) {
  const Model2Spec sp = mmtest::two_state_model2(0.5);
  const Model2Solution sol = solve_model2(sp);
  const SimEstimate e = simulate_model2(sp, small(6, 300000, 8));
  for (const auto& [s, est] : e.transform_by_state) {
    const CVector ph = sol.phi(s);
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LE(std::abs(est.value(i) - ph(i).real()), 3.0 * est.stderr_(i)) << s;
  }
}

TEST(Simulate, DeterministicAcrossThreadCounts) {
  const Model2Spec sp = mmtest::two_state_model2(0.5);
  SimConfig a = small(7, 50000, 4), b = a;
  a.threads = 1;
  b.threads = 3;
  const SimEstimate x = simulate_model2(sp, a), y = simulate_model2(sp, b);
  EXPECT_EQ(x.mean_by_state.value, y.mean_by_state.value);
  EXPECT_EQ(x.mean_by_state.stderr_, y.mean_by_state.stderr_);
}

TEST(Simulate, SeedChangesStream) {
  const Model2Spec sp = mmtest::two_state_model2(0.5);
  const SimEstimate x = simulate_model2(sp, small(8, 30000, 2)), y = simulate_model2(sp, small(9, 30000, 2));
  EXPECT_NE(x.mean_by_state.value, y.mean_by_state.value);
}
