#pragma once

// Instances shared by the unit tests and the acceptance runner.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mmlindley/model1.hpp"
#include "mmlindley/model2.hpp"

namespace mmtest {

using namespace mmlindley;

inline RMatrix two_state_P() {
  RMatrix P(2, 2);
  P << 0.2, 0.8, 0.6, 0.4;
  return P;
}

inline std::filesystem::path config_dir() { return MMLINDLEY_CONFIG_DIR; }

inline GeneralLst gexp(double rate) { return GeneralLst::from_rational(exponential_lst(rate)); }

// One state, A ~ exp(2), S ~ exp(10); det G = (s^2 + 8s - 10) / (10 + s) at p = 0.5.
inline Model2Spec scalar_model2(double p, double mu = 10.0, double theta = 3.0) {
  return Model2Spec{ModulationChain(RMatrix::Ones(1, 1)), {2.0}, {mu}, {gexp(10.0)}, {gexp(theta)}, p};
}

// Two states with lambda = (2, 3), service and D rates (10, 8) / u, C rates (8, 6).
inline Model2Spec two_state_model2(double p, double u = 1.0) {
  return Model2Spec{ModulationChain(two_state_P()),
                    {2.0, 3.0},
                    {10.0 / u, 8.0 / u},
                    {gexp(10.0 / u), gexp(8.0 / u)},
                    {gexp(8.0), gexp(6.0)},
                    p};
}

// Two states, exponential laws, p1 = p2 = p3 = 1/3, a = 0.2, V- = -1.
inline Model1Spec two_state_model1(const RMatrix& P) {
  const double third = 1.0 / 3.0;
  return Model1Spec{ModulationChain(P),
                    {exponential_lst(10.0), exponential_lst(8.0)},
                    {exponential_lst(2.0), exponential_lst(3.0)},
                    third,
                    third,
                    1.0 - 2.0 * third,
                    0.2,
                    NegativeMultiplierLaw({{-1.0, 1.0}})};
}

inline RMatrix random_stochastic(std::size_t n, Rng& rng) {
  RMatrix P(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) P(i, j) = 0.05 + uniform01(rng);
    P.row(i) /= P.row(i).sum();
  }
  return P;
}

inline double draw(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Random stable Model I instance; service rates are kept apart so the
// service poles stay distinct across states.
inline Model1Spec random_model1(std::size_t n, Rng& rng) {
  std::vector<RationalLst> service, inter;
  for (std::size_t k = 0; k < n; ++k) service.push_back(exponential_lst(3.0 + 2.5 * static_cast<double>(k) + draw(rng, 0.0, 2.0)));
  for (std::size_t j = 0; j < n; ++j) {
    const double rate = draw(rng, 0.8, 3.0);
    if (uniform01(rng) < 0.3)
      inter.push_back(erlang_mixture_lst({0.0, 1.0}, 2.0 * rate, 2));
    else
      inter.push_back(exponential_lst(rate));
  }
  const double p3 = draw(rng, 0.15, 0.6);
  const double p1 = (1.0 - p3) * draw(rng, 0.1, 0.9);
  std::vector<NegativeMultiplierLaw::Atom> atoms{{-draw(rng, 0.2, 2.0), 0.5}, {-draw(rng, 0.2, 2.0), 0.5}};
  return Model1Spec{ModulationChain(random_stochastic(n, rng)),
                    std::move(service),
                    std::move(inter),
                    p1,
                    1.0 - p3 - p1,
                    p3,
                    draw(rng, 0.1, 0.8),
                    NegativeMultiplierLaw(std::move(atoms))};
}

inline Model2Spec random_model2(std::size_t n, Rng& rng, double p) {
  std::vector<double> lambda, mu;
  std::vector<GeneralLst> beta, cst;
  for (std::size_t j = 0; j < n; ++j) {
    lambda.push_back(draw(rng, 0.5, 4.0));
    mu.push_back(draw(rng, 0.5, 6.0));
    const double b = draw(rng, 2.0, 12.0);
    if (uniform01(rng) < 0.3)
      beta.push_back(GeneralLst::from_rational(hyperexponential_lst({0.4, 0.6}, {b / 2.0, 2.0 * b})));
    else
      beta.push_back(gexp(b));
    cst.push_back(gexp(draw(rng, 1.0, 8.0)));
  }
  return Model2Spec{ModulationChain(random_stochastic(n, rng)), lambda, mu, beta, cst, p};
}

}  // namespace mmtest
