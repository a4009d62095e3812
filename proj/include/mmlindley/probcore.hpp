#pragma once

// Probability primitives: the modulating Markov chain, Laplace-Stieltjes
// transforms (rational and general) and the law of the negative multiplier.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mmlindley/errors.hpp"

namespace mmlindley {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Uniform draw on [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double exponential_draw(Rng& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

// ---------------------------------------------------------------------------
// Polynomial
// ---------------------------------------------------------------------------

/// Complex polynomial in the monomial basis, coefficients stored from the
/// constant term upwards. Degree is capped at kMaxDegree.
class Polynomial {
 public:
  static constexpr int kMaxDegree = 64;

  Polynomial() : c_{cplx{0.0}} {}
  explicit Polynomial(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { normalize(); }
  Polynomial(std::initializer_list<cplx> coeffs) : c_(coeffs) { normalize(); }

  static Polynomial constant(cplx v) { return Polynomial({v}); }

  /// leading * prod_k (s - roots[k])
  static Polynomial from_roots(std::span<const cplx> roots, cplx leading = 1.0) {
    Polynomial p({leading});
    for (cplx r : roots) p = p * Polynomial({-r, 1.0});
    return p;
  }

  int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
  cplx operator[](std::size_t k) const noexcept { return k < c_.size() ? c_[k] : cplx{0.0}; }
  const std::vector<cplx>& coefficients() const noexcept { return c_; }
  cplx leading() const noexcept { return c_.back(); }
  bool is_zero() const noexcept { return c_.size() == 1 && c_[0] == cplx{0.0}; }

  cplx operator()(cplx s) const noexcept {
    cplx acc{0.0};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial();
    std::vector<cplx> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial(std::move(d));
  }

  /// p(-s)
  Polynomial reflected() const {
    std::vector<cplx> r(c_);
    for (std::size_t k = 1; k < r.size(); k += 2) r[k] = -r[k];
    return Polynomial(std::move(r));
  }

  double max_abs_coefficient() const noexcept {
    double m = 0.0;
    for (cplx v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<cplx> r(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = a[k] + b[k];
    return Polynomial(std::move(r));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    std::vector<cplx> r(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = a[k] - b[k];
    return Polynomial(std::move(r));
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.degree() + b.degree() > kMaxDegree) {
      throw InvalidArgument("polynomial product exceeds the maximum supported degree " +
                            std::to_string(kMaxDegree));
    }
    std::vector<cplx> r(a.c_.size() + b.c_.size() - 1, cplx{0.0});
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(r));
  }
  friend Polynomial operator*(cplx k, const Polynomial& a) {
    std::vector<cplx> r(a.c_);
    for (auto& v : r) v *= k;
    return Polynomial(std::move(r));
  }

  Polynomial pow(int n) const {
    Polynomial r({1.0});
    for (int i = 0; i < n; ++i) r = r * *this;
    return r;
  }

 private:
  void normalize() {
    if (c_.empty()) c_.push_back(0.0);
    while (c_.size() > 1 && c_.back() == cplx{0.0}) c_.pop_back();
    if (degree() > kMaxDegree) {
      throw InvalidArgument("polynomial degree " + std::to_string(degree()) + " exceeds the maximum " +
                            std::to_string(kMaxDegree));
    }
  }

  std::vector<cplx> c_;
};

// ---------------------------------------------------------------------------
// Phase mixtures (exact samplers for the rational transforms we construct)
// ---------------------------------------------------------------------------

/// weight * Erlang(phases, rate); phases == 0 is an atom at zero.
struct ErlangTerm {
  double weight;
  int phases;
  double rate;
};

/// Finite mixture of Erlang laws. Covers exponential, Erlang, hyperexponential,
/// mixed-Erlang and the point mass at zero.
class PhaseMixture {
 public:
  explicit PhaseMixture(std::vector<ErlangTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw InvalidArgument("phase mixture: no terms");
    double total = 0.0;
    for (const auto& t : terms_) {
      if (!(t.weight >= 0.0)) throw InvalidArgument("phase mixture: negative weight");
      if (t.phases < 0) throw InvalidArgument("phase mixture: negative phase count");
      if (t.phases > 0 && !(t.rate > 0.0)) throw InvalidArgument("phase mixture: nonpositive rate");
      total += t.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("phase mixture: weights do not sum to 1");
  }

  const std::vector<ErlangTerm>& terms() const noexcept { return terms_; }

  cplx lst(cplx s) const {
    cplx acc{0.0};
    for (const auto& t : terms_) {
      if (t.weight == 0.0) continue;
      acc += t.weight * (t.phases == 0 ? cplx{1.0} : std::pow(t.rate / (t.rate + s), t.phases));
    }
    return acc;
  }

  /// E[X^r]
  double moment(int r) const {
    if (r == 0) return 1.0;
    double acc = 0.0;
    for (const auto& t : terms_) {
      if (t.phases == 0 || t.weight == 0.0) continue;
      double m = 1.0;
      for (int k = 0; k < r; ++k) m *= (t.phases + k) / t.rate;
      acc += t.weight * m;
    }
    return acc;
  }

  double sample(Rng& rng) const {
    double u = uniform01(rng);
    const ErlangTerm* chosen = &terms_.back();
    for (const auto& t : terms_) {
      if (u < t.weight) {
        chosen = &t;
        break;
      }
      u -= t.weight;
    }
    double x = 0.0;
    for (int k = 0; k < chosen->phases; ++k) x += exponential_draw(rng, chosen->rate);
    return x;
  }

  /// Smallest rate among weighted phase terms (infinity for a pure atom).
  double min_rate() const noexcept {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& t : terms_)
      if (t.phases > 0 && t.weight > 0.0) r = std::min(r, t.rate);
    return r;
  }

  /// Same mixture with every phase duration multiplied by `factor`.
  PhaseMixture scaled(double factor) const {
    std::vector<ErlangTerm> t(terms_);
    for (auto& term : t) term.rate /= factor;
    return PhaseMixture(std::move(t));
  }

 private:
  std::vector<ErlangTerm> terms_;
};

// ---------------------------------------------------------------------------
// Rational LST
// ---------------------------------------------------------------------------

/// LST of a nonnegative random variable written as N(s)/D(s) with the roots of
/// D stored explicitly (repeated roots appear repeatedly).
class RationalLst {
 public:
  RationalLst(Polynomial numerator, Polynomial denominator, std::vector<cplx> denominator_roots,
              std::optional<PhaseMixture> source = std::nullopt)
      : num_(std::move(numerator)),
        den_(std::move(denominator)),
        roots_(std::move(denominator_roots)),
        source_(std::move(source)) {
    if (num_.degree() > den_.degree()) throw InvalidArgument("rational LST: deg N exceeds deg D");
    const cplx d0 = den_(0.0);
    if (d0 == cplx{0.0}) throw InvalidArgument("rational LST: D(0) = 0");
    if (std::abs(num_(0.0) / d0 - 1.0) > 1e-12) throw InvalidArgument("rational LST: N(0)/D(0) != 1");
    if (static_cast<int>(roots_.size()) != den_.degree())
      throw InvalidArgument("rational LST: root count differs from deg D");
    for (cplx r : roots_) {
      if (!(r.real() < 0.0)) throw InvalidArgument("rational LST: denominator root with Re >= 0");
    }
    const Polynomial rebuilt = Polynomial::from_roots(roots_, den_.leading());
    const double scale = std::max(1.0, den_.max_abs_coefficient());
    for (int k = 0; k <= den_.degree(); ++k) {
      if (std::abs(rebuilt[k] - den_[k]) > 1e-10 * scale)
        throw InvalidArgument("rational LST: denominator roots do not reproduce D");
    }
  }

  const Polynomial& numerator() const noexcept { return num_; }
  const Polynomial& denominator() const noexcept { return den_; }
  const std::vector<cplx>& denominator_roots() const noexcept { return roots_; }
  int degree() const noexcept { return den_.degree(); }
  const std::optional<PhaseMixture>& mixture() const noexcept { return source_; }

  cplx operator()(cplx s) const {
    for (cplx r : roots_) {
      if (std::abs(s - r) <= 1e-12 * std::max(1.0, std::abs(r))) {
        std::ostringstream os;
        os << "rational LST evaluated at its pole " << r;
        throw PoleError(os.str(), r);
      }
    }
    const cplx d = den_(s);
    if (d == cplx{0.0}) throw PoleError("rational LST: denominator vanishes", s);
    return num_(s) / d;
  }

  /// Taylor coefficients of N/D at 0 up to order `order`.
  std::vector<cplx> taylor(int order) const {
    std::vector<cplx> a(order + 1);
    const cplx d0 = den_[0];
    for (int r = 0; r <= order; ++r) {
      cplx acc = num_[r];
      for (int k = 1; k <= r; ++k) acc -= den_[k] * a[r - k];
      a[r] = acc / d0;
    }
    return a;
  }

  /// E[X^r] for r = 0..r_max.
  std::vector<double> moments(int r_max) const {
    const auto a = taylor(r_max);
    std::vector<double> m(r_max + 1);
    double fact = 1.0;
    for (int r = 0; r <= r_max; ++r) {
      if (r > 0) fact *= r;
      m[r] = (r % 2 == 0 ? 1.0 : -1.0) * fact * a[r].real();
    }
    return m;
  }

  double mean() const { return moments(1)[1]; }

  /// Smallest |Re| over the poles (the transform is analytic for Re(s) > -zeta).
  double zeta() const noexcept {
    double z = std::numeric_limits<double>::infinity();
    for (cplx r : roots_) z = std::min(z, -r.real());
    return z;
  }

 private:
  Polynomial num_;
  Polynomial den_;
  std::vector<cplx> roots_;
  std::optional<PhaseMixture> source_;
};

/// Rational form of a phase mixture. Every distinct rate r contributes the
/// factor (r + s)^K with K the largest phase count at that rate (at least
/// `min_order` when the mixture has a single rate).
inline RationalLst to_rational(const PhaseMixture& mix, int min_order = 0) {
  std::map<double, int> order;
  for (const auto& t : mix.terms()) {
    if (t.phases == 0) continue;
    if (t.weight == 0.0 && min_order == 0) continue;
    order[t.rate] = std::max(order[t.rate], t.phases);
  }
  if (order.size() == 1 && min_order > 0) order.begin()->second = std::max(order.begin()->second, min_order);

  auto factor = [](double rate, int k) { return Polynomial({rate, 1.0}).pow(k); };
  Polynomial den({1.0});
  std::vector<cplx> roots;
  for (const auto& [rate, k] : order) {
    den = den * factor(rate, k);
    for (int i = 0; i < k; ++i) roots.emplace_back(-rate, 0.0);
  }
  Polynomial num;
  for (const auto& t : mix.terms()) {
    if (t.weight == 0.0) continue;
    if (t.phases == 0) {
      num = num + t.weight * den;
      continue;
    }
    Polynomial term({t.weight * std::pow(t.rate, t.phases)});
    for (const auto& [rate, k] : order) term = term * factor(rate, rate == t.rate ? k - t.phases : k);
    num = num + term;
  }
  return RationalLst(num, den, roots, mix);
}

/// lambda / (lambda + s)
inline RationalLst exponential_lst(double rate) {
  if (!(rate > 0.0)) throw InvalidArgument("exponential_lst: rate must be positive");
  return to_rational(PhaseMixture({{1.0, 1, rate}}));
}

/// sum_k weights[k-1] * (rate / (rate + s))^k with denominator degree max_phases.
inline RationalLst erlang_mixture_lst(const std::vector<double>& weights, double rate, int max_phases) {
  if (weights.empty()) throw InvalidArgument("erlang_mixture_lst: empty weights");
  if (!(rate > 0.0)) throw InvalidArgument("erlang_mixture_lst: rate must be positive");
  if (max_phases < static_cast<int>(weights.size()))
    throw InvalidArgument("erlang_mixture_lst: max_phases smaller than the number of weights");
  std::vector<ErlangTerm> terms;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] < 0.0) throw InvalidArgument("erlang_mixture_lst: negative weight");
    terms.push_back({weights[k], static_cast<int>(k) + 1, rate});
  }
  return to_rational(PhaseMixture(std::move(terms)), max_phases);
}

inline RationalLst hyperexponential_lst(const std::vector<double>& weights, const std::vector<double>& rates) {
  if (weights.empty() || weights.size() != rates.size())
    throw InvalidArgument("hyperexponential_lst: weights and rates must be nonempty and of equal length");
  std::vector<ErlangTerm> terms;
  for (std::size_t k = 0; k < weights.size(); ++k) terms.push_back({weights[k], 1, rates[k]});
  return to_rational(PhaseMixture(std::move(terms)));
}

/// Transform of the point mass at zero (the constant 1).
inline RationalLst point_mass_zero_lst() { return to_rational(PhaseMixture({{1.0, 0, 1.0}})); }

// ---------------------------------------------------------------------------
// General LST
// ---------------------------------------------------------------------------

/// An evaluable transform with declared moments, analytic for Re(s) > -zeta.
class GeneralLst {
 public:
  using Function = std::function<cplx(cplx)>;
  using Sampler = std::function<double(Rng&)>;

  GeneralLst(Function f, std::vector<double> moments, double zeta, Sampler sampler = {})
      : f_(std::move(f)), moments_(std::move(moments)), zeta_(zeta), sampler_(std::move(sampler)) {
    if (!f_) throw InvalidArgument("general LST: empty function");
    if (!(zeta_ >= 0.0)) throw InvalidArgument("general LST: zeta must be nonnegative");
    if (moments_.empty() || std::abs(moments_[0] - 1.0) > 1e-12)
      throw InvalidArgument("general LST: moment list must start with 1");
    if (std::abs(f_(0.0) - 1.0) > 1e-12) throw InvalidArgument("general LST: value at 0 differs from 1");
    check_declared_moments();
  }

  cplx operator()(cplx s) const {
    if (std::isfinite(zeta_) && !(s.real() > -zeta_)) {
      std::ostringstream os;
      os << "general LST evaluated at " << s << " outside its region Re(s) > " << -zeta_;
      throw PoleError(os.str(), cplx(-zeta_, 0.0));
    }
    return f_(s);
  }

  int max_moment() const noexcept { return static_cast<int>(moments_.size()) - 1; }
  double moment(int r) const {
    if (r < 0 || r > max_moment())
      throw InvalidArgument("general LST: moment of order " + std::to_string(r) + " not declared");
    return moments_[r];
  }
  const std::vector<double>& moments() const noexcept { return moments_; }
  double zeta() const noexcept { return zeta_; }
  bool has_sampler() const noexcept { return static_cast<bool>(sampler_); }
  double sample(Rng& rng) const {
    if (!sampler_) throw InvalidArgument("general LST has no sampler");
    return sampler_(rng);
  }

  static GeneralLst from_mixture(const PhaseMixture& mix, int r_max = 12) {
    std::vector<double> m(r_max + 1);
    for (int r = 0; r <= r_max; ++r) m[r] = mix.moment(r);
    return GeneralLst([mix](cplx s) { return mix.lst(s); }, std::move(m), mix.min_rate(),
                      [mix](Rng& rng) { return mix.sample(rng); });
  }

  static GeneralLst from_rational(const RationalLst& lst, int r_max = 12) {
    if (lst.mixture()) return from_mixture(*lst.mixture(), r_max);
    return GeneralLst([lst](cplx s) { return lst(s); }, lst.moments(r_max), lst.zeta());
  }

  /// Point mass at `value` >= 0.
  static GeneralLst deterministic(double value, int r_max = 12) {
    if (!(value >= 0.0)) throw InvalidArgument("deterministic LST: negative value");
    std::vector<double> m(r_max + 1);
    for (int r = 0; r <= r_max; ++r) m[r] = std::pow(value, r);
    return GeneralLst([value](cplx s) { return std::exp(-s * value); }, std::move(m),
                      std::numeric_limits<double>::infinity(), [value](Rng&) { return value; });
  }

 private:
  // Central differences along the imaginary axis, which lies inside the region for any zeta >= 0.
  void check_declared_moments() const {
    const double scale = moments_.size() > 1 ? std::max(1.0, moments_[1]) : 1.0;
    const double h = 1e-4 / scale;
    const cplx fp = f_(cplx(0.0, h));
    const cplx fm = f_(cplx(0.0, -h));
    if (moments_.size() > 1) {
      const double d1 = ((fp - fm) / cplx(0.0, 2.0 * h)).real();
      if (std::abs(-d1 - moments_[1]) > 1e-6 * std::max(1.0, moments_[1]))
        throw InvalidArgument("general LST: declared first moment disagrees with the transform");
    }
    if (moments_.size() > 2) {
      const double d2 = -((fp - 2.0 * f_(0.0) + fm) / (h * h)).real();
      if (std::abs(d2 - moments_[2]) > 1e-6 * std::max(1.0, moments_[2]))
        throw InvalidArgument("general LST: declared second moment disagrees with the transform");
    }
  }

  Function f_;
  std::vector<double> moments_;
  double zeta_;
  Sampler sampler_;
};

inline cplx lst_eval(const RationalLst& lst, cplx s) { return lst(s); }
inline cplx lst_eval(const GeneralLst& lst, cplx s) { return lst(s); }

// ---------------------------------------------------------------------------
// Negative multiplier
// ---------------------------------------------------------------------------

/// Law of V given V < 0, restricted to finitely many atoms.
class NegativeMultiplierLaw {
 public:
  struct Atom {
    double value;
    double weight;
  };

  NegativeMultiplierLaw() : NegativeMultiplierLaw(std::vector<Atom>{{-1.0, 1.0}}) {}
  explicit NegativeMultiplierLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw InvalidArgument("negative multiplier law: no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (!(a.value < 0.0)) throw InvalidArgument("negative multiplier law: atom value must be negative");
      if (!(a.weight > 0.0 && a.weight <= 1.0))
        throw InvalidArgument("negative multiplier law: atom weight must lie in (0, 1]");
      total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("negative multiplier law: weights do not sum to 1");
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }

  double sample(Rng& rng) const {
    double u = uniform01(rng);
    for (const auto& a : atoms_) {
      if (u < a.weight) return a.value;
      u -= a.weight;
    }
    return atoms_.back().value;
  }

 private:
  std::vector<Atom> atoms_;
};

// ---------------------------------------------------------------------------
// Modulating chain
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<bool> reachable_from(const RMatrix& P, std::size_t start, bool forward) {
  const auto n = static_cast<std::size_t>(P.rows());
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n; ++j) {
      const double w = forward ? P(i, j) : P(j, i);
      if (w > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

inline void check_row_stochastic(const RMatrix& P) {
  if (P.rows() == 0 || P.rows() != P.cols()) throw InvalidArgument("transition matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (!(P(i, j) >= 0.0 && P(i, j) <= 1.0))
        throw InvalidArgument("transition matrix entry (" + std::to_string(i) + "," + std::to_string(j) +
                              ") outside [0,1]");
      sum += P(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("transition matrix row " + std::to_string(i) +
                                                           " does not sum to 1");
  }
}

}  // namespace detail

/// Stationary distribution of an irreducible row-stochastic matrix.
inline RVector stationary_distribution(const RMatrix& P) {
  detail::check_row_stochastic(P);
  const auto n = static_cast<std::size_t>(P.rows());
  const auto fwd = detail::reachable_from(P, 0, true);
  const auto bwd = detail::reachable_from(P, 0, false);
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < n; ++i)
    if (!fwd[i] || !bwd[i]) bad.push_back(i);
  if (!bad.empty()) {
    std::ostringstream os;
    os << "reducible chain: states {";
    for (std::size_t k = 0; k < bad.size(); ++k) os << (k ? "," : "") << bad[k];
    os << "} do not communicate with state 0";
    throw ReducibleChainError(os.str(), bad);
  }
  // pi (P - I) = 0 with the last equation replaced by normalization.
  RMatrix A = P.transpose() - RMatrix::Identity(P.rows(), P.cols());
  A.row(A.rows() - 1).setOnes();
  RVector b = RVector::Zero(P.rows());
  b(b.size() - 1) = 1.0;
  RVector pi = A.fullPivLu().solve(b);
  // One refinement step keeps the fixed-point residual at roundoff level.
  RVector r = b - A * pi;
  pi += A.fullPivLu().solve(r);
  return pi;
}

class ModulationChain {
 public:
  explicit ModulationChain(RMatrix P) : P_(std::move(P)), pi_(stationary_distribution(P_)) {
    if ((pi_.transpose() * P_ - pi_.transpose()).cwiseAbs().maxCoeff() > 1e-10 || std::abs(pi_.sum() - 1.0) > 1e-10)
      throw InvalidArgument("stationary distribution solve did not converge");
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(P_.rows()); }
  const RMatrix& P() const noexcept { return P_; }
  const RVector& pi() const noexcept { return pi_; }
  double p(std::size_t i, std::size_t j) const { return P_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  double pi(std::size_t i) const { return pi_(static_cast<Eigen::Index>(i)); }

  /// Next state drawn from row `from`.
  std::size_t next(std::size_t from, Rng& rng) const {
    double u = uniform01(rng);
    const auto n = size();
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double w = p(from, j);
      if (u < w) return j;
      u -= w;
    }
    // Trailing zero-probability states are never returned.
    for (std::size_t j = n; j-- > 0;)
      if (p(from, j) > 0.0) return j;
    return n - 1;
  }

 private:
  RMatrix P_;
  RVector pi_;
};

}  // namespace mmlindley
