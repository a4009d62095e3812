#pragma once

// Model I: W' = [V W + S - A']^+ with V = 1 (p1), V = a (p2) or a negative
// atom (p3). Service S depends on the current state, the interarrival time A'
// on the next one, both with rational transforms.
//
// Working in the scaled form keeps every operator free of the poles of
// Phi_A(-s) in Re(s) > 0:
//   T(s) Phi(s) = p2 SF(s) Phi(a s) + v(s),
//   T(s) = diag(D_Aj(-s)) - p1 SF(s),  SF(s)_ji = p_ij N_Aj(-s) Phi_Bi(s),
//   v_j(s) = sum_w c_wj s^w / prod_k D_Bk(s).

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmlindley/polyalg.hpp"
#include "mmlindley/probcore.hpp"
#include "mmlindley/stability.hpp"

namespace mmlindley {

struct Model1Spec {
  ModulationChain chain;
  std::vector<RationalLst> service;       // Phi_B,i
  std::vector<RationalLst> interarrival;  // Phi_A,j
  double p1 = 0.0, p2 = 0.0, p3 = 1.0;
  double a = 0.5;
  NegativeMultiplierLaw v_negative;

  std::size_t size() const noexcept { return chain.size(); }
  int l(std::size_t j) const { return interarrival[j].degree(); }
  int m(std::size_t k) const { return service[k].degree(); }
  int total_m() const {
    int t = 0;
    for (std::size_t k = 0; k < size(); ++k) t += m(k);
    return t;
  }
  int total_l() const {
    int t = 0;
    for (std::size_t j = 0; j < size(); ++j) t += l(j);
    return t;
  }
  int poly_degree(std::size_t j) const { return l(j) + total_m(); }

  void validate() const {
    const std::size_t n = size();
    if (service.size() != n || interarrival.size() != n)
      throw InvalidArgument("model I: one service and one interarrival law per chain state required");
    for (double p : {p1, p2, p3})
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("model I: p1, p2, p3 must lie in [0, 1]");
    if (std::abs(p1 + p2 + p3 - 1.0) > 1e-12) throw InvalidArgument("model I: p1 + p2 + p3 must equal 1");
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("model I: a must lie in (0, 1)");
  }
};

namespace detail {

// Roots of every D_Bk must be simple and distinct across states: each one
// yields N equations of the coefficient system.
inline void check_service_roots(const std::vector<RationalLst>& service) {
  std::vector<cplx> all;
  for (const auto& s : service)
    for (cplx r : s.denominator_roots()) all.push_back(r);
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      if (std::abs(all[a] - all[b]) <= 1e-9 * std::max(1.0, std::abs(all[a]))) {
        std::ostringstream os;
        os << "service transform denominators share the root " << all[a]
           << "; the coefficient system needs simple, state-distinct service poles";
        throw InvalidArgument(os.str());
      }
}

inline double sample_rational(const RationalLst& lst, Rng& rng) {
  if (!lst.mixture()) throw InvalidArgument("rational transform without a phase-type representation cannot be sampled");
  return lst.mixture()->sample(rng);
}

}  // namespace detail

inline StabilityReport check_stability_model1(const Model1Spec& spec) {
  spec.validate();
  StabilityReport rep;
  if (!(spec.p3 > 0.0)) {
    rep.message = "P(V < 0) = 0: p3 must be positive";
    return rep;
  }
  const std::size_t n = spec.size();
  const auto& P = spec.chain.P();
  const auto& pi = spec.chain.pi();

  bool all_exponential = true;
  for (const auto& A : spec.interarrival)
    all_exponential = all_exponential && A.degree() == 1 && A.numerator().degree() == 0;
  if (all_exponential) {
    double pr = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double lam = -spec.interarrival[j].denominator_roots()[0].real();
        pr += pi(i) * P(i, j) * spec.service[i](lam).real();
      }
    rep.closed_form = pr;
  }

  Rng rng(0xC0FFEE);
  std::discrete_distribution<std::size_t> start(pi.data(), pi.data() + n);
  const int draws = 100000;
  int hits = 0;
  for (int k = 0; k < draws; ++k) {
    const std::size_t i = start(rng);
    const std::size_t j = spec.chain.next(i, rng);
    const double y = detail::sample_rational(spec.service[i], rng) - detail::sample_rational(spec.interarrival[j], rng);
    if (y <= 0.0) ++hits;
  }
  rep.probe_frequency = static_cast<double>(hits) / draws;
  rep.stable = hits > 0;
  rep.message = rep.stable ? "P(V < 0) > 0 and P(Y <= 0) > 0" : "probe never observed Y <= 0";
  return rep;
}

/// H(s)_ij = Phi_B,i(s) Phi_A,j(-s).
inline CMatrix build_H1(const Model1Spec& spec, cplx s) {
  const auto n = static_cast<Eigen::Index>(spec.size());
  CMatrix H(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx b = spec.service[i](s);
    for (Eigen::Index j = 0; j < n; ++j) H(i, j) = b * spec.interarrival[j](-s);
  }
  return H;
}

/// Operators of the scaled functional equation, with the coefficient layout.
class Model1Operators {
 public:
  explicit Model1Operators(const Model1Spec& spec) : spec_(spec) {
    const std::size_t n = spec.size();
    prod_db_ = Polynomial::constant(1.0);
    for (const auto& s : spec.service) prod_db_ = prod_db_ * s.denominator();
    offsets_.resize(n + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
      da_reflected_.push_back(spec.interarrival[j].denominator().reflected());
      na_reflected_.push_back(spec.interarrival[j].numerator().reflected());
      offsets_[j + 1] = offsets_[j] + spec.poly_degree(j);
    }
    c0_.resize(static_cast<Eigen::Index>(n));
    const cplx db0 = prod_db_(0.0);
    for (std::size_t j = 0; j < n; ++j)
      c0_(j) = (spec.chain.pi(j) * spec.p3 * spec.interarrival[j].denominator()(0.0) * db0).real();
  }

  const Model1Spec& spec() const noexcept { return spec_; }
  Eigen::Index unknowns() const noexcept { return offsets_.back(); }
  /// Column of c_{w,j} (w >= 1) in the unknown vector.
  Eigen::Index index(std::size_t j, int w) const { return offsets_[j] + w - 1; }
  const RVector& c0() const noexcept { return c0_; }
  const Polynomial& prod_db() const noexcept { return prod_db_; }
  const Polynomial& da_reflected(std::size_t j) const { return da_reflected_[j]; }
  const Polynomial& na_reflected(std::size_t j) const { return na_reflected_[j]; }

  CMatrix SF(cplx s) const {
    const auto n = static_cast<Eigen::Index>(spec_.size());
    CMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx b = spec_.service[i](s);
      for (Eigen::Index j = 0; j < n; ++j) out(j, i) = spec_.chain.P()(i, j) * na_reflected_[j](s) * b;
    }
    return out;
  }

  CMatrix T(cplx s) const {
    CMatrix t = -spec_.p1 * SF(s);
    for (std::size_t j = 0; j < spec_.size(); ++j) t(j, j) += da_reflected_[j](s);
    return t;
  }

  /// v(s) as an affine form in the unknown coefficients.
  AffineVector v_affine(cplx s) const {
    const auto n = static_cast<Eigen::Index>(spec_.size());
    AffineVector v = AffineVector::zero(n, unknowns());
    const cplx inv = 1.0 / db_at(s);
    for (Eigen::Index j = 0; j < n; ++j) {
      v.constant(j) = c0_(j) * inv;
      cplx pw = 1.0;
      for (int w = 1; w <= spec_.poly_degree(j); ++w) {
        pw *= s;
        v.coeff(j, index(j, w)) = pw * inv;
      }
    }
    return v;
  }

  /// v(s) for known coefficients (a constant affine form with no unknowns).
  AffineVector v_value(cplx s, const std::vector<RVector>& c) const {
    const auto n = static_cast<Eigen::Index>(spec_.size());
    AffineVector v = AffineVector::zero(n, 0);
    const cplx inv = 1.0 / db_at(s);
    for (Eigen::Index j = 0; j < n; ++j) v.constant(j) = poly_value(c[j], s) * inv;
    return v;
  }

  /// Sum_k Pi_k T^{-1}(a^k s) v(a^k s), stopped after two consecutive terms below tol.
  template <class VFn>
  AffineVector series(cplx s, double tol, VFn&& v_at, int* terms_used = nullptr) const {
    const auto n = static_cast<Eigen::Index>(spec_.size());
    CMatrix Pi = CMatrix::Identity(n, n);
    AffineVector sum;
    cplx z = s;
    int small = 0;
    double last = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
      const CMatrix Tz = T(z);
      Eigen::PartialPivLU<CMatrix> lu(Tz);
      const double rcond = lu.rcond();
      if (!(rcond > 1e-14)) {
        std::ostringstream os;
        os << "series point " << z << " is (numerically) a zero of det(I - p1 F); use the null-vector form there";
        throw SingularSystemError(os.str(), rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
      }
      const CMatrix M = Pi * lu.inverse();
      AffineVector term = M * v_at(z);
      last = term.max_abs();
      if (k == 0)
        sum = std::move(term);
      else
        sum += term;
      small = last < tol ? small + 1 : 0;
      if (small >= 2) {
        if (terms_used) *terms_used = k + 1;
        return sum;
      }
      Pi = spec_.p2 * (M * SF(z));
      z *= spec_.a;
    }
    throw ConvergenceError("series did not converge within 10000 terms", last);
  }

  static cplx poly_value(const RVector& c, cplx s) {
    cplx acc = 0.0;
    for (Eigen::Index w = c.size() - 1; w >= 0; --w) acc = acc * s + c(w);
    return acc;
  }

 private:
  cplx db_at(cplx s) const {
    const cplx d = prod_db_(s);
    if (std::abs(d) <= 1e-300) throw PoleError("v(s) evaluated at a service pole", s);
    return d;
  }

  const Model1Spec& spec_;
  Polynomial prod_db_;
  std::vector<Polynomial> da_reflected_, na_reflected_;
  std::vector<Eigen::Index> offsets_;
  RVector c0_;
};

inline double default_search_bound(const Model1Spec& spec) {
  double m = 1.0;
  for (const auto& A : spec.interarrival)
    for (cplx r : A.denominator_roots()) m = std::max(m, std::abs(r));
  for (const auto& B : spec.service)
    for (cplx r : B.denominator_roots()) m = std::max(m, std::abs(r));
  return 10.0 * m + 10.0;
}

/// Zeros of det(I - p1 F(s)) in Re(s) > 0, i.e. of det T(s); exactly sum_j l_j of them.
inline ZeroSet find_delta_roots(const Model1Spec& spec, double search_bound = 0.0) {
  spec.validate();
  const int expected = spec.total_l();
  if (expected == 0) return {};
  Model1Operators ops(spec);
  ScalarFunction f = [&ops](cplx s) { return determinant(ops.T(s)); };
  ZeroSet zs = find_zeros_right_halfplane(f, expected, search_bound > 0.0 ? search_bound : default_search_bound(spec));
  for (std::size_t a = 0; a < zs.zeros.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      if (std::abs(zs.zeros[a] - zs.zeros[b]) <= 1e-6)
        throw ZeroCountError("zeros of det(I - p1 F) are not distinct", expected, expected);
  return zs;
}

class Model1Solution {
 public:
  Model1Spec spec;
  std::vector<RVector> c;  // c[j](w), w = 0..l_j + sum_k m_k
  ZeroSet delta_roots;
  std::vector<CVector> left_null_vectors;
  double truncation_tolerance = 1e-9;
  double condition = 1.0;
  double max_imag = 0.0;
  double b0_residual = 0.0;
  std::vector<std::string> warnings;

  explicit Model1Solution(Model1Spec s) : spec(std::move(s)), ops_(std::make_unique<Model1Operators>(spec)) {}
  Model1Solution(const Model1Solution& o) : Model1Solution(o.spec) { copy_fields(o); }
  Model1Solution& operator=(const Model1Solution& o) {
    if (this != &o) {
      spec = o.spec;
      ops_ = std::make_unique<Model1Operators>(spec);
      copy_fields(o);
    }
    return *this;
  }
  Model1Solution(Model1Solution&& o) noexcept : Model1Solution(static_cast<const Model1Solution&>(o)) {}

  const Model1Operators& operators() const { return *ops_; }

  /// Phi_W(s), Re(s) >= 0, by the series; `terms` receives the truncation index.
  CVector phi(cplx s, double tol = 1e-7, int* terms = nullptr) const {
    return ops_->series(s, tol, [this](cplx z) { return ops_->v_value(z, c); }, terms).constant;
  }

  /// Residual of Phi(s) - F(s)[p1 Phi(s) + p2 Phi(as)] - v(s)/D_A(-s), max over states.
  double functional_residual(cplx s, double tol = 1e-11) const {
    const CVector ph = phi(s, tol), pha = phi(spec.a * s, tol);
    CVector r = ops_->T(s) * ph - spec.p2 * ops_->SF(s) * pha - ops_->v_value(s, c).constant;
    for (std::size_t j = 0; j < spec.size(); ++j) r(j) /= ops_->da_reflected(j)(s);
    return r.cwiseAbs().maxCoeff();
  }

 private:
  void copy_fields(const Model1Solution& o) {
    c = o.c;
    delta_roots = o.delta_roots;
    left_null_vectors = o.left_null_vectors;
    truncation_tolerance = o.truncation_tolerance;
    condition = o.condition;
    max_imag = o.max_imag;
    b0_residual = o.b0_residual;
    warnings = o.warnings;
  }

  std::unique_ptr<Model1Operators> ops_;
};

inline CVector evaluate_phi_series(const Model1Solution& sol, cplx s, double tol = 1e-7, int* terms = nullptr) {
  return sol.phi(s, tol, terms);
}

/// Verification grid: Re in {0.1, ..., 5} (5 values) times Im in {-2, ..., 2} (4 values).
inline std::vector<cplx> model1_verification_grid() {
  std::vector<cplx> g;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 4; ++b) g.emplace_back(0.1 + a * (4.9 / 4.0), -2.0 + b * (4.0 / 3.0));
  return g;
}

struct Model1Options {
  double search_bound = 0.0;
  double assembly_tol = 1e-9;
  double residual_threshold = 1e-6;
};

inline Model1Solution assemble_and_solve_coefficients(const Model1Spec& spec, const Model1Options& opt = {}) {
  spec.validate();
  if (!(spec.p1 + spec.p2 < 1.0)) throw InvalidArgument("model I: p1 + p2 must be below 1");
  detail::check_service_roots(spec.service);
  Model1Solution sol(spec);
  sol.truncation_tolerance = opt.assembly_tol;
  const Model1Operators& ops = sol.operators();
  const std::size_t n = spec.size();
  const Eigen::Index nu = ops.unknowns();
  const auto& P = spec.chain.P();
  auto v_aff = [&ops](cplx z) { return ops.v_affine(z); };

  CMatrix A(nu, nu);
  CVector b(nu);
  Eigen::Index r = 0;
  auto push = [&](const AffineScalar& f) {
    const double scale = std::max(f.row.cwiseAbs().maxCoeff(), 1e-300);
    A.row(r) = f.row / scale;
    b(r) = -f.constant / scale;
    ++r;
  };

  sol.delta_roots = find_delta_roots(spec, opt.search_bound);
  for (cplx d : sol.delta_roots.zeros) {
    const CVector zeta = null_vector_left(ops.T(d));
    sol.left_null_vectors.push_back(zeta);
    const AffineVector rhs = spec.p2 * (ops.SF(d) * ops.series(spec.a * d, opt.assembly_tol, v_aff)) + ops.v_affine(d);
    push(dot(zeta, rhs));
  }

  for (std::size_t k = 0; k < n; ++k) {
    for (cplx t : spec.service[k].denominator_roots()) {
      // Weighted sum of Phi_k at t y over the negative atoms.
      AffineVector mix = AffineVector::zero(static_cast<Eigen::Index>(n), nu);
      for (const auto& atom : spec.v_negative.atoms()) mix += atom.weight * ops.series(t * atom.value, opt.assembly_tol, v_aff);
      cplx others = 1.0;
      for (std::size_t v = 0; v < n; ++v)
        if (v != k) others *= spec.service[v].denominator()(t);
      const cplx common = spec.p3 * spec.service[k].numerator()(t) * others;
      for (std::size_t j = 0; j < n; ++j) {
        AffineScalar f;
        const cplx g = common * P(k, j) * ops.na_reflected(j)(t);
        f.constant = g * mix.constant(k) - ops.c0()(j);
        f.row = g * mix.coeff.row(k);
        cplx pw = 1.0;
        for (int w = 1; w <= spec.poly_degree(j); ++w) {
          pw *= t;
          f.row(ops.index(j, w)) -= pw;
        }
        push(f);
      }
    }
  }
  if (r != nu) throw Error("model I: equation count differs from the number of unknowns");

  const DenseSolution ds = solve_dense(A, b);
  sol.condition = ds.condition;
  if (ds.condition > 1e12) {
    std::ostringstream os;
    os << "coefficient system ill-conditioned (condition estimate " << ds.condition << ")";
    throw SingularSystemError(os.str(), ds.condition);
  }
  sol.c.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    RVector cj(spec.poly_degree(j) + 1);
    cj(0) = ops.c0()(j);
    for (int w = 1; w <= spec.poly_degree(j); ++w) {
      const cplx x = ds.x(ops.index(j, w));
      cj(w) = x.real();
      sol.max_imag = std::max(sol.max_imag, std::abs(x.imag()) / std::max(1.0, std::abs(x)));
    }
    sol.c[j] = std::move(cj);
  }
  if (sol.max_imag > 1e-8) {
    std::ostringstream os;
    os << "coefficients carry relative imaginary parts up to " << sol.max_imag;
    sol.warnings.push_back(os.str());
  }

  // Residual check on the verification grid, nudging points off delta roots
  // and off the poles of Phi_A(-s).
  std::vector<cplx> avoid = sol.delta_roots.zeros;
  for (const auto& A2 : spec.interarrival)
    for (cplx root : A2.denominator_roots()) avoid.push_back(-root);
  for (cplx s : model1_verification_grid()) {
    for (cplx z : avoid)
      if (std::abs(s - z) < 1e-6) s += cplx(1e-4, 1e-4);
    sol.b0_residual = std::max(sol.b0_residual, sol.functional_residual(s));
  }
  if (!(sol.b0_residual < opt.residual_threshold)) {
    std::ostringstream os;
    os << "functional-equation residual " << sol.b0_residual << " exceeds " << opt.residual_threshold
       << " (likely root miscount)";
    throw Error(os.str());
  }
  return sol;
}

inline Model1Solution solve_model1(const Model1Spec& spec, const Model1Options& opt = {}) {
  const StabilityReport st = check_stability_model1(spec);
  if (!st.stable) throw UnstableError(st.message);
  return assemble_and_solve_coefficients(spec, opt);
}

struct MeanWorkload {
  RVector mean;       // E[W 1{Z = j}]
  RVector numerical;  // central difference of the evaluator along the imaginary axis
  double relative_gap = 0.0;
};

/// Mean vector from differentiating the functional equation at s = 0.
inline MeanWorkload mean_workload(const Model1Solution& sol) {
  const Model1Spec& sp = sol.spec;
  const auto n = static_cast<Eigen::Index>(sp.size());
  const auto& P = sp.chain.P();
  const auto& pi = sp.chain.pi();
  const Polynomial& db = sol.operators().prod_db();

  RMatrix Fp(n, n);  // F'(0)_ji = p_ij (E A_j - E S_i)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) Fp(j, i) = P(i, j) * (sp.interarrival[j].mean() - sp.service[i].mean());
  RVector vp(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Polynomial den = sol.operators().da_reflected(j) * db;
    const double d0 = den(0.0).real(), d1 = den.derivative()(0.0).real();
    const RVector& c = sol.c[j];
    const double c1 = c.size() > 1 ? c(1) : 0.0;
    vp(j) = (c1 * d0 - c(0) * d1) / (d0 * d0);
  }
  const RMatrix K = (sp.p1 + sp.a * sp.p2) * P.transpose() - RMatrix::Identity(n, n);
  Eigen::FullPivLU<RMatrix> lu(K);
  if (!lu.isInvertible()) throw SingularSystemError("mean workload: (p1 + a p2) P^T - I singular", 0.0);

  MeanWorkload out;
  out.mean = lu.solve((sp.p1 + sp.p2) * Fp * pi + vp);
  const double h = 1e-5;
  const CVector d = (sol.phi(cplx(0.0, h), 1e-13) - sol.phi(cplx(0.0, -h), 1e-13)) / cplx(0.0, 2.0 * h);
  out.numerical = -d.real();
  const double scale = std::max(out.mean.cwiseAbs().maxCoeff(), 1e-12);
  out.relative_gap = (out.mean - out.numerical).cwiseAbs().maxCoeff() / scale;
  return out;
}

// ---------------------------------------------------------------------------
// Special case p3 = 1 with general interarrival law
// ---------------------------------------------------------------------------

struct Model1SpecialSpec {
  ModulationChain chain;
  std::vector<RationalLst> service;
  std::vector<GeneralLst> interarrival;
  NegativeMultiplierLaw v_negative;

  std::size_t size() const noexcept { return chain.size(); }
  int total_m() const {
    int t = 0;
    for (const auto& s : service) t += s.degree();
    return t;
  }
  void validate() const {
    if (service.size() != size() || interarrival.size() != size())
      throw InvalidArgument("model I special case: one service and one interarrival law per chain state required");
  }
};

/// Phi_j(s) = sum_w c_wj s^w / prod_k D_Bk(s).
class Model1SpecialSolution {
 public:
  Model1SpecialSpec spec;
  std::vector<RVector> c;
  Polynomial prod_db;
  double condition = 1.0;
  double max_imag = 0.0;
  std::optional<double> probe_frequency;
  std::vector<std::string> warnings;

  explicit Model1SpecialSolution(Model1SpecialSpec s) : spec(std::move(s)) {}

  CVector phi(cplx s) const {
    const cplx d = prod_db(s);
    if (std::abs(d) <= 1e-300) throw PoleError("special-case transform evaluated at a service pole", s);
    CVector out(static_cast<Eigen::Index>(spec.size()));
    for (std::size_t j = 0; j < spec.size(); ++j) out(j) = Model1Operators::poly_value(c[j], s) / d;
    return out;
  }

  RVector mean() const {
    const double d0 = prod_db(0.0).real(), d1 = prod_db.derivative()(0.0).real();
    RVector m(static_cast<Eigen::Index>(spec.size()));
    for (std::size_t j = 0; j < spec.size(); ++j) {
      const double c1 = c[j].size() > 1 ? c[j](1) : 0.0;
      m(j) = -(c1 * d0 - c[j](0) * d1) / (d0 * d0);
    }
    return m;
  }
};

inline Model1SpecialSolution solve_model1_special(const Model1SpecialSpec& spec) {
  spec.validate();
  detail::check_service_roots(spec.service);
  const std::size_t n = spec.size();
  const auto& P = spec.chain.P();
  const auto& pi = spec.chain.pi();

  Model1SpecialSolution sol(spec);
  // Need some i, l with P(S < A', Z' = l | Z = i) > 0.
  {
    Rng rng(0xC0FFEE);
    std::discrete_distribution<std::size_t> start(pi.data(), pi.data() + n);
    int hits = 0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      const std::size_t i = start(rng);
      const std::size_t j = spec.chain.next(i, rng);
      if (detail::sample_rational(spec.service[i], rng) < spec.interarrival[j].sample(rng)) ++hits;
    }
    sol.probe_frequency = static_cast<double>(hits) / draws;
    if (hits == 0) throw UnstableError("probe never observed S < A");
  }

  sol.prod_db = Polynomial::constant(1.0);
  for (const auto& s : spec.service) sol.prod_db = sol.prod_db * s.denominator();
  const int deg = spec.total_m();
  const Eigen::Index nu = static_cast<Eigen::Index>(n) * deg;
  auto index = [deg](std::size_t j, int w) { return static_cast<Eigen::Index>(j) * deg + w - 1; };
  RVector c0(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) c0(j) = pi(j) * sol.prod_db(0.0).real();

  CMatrix A = CMatrix::Zero(nu, nu);
  CVector b(nu);
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < n; ++k) {
    for (cplx t : spec.service[k].denominator_roots()) {
      // sum_a w_a poly_k(t y_a) / prod D_B(t y_a), affine in the state-k coefficients
      cplx mix_const = 0.0;
      Eigen::RowVectorXcd mix_row = Eigen::RowVectorXcd::Zero(nu);
      for (const auto& atom : spec.v_negative.atoms()) {
        const cplx z = t * atom.value;
        const cplx inv = atom.weight / sol.prod_db(z);
        mix_const += c0(k) * inv;
        cplx pw = 1.0;
        for (int w = 1; w <= deg; ++w) {
          pw *= z;
          mix_row(index(k, w)) += pw * inv;
        }
      }
      cplx others = 1.0;
      for (std::size_t v = 0; v < n; ++v)
        if (v != k) others *= spec.service[v].denominator()(t);
      const cplx common = spec.service[k].numerator()(t) * others;
      for (std::size_t j = 0; j < n; ++j) {
        const cplx g = spec.interarrival[j](-t) * P(k, j) * common;
        Eigen::RowVectorXcd row = g * mix_row;
        cplx constant = g * mix_const - c0(j);
        cplx pw = 1.0;
        for (int w = 1; w <= deg; ++w) {
          pw *= t;
          row(index(j, w)) -= pw;
        }
        const double scale = std::max(row.cwiseAbs().maxCoeff(), 1e-300);
        A.row(r) = row / scale;
        b(r) = -constant / scale;
        ++r;
      }
    }
  }
  const DenseSolution ds = solve_dense(A, b);
  sol.condition = ds.condition;
  sol.c.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    RVector cj(deg + 1);
    cj(0) = c0(j);
    for (int w = 1; w <= deg; ++w) {
      cj(w) = ds.x(index(j, w)).real();
      sol.max_imag = std::max(sol.max_imag, std::abs(ds.x(index(j, w)).imag()));
    }
    sol.c[j] = std::move(cj);
  }
  return sol;
}

}  // namespace mmlindley
