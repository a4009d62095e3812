#pragma once

// Model II: V in {+1, -1}. With V = +1 the increment is S - A (A exponential
// with rate lambda_j), with V = -1 it is D - C (D exponential with rate mu_j).
// The stationary transform row vector solves Phi^T(s) G(s) = v(s) with
// G(s) = p B*(s) P Lambda + s I - Lambda; v(s) depends on 2N^2 unknown
// transform values Phi_i(lambda_j), Phi_i(mu_j).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmlindley/polyalg.hpp"
#include "mmlindley/probcore.hpp"
#include "mmlindley/stability.hpp"

namespace mmlindley {

struct Model2Spec {
  ModulationChain chain;
  std::vector<double> lambda;   // A | Z = j ~ exp(lambda_j)
  std::vector<double> mu;       // D | Z = j ~ exp(mu_j)
  std::vector<GeneralLst> beta;    // S | Z = j
  std::vector<GeneralLst> c_star;  // C | Z = j
  double p = 0.5;                  // P(V = 1)

  std::size_t size() const noexcept { return chain.size(); }
  double q() const noexcept { return 1.0 - p; }

  void validate() const {
    const std::size_t n = size();
    if (lambda.size() != n || mu.size() != n || beta.size() != n || c_star.size() != n)
      throw InvalidArgument("model II: per-state parameter lists must have one entry per chain state");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(lambda[j] > 0.0)) throw InvalidArgument("model II: lambda must be positive");
      if (!(mu[j] > 0.0)) throw InvalidArgument("model II: mu must be positive");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("model II: p must lie in [0, 1]");
  }
};

enum class Model2Path { general, map_g1, alternating };

inline const char* to_string(Model2Path path) {
  switch (path) {
    case Model2Path::general: return "general";
    case Model2Path::map_g1: return "map_g1";
    case Model2Path::alternating: return "alternating";
  }
  return "?";
}

inline StabilityReport check_stability_model2(const Model2Spec& spec) {
  spec.validate();
  const auto& pi = spec.chain.pi();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    num += pi(i) * (spec.p * spec.beta[i].moment(1) + spec.q() / spec.mu[i]);
    den += pi(i) * (spec.p / spec.lambda[i] + spec.q() * spec.c_star[i].moment(1));
  }
  StabilityReport rep;
  rep.rho = num / den;
  if (spec.q() > 0.0) {
    rep.stable = true;
    rep.message = "P(V = -1) > 0: proper limit for every load";
  } else {
    rep.stable = rep.rho < 1.0;
    rep.message = rep.stable ? "p = 1 and rho < 1" : "p = 1 requires rho < 1";
  }
  return rep;
}

/// G(s) = p diag(beta*_i(s)) P Lambda + s I - Lambda
inline CMatrix build_G(const Model2Spec& spec, cplx s) {
  const auto n = static_cast<Eigen::Index>(spec.size());
  CMatrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx b = spec.p == 0.0 ? cplx{0.0} : spec.beta[i](s);
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) = spec.p * b * spec.chain.P()(i, j) * spec.lambda[j];
    G(i, i) += s - spec.lambda[i];
  }
  return G;
}

inline double default_search_bound(const Model2Spec& spec) {
  double m = 0.0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    m = std::max({m, spec.lambda[j], spec.mu[j]});
    if (std::isfinite(spec.beta[j].zeta())) m = std::max(m, spec.beta[j].zeta());
  }
  return 10.0 * m + 10.0;
}

/// Copy of `spec` with coincident rates pulled apart by a relative 1e-7.
inline Model2Spec separate_coincident_rates(Model2Spec spec, std::vector<std::string>& warnings) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(a, b)); };
  const std::size_t n = spec.size();
  for (int round = 0; round < 16; ++round) {
    bool changed = false;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        if (close(spec.lambda[j], spec.lambda[k])) {
          spec.lambda[j] *= 1.0 + 1e-7;
          warnings.push_back("lambda_" + std::to_string(j + 1) + " coincides with lambda_" + std::to_string(k + 1) +
                             "; perturbed by a relative 1e-7");
          changed = true;
        }
      }
    }
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t j = 0; j < n; ++j) {
        if (close(spec.mu[l], spec.lambda[j])) {
          spec.mu[l] *= 1.0 + 1e-7;
          warnings.push_back("mu_" + std::to_string(l + 1) + " coincides with lambda_" + std::to_string(j + 1) +
                             "; perturbed by a relative 1e-7");
          changed = true;
        }
      }
      for (std::size_t k = 0; k < l; ++k) {
        if (close(spec.mu[l], spec.mu[k])) {
          spec.mu[l] *= 1.0 + 1e-7;
          warnings.push_back("mu_" + std::to_string(l + 1) + " coincides with mu_" + std::to_string(k + 1) +
                             "; perturbed by a relative 1e-7");
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return spec;
}

class Model2Solution {
 public:
  Model2Spec spec;          // possibly rate-perturbed copy of the input
  Model2Path path = Model2Path::general;
  RMatrix phi_at_lambda;    // (i, j) = Phi_i(lambda_j)
  RMatrix phi_at_mu;        // (i, j) = Phi_i(mu_j)
  RVector v1, vm1;          // v_j^(1), v_j^(-1)
  RVector k1, k2;
  ZeroSet roots;            // zeros of det G in Re(s) > 0
  std::vector<CVector> null_vectors;
  double condition = 1.0;
  double max_imag = 0.0;    // largest imaginary part discarded from the unknowns
  std::vector<std::string> warnings;

  explicit Model2Solution(Model2Spec s) : spec(std::move(s)) {}

  /// Row vector v(s), returned as a column.
  CVector v_tilde(cplx s) const {
    const std::size_t n = spec.size();
    CVector v(static_cast<Eigen::Index>(n));
    if (path == Model2Path::map_g1) {
      for (std::size_t j = 0; j < n; ++j) v(j) = s * v1(j);
      return v;
    }
    const double q = spec.q();
    const auto& pi = spec.chain.pi();
    for (std::size_t j = 0; j < n; ++j) {
      const double mu = spec.mu[j], lam = spec.lambda[j];
      if (std::abs(mu + s) <= 1e-12 * mu) {
        std::ostringstream os;
        os << "v(s) evaluated at its pole s = -mu_" << j + 1;
        throw PoleError(os.str(), cplx(-mu, 0.0));
      }
      v(j) = (s * s * k2(j) + s * k1(j) - q * pi(j) * lam * mu) / (mu + s);
    }
    return v;
  }

  /// Phi_W(s) as a column vector (one entry per state).
  CVector phi(cplx s) const {
    if (path == Model2Path::alternating) {
      const std::size_t n = spec.size();
      CVector out(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) {
        const double mu = spec.mu[j];
        if (std::abs(mu + s) <= 1e-12 * mu) throw PoleError("transform evaluated at s = -mu_j", cplx(-mu, 0.0));
        out(j) = spec.chain.pi(j) - s / (mu + s) * alternating_w_(j);
      }
      return out;
    }
    // With p = 1, G(0) is singular and the direct solve loses digits like 1/|s|.
    // Near 0 use the Cauchy integral over a circle where the solve is well conditioned.
    const double radius = 1e-2 * std::min(1.0, *std::min_element(spec.lambda.begin(), spec.lambda.end()));
    if (path == Model2Path::map_g1 && std::abs(s) < 0.1 * radius) {
      constexpr int k = 32;
      CVector acc = CVector::Zero(static_cast<Eigen::Index>(spec.size()));
      for (int j = 0; j < k; ++j) {
        const cplx z = std::polar(radius, (j + 0.5) * 2.0 * std::numbers::pi / k);
        acc += phi_direct(z) * (z / (z - s));
      }
      return acc / static_cast<double>(k);
    }
    const double h = 1e-6;
    bool near_zero = false;
    for (cplx z : roots.zeros) near_zero = near_zero || std::abs(s - z) < h * (1.0 + std::abs(z));
    if (near_zero) return 0.5 * (phi_direct(s + h) + phi_direct(s - h));
    return phi_direct(s);
  }

  /// Phi^T(s) G(s) - v(s), the residual of the row functional equation.
  double functional_residual(cplx s) const {
    const CVector ph = phi(s);
    const CVector lhs = build_G(spec, s).transpose() * ph;
    return (lhs - v_tilde(s)).cwiseAbs().maxCoeff();
  }

  void set_alternating_w(RVector w) { alternating_w_ = std::move(w); }

 private:
  CVector phi_direct(cplx s) const {
    const CMatrix G = build_G(spec, s);
    return solve_dense(G.transpose(), v_tilde(s)).x;
  }

  RVector alternating_w_;
};

inline CVector evaluate_phi2(const Model2Solution& sol, cplx s) { return sol.phi(s); }

/// The N zeros of det G(s) in Re(s) > 0 (p in (0,1)) with their right null vectors.
inline ZeroSet find_si_roots(const Model2Spec& spec, std::vector<CVector>* null_vectors = nullptr,
                             double search_bound = 0.0) {
  spec.validate();
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw InvalidArgument("find_si_roots: p must lie in (0, 1)");
  const double bound = search_bound > 0.0 ? search_bound : default_search_bound(spec);
  const int n = static_cast<int>(spec.size());
  ScalarFunction f = [&spec](cplx s) { return determinant(build_G(spec, s)); };
  ZeroSet zs = find_zeros_right_halfplane(f, n, bound);
  for (std::size_t a = 0; a < zs.zeros.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      if (std::abs(zs.zeros[a] - zs.zeros[b]) <= 1e-6)
        throw ZeroCountError("zeros of det G are not distinct", n, n);
  if (null_vectors) {
    null_vectors->clear();
    for (cplx z : zs.zeros) null_vectors->push_back(null_vector_right(build_G(spec, z)));
  }
  return zs;
}

namespace detail {

// Real-valued linear form over the 2N^2 unknowns, stored with complex entries.
struct LinearForm {
  cplx constant{0.0};
  Eigen::RowVectorXcd row;
};

inline void model2_general_assemble(Model2Solution& sol) {
  const Model2Spec& sp = sol.spec;
  const auto n = static_cast<Eigen::Index>(sp.size());
  const Eigen::Index nu = 2 * n * n;
  const double p = sp.p, q = sp.q();
  const auto& P = sp.chain.P();
  const auto& pi = sp.chain.pi();
  auto L = [n](Eigen::Index i, Eigen::Index j) { return i * n + j; };
  auto M = [n](Eigen::Index i, Eigen::Index j) { return n * n + i * n + j; };

  std::vector<LinearForm> v1(n), vm1(n), k1(n), k2(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    v1[j].row = Eigen::RowVectorXcd::Zero(nu);
    vm1[j].row = Eigen::RowVectorXcd::Zero(nu);
    vm1[j].constant = q * pi(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      v1[j].row(L(i, j)) += p * sp.beta[i](sp.lambda[j]) * P(i, j);
      vm1[j].row(M(i, j)) -= q * sp.c_star[i](sp.mu[j]) * P(i, j);
    }
    const double mu = sp.mu[j], lam = sp.lambda[j];
    k1[j].constant = q * pi(j) * mu + mu * v1[j].constant - lam * vm1[j].constant;
    k1[j].row = mu * v1[j].row - lam * vm1[j].row;
    k2[j].constant = v1[j].constant + vm1[j].constant;
    k2[j].row = v1[j].row + vm1[j].row;
  }
  auto v_form = [&](Eigen::Index j, cplx s) {
    const double mu = sp.mu[j], lam = sp.lambda[j];
    LinearForm f;
    f.constant = (s * s * k2[j].constant + s * k1[j].constant - q * pi(j) * lam * mu) / (mu + s);
    f.row = (s * s * k2[j].row + s * k1[j].row) / (mu + s);
    return f;
  };

  CMatrix A(nu, nu);
  CVector b(nu);
  Eigen::Index r = 0;
  auto push = [&](const LinearForm& f) {
    const double scale = std::max(f.row.cwiseAbs().maxCoeff(), 1e-300);
    A.row(r) = f.row / scale;
    b(r) = -f.constant / scale;
    ++r;
  };

  auto v_form_derivative = [&](Eigen::Index j, cplx s) {
    const double mu = sp.mu[j], lam = sp.lambda[j];
    const cplx d = (mu + s) * (mu + s);
    LinearForm f;
    f.constant = ((2.0 * s * k2[j].constant + k1[j].constant) * (mu + s) -
                  (s * s * k2[j].constant + s * k1[j].constant - q * pi(j) * lam * mu)) / d;
    f.row = ((2.0 * s * k2[j].row + k1[j].row) * (mu + s) - (s * s * k2[j].row + s * k1[j].row)) / d;
    return f;
  };
  // Which unknown column, if any, sits on top of a zero of det G.
  auto coincident_column = [&](cplx z) -> std::optional<std::pair<double, Eigen::Index>> {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(z - sp.lambda[k]) <= 1e-7 * std::max(1.0, sp.lambda[k])) return std::pair{sp.lambda[k], L(0, k)};
      if (std::abs(z - sp.mu[k]) <= 1e-7 * std::max(1.0, sp.mu[k])) return std::pair{sp.mu[k], M(0, k)};
    }
    return std::nullopt;
  };

  // Analyticity at the zeros of det G: v(s_i) a_i = 0. When s_i coincides with a
  // point whose transform values are themselves unknowns that row is implied by
  // the others, so use the differentiated identity Phi^T G'(s_i) a_i = v'(s_i) a_i.
  for (std::size_t z = 0; z < sol.roots.zeros.size(); ++z) {
    const CVector& a = sol.null_vectors[z];
    LinearForm f;
    f.row = Eigen::RowVectorXcd::Zero(nu);
    if (const auto hit = coincident_column(sol.roots.zeros[z])) {
      const double s = hit->first;
      const Eigen::Index base = hit->second;  // unknown for state i is base + i * n
      const double h = 1e-5 * std::max(1.0, s);
      CMatrix dG = CMatrix::Identity(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const cplx db = (sp.beta[i](s + h) - sp.beta[i](s - h)) / (2.0 * h);
        for (Eigen::Index j = 0; j < n; ++j) dG(i, j) += p * db * P(i, j) * sp.lambda[j];
      }
      const CVector ga = dG * a;
      for (Eigen::Index i = 0; i < n; ++i) f.row(base + i * n) += ga(i);
      for (Eigen::Index k = 0; k < n; ++k) {
        const LinearForm vk = v_form_derivative(k, s);
        f.constant -= vk.constant * a(k);
        f.row -= vk.row * a(k);
      }
      sol.warnings.push_back("a zero of det G coincides with an evaluation point; used the differentiated constraint");
    } else {
      for (Eigen::Index k = 0; k < n; ++k) {
        const LinearForm vk = v_form(k, sol.roots.zeros[z]);
        f.constant += vk.constant * a(k);
        f.row += vk.row * a(k);
      }
    }
    push(f);
  }
  // State-j component of the functional equation at a point s where Phi(s) is unknown.
  auto equation_at = [&](Eigen::Index j, double s, auto&& index_of_phi) {
    LinearForm f = v_form(j, s);
    f.constant = -f.constant;
    f.row = -f.row;
    for (Eigen::Index i = 0; i < n; ++i) f.row(index_of_phi(i)) += sp.lambda[j] * p * P(i, j) * sp.beta[i](s);
    f.row(index_of_phi(j)) -= sp.lambda[j] - s;
    return f;
  };
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index j = 0; j < n; ++j) push(equation_at(j, sp.mu[l], [&](Eigen::Index i) { return M(i, l); }));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != j) push(equation_at(j, sp.lambda[k], [&](Eigen::Index i) { return L(i, k); }));

  const DenseSolution ds = solve_dense(A, b);
  sol.condition = ds.condition;
  if (ds.condition > 1e10) {
    std::ostringstream os;
    os << "unknown-value system ill-conditioned (condition estimate " << ds.condition << ")";
    throw SingularSystemError(os.str(), ds.condition);
  }
  RVector x(nu);
  for (Eigen::Index k = 0; k < nu; ++k) {
    x(k) = ds.x(k).real();
    sol.max_imag = std::max(sol.max_imag, std::abs(ds.x(k).imag()));
  }
  sol.phi_at_lambda.resize(n, n);
  sol.phi_at_mu.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      sol.phi_at_lambda(i, j) = x(L(i, j));
      sol.phi_at_mu(i, j) = x(M(i, j));
    }
  auto value = [&x](const LinearForm& f) { return (f.constant + (f.row * x.cast<cplx>())(0)).real(); };
  sol.v1.resize(n);
  sol.vm1.resize(n);
  sol.k1.resize(n);
  sol.k2.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    sol.v1(j) = value(v1[j]);
    sol.vm1(j) = value(vm1[j]);
    sol.k1(j) = value(k1[j]);
    sol.k2(j) = value(k2[j]);
  }
}

// p = 1: Phi^T(s) G(s) = s v1 with N - 1 zeros of det G in Re(s) > 0 plus
// the normalisation sum_j v1_j / lambda_j = sum_j pi_j / lambda_j - sum_i pi_i gamma_i.
inline void model2_map_assemble(Model2Solution& sol, double bound) {
  const Model2Spec& sp = sol.spec;
  const auto n = static_cast<Eigen::Index>(sp.size());
  const auto& pi = sp.chain.pi();
  if (n > 1) {
    ScalarFunction f = [&sp](cplx s) { return determinant(build_G(sp, s)); };
    sol.roots = find_zeros_right_halfplane(f, static_cast<int>(n - 1), bound, 1e-3);
    for (cplx z : sol.roots.zeros) sol.null_vectors.push_back(null_vector_right(build_G(sp, z)));
  }
  CMatrix A(n, n);
  CVector b = CVector::Zero(n);
  for (Eigen::Index r = 0; r + 1 < n; ++r) A.row(r) = sol.null_vectors[r].transpose();
  double rhs = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    A(n - 1, j) = 1.0 / sp.lambda[j];
    rhs += pi(j) / sp.lambda[j] - pi(j) * sp.beta[j].moment(1);
  }
  b(n - 1) = rhs;
  const DenseSolution ds = solve_dense(A, b);
  sol.condition = ds.condition;
  sol.v1.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    sol.v1(j) = ds.x(j).real();
    sol.max_imag = std::max(sol.max_imag, std::abs(ds.x(j).imag()));
  }
  sol.vm1 = RVector::Zero(n);
  sol.k2 = sol.v1;
  sol.k1.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) sol.k1(j) = sp.mu[j] * sol.v1(j);
}

// p = 0: Phi_j(s) = pi_j - s/(mu_j + s) w_j, w_j = sum_i p_ij c*_i(mu_j) Phi_i(mu_j).
inline void model2_alternating_assemble(Model2Solution& sol) {
  const Model2Spec& sp = sol.spec;
  const auto n = static_cast<Eigen::Index>(sp.size());
  const auto& P = sp.chain.P();
  const auto& pi = sp.chain.pi();
  auto M = [n](Eigen::Index i, Eigen::Index j) { return i * n + j; };
  CMatrix A = CMatrix::Zero(n * n, n * n);
  CVector b(n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const Eigen::Index r = M(j, l);
      A(r, M(j, l)) += 1.0;
      const double f = sp.mu[l] / (sp.mu[j] + sp.mu[l]);
      for (Eigen::Index i = 0; i < n; ++i) A(r, M(i, j)) += f * P(i, j) * sp.c_star[i](sp.mu[j]);
      b(r) = pi(j);
    }
  }
  const DenseSolution ds = solve_dense(A, b);
  sol.condition = ds.condition;
  sol.phi_at_mu.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sol.phi_at_mu(i, j) = ds.x(M(i, j)).real();
  RVector w = RVector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) w(j) += P(i, j) * sp.c_star[i](sp.mu[j]).real() * sol.phi_at_mu(i, j);
  sol.set_alternating_w(w);
  sol.v1 = RVector::Zero(n);
  sol.vm1 = pi - w;
  sol.k2 = sol.vm1;
  sol.k1.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) sol.k1(j) = pi(j) * sp.mu[j] - sp.lambda[j] * sol.vm1(j);
}

}  // namespace detail

struct Model2Options {
  double search_bound = 0.0;  // 0: default_search_bound
};

/// Solves for the unknown transform values given the zeros of det G.
inline Model2Solution assemble_unknowns(const Model2Spec& input, const Model2Options& opt = {}) {
  input.validate();
  std::vector<std::string> warnings;
  Model2Spec spec = input.p > 0.0 && input.p < 1.0 ? separate_coincident_rates(input, warnings) : input;
  if (input.p == 0.0) {
    // Only the mu_j enter the alternating path.
    for (std::size_t l = 0; l < spec.size(); ++l) {
      for (std::size_t k = 0; k < l; ++k) {
        if (std::abs(spec.mu[l] - spec.mu[k]) <= 1e-9 * std::max(1.0, spec.mu[l])) {
          spec.mu[l] *= 1.0 + 1e-7;
          warnings.push_back("mu_" + std::to_string(l + 1) + " coincides with mu_" + std::to_string(k + 1) +
                             "; perturbed by a relative 1e-7");
        }
      }
    }
  }
  Model2Solution sol(std::move(spec));
  sol.warnings = std::move(warnings);
  const auto n = static_cast<Eigen::Index>(sol.spec.size());
  const double bound = opt.search_bound > 0.0 ? opt.search_bound : default_search_bound(sol.spec);

  if (sol.spec.p == 0.0) {
    sol.path = Model2Path::alternating;
    detail::model2_alternating_assemble(sol);
  } else if (sol.spec.p == 1.0) {
    const StabilityReport st = check_stability_model2(sol.spec);
    if (!st.stable) throw UnstableError("p = 1 with rho = " + std::to_string(st.rho) + " >= 1");
    sol.path = Model2Path::map_g1;
    detail::model2_map_assemble(sol, bound);
  } else {
    sol.path = Model2Path::general;
    sol.roots = find_si_roots(sol.spec, &sol.null_vectors, bound);
    detail::model2_general_assemble(sol);
  }

  if (sol.path != Model2Path::general) {
    // Fill the unknown tables from the evaluator.
    sol.phi_at_lambda.resize(n, n);
    if (sol.path == Model2Path::map_g1) sol.phi_at_mu.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const CVector a = sol.phi(sol.spec.lambda[j]);
      for (Eigen::Index i = 0; i < n; ++i) sol.phi_at_lambda(i, j) = a(i).real();
      if (sol.path == Model2Path::map_g1) {
        const CVector m = sol.phi(sol.spec.mu[j]);
        for (Eigen::Index i = 0; i < n; ++i) sol.phi_at_mu(i, j) = m(i).real();
      }
    }
  }
  if (sol.max_imag > 1e-8) {
    std::ostringstream os;
    os << "unknowns carry imaginary parts up to " << sol.max_imag;
    sol.warnings.push_back(os.str());
  }
  const auto& pi = sol.spec.chain.pi();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (double v : {sol.phi_at_lambda(i, j), sol.phi_at_mu(i, j)}) {
        if (!(v > 0.0 && v <= pi(i) + 1e-8)) {
          std::ostringstream os;
          os << "transform value " << v << " for state " << i + 1 << " outside (0, pi_i]; instance may be near instability";
          sol.warnings.push_back(os.str());
        }
      }
    }
  }
  return sol;
}

inline Model2Solution solve_model2(const Model2Spec& spec, const Model2Options& opt = {}) {
  const StabilityReport st = check_stability_model2(spec);
  if (!st.stable) throw UnstableError(st.message);
  return assemble_unknowns(spec, opt);
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

struct Model2Moments {
  std::vector<RVector> m;  // m[r](i) = E[W^r 1{Z = i}]
  bool nonnegative = true;
  bool jensen = true;
};

/// Moment vectors m_0..m_{r_max} from the power-series expansion of
/// Phi^T(s) [H(s) + sI - Lambda](M + sI) = s k1 + s^2 k2 - q pi Lambda M.
inline Model2Moments moments(const Model2Solution& sol, int r_max) {
  if (r_max < 0) throw InvalidArgument("moments: r_max must be nonnegative");
  const Model2Spec& sp = sol.spec;
  const auto n = static_cast<Eigen::Index>(sp.size());
  const double p = sp.p;
  const bool singular = sol.path == Model2Path::map_g1;
  const int need = singular ? r_max + 1 : r_max;
  for (const auto& b : sp.beta)
    if (b.max_moment() < need)
      throw InvalidArgument("moments: service moments up to order " + std::to_string(need) + " required");

  RMatrix Lam = RMatrix::Zero(n, n), Mu = RMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Lam(j, j) = sp.lambda[j];
    Mu(j, j) = sp.mu[j];
  }
  const RMatrix PL = sp.chain.P() * Lam;
  auto gamma = [&](int r) {
    RMatrix g = RMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) g(i, i) = sp.beta[i].moment(r);
    return g;
  };
  std::vector<double> fact(need + 2, 1.0);
  for (int r = 1; r < static_cast<int>(fact.size()); ++r) fact[r] = fact[r - 1] * r;
  // h_r: coefficient of s^r in H(s).
  auto h = [&](int r) -> RMatrix { return p * ((r % 2 == 0 ? 1.0 : -1.0) / fact[r]) * gamma(r) * PL; };
  auto K = [&](int r) -> RMatrix {
    RMatrix k = h(r) * Mu;
    if (r >= 1) k += h(r - 1);
    if (r == 0) k -= Lam * Mu;
    if (r == 1) k += Mu - Lam;
    if (r == 2) k += RMatrix::Identity(n, n);
    return k;
  };
  auto rhs = [&](int r) -> RVector {
    if (r == 0) return -sp.q() * (sp.chain.pi().transpose() * Lam * Mu).transpose();
    if (r == 1) return sol.k1;
    if (r == 2) return sol.k2;
    return RVector::Zero(n);
  };

  std::vector<RMatrix> Ks;
  for (int r = 0; r <= need + 1; ++r) Ks.push_back(K(r));
  std::vector<RVector> phi_coef;  // coefficients of s^r in Phi^T(s)
  Model2Moments out;
  phi_coef.push_back(sp.chain.pi());
  const RVector u = (Lam * Mu).diagonal().cwiseInverse();  // right kernel of K_0 when p = 1
  for (int r = 1; r <= r_max; ++r) {
    RVector b = rhs(r);
    for (int j = 0; j < r; ++j) b -= (phi_coef[j].transpose() * Ks[r - j]).transpose();
    RVector x;
    if (!singular) {
      x = Ks[0].transpose().fullPivLu().solve(b);
    } else {
      // K_0 is singular; the next order fixes the component along pi.
      double c = rhs(r + 1).dot(u);
      for (int j = 0; j < r; ++j) c -= phi_coef[j].dot(Ks[r + 1 - j] * u);
      RMatrix A(n + 1, n);
      A.topRows(n) = Ks[0].transpose();
      A.row(n) = (Ks[1] * u).transpose();
      RVector rhs_aug(n + 1);
      rhs_aug << b, c;
      x = A.colPivHouseholderQr().solve(rhs_aug);
    }
    phi_coef.push_back(x);
  }
  for (int r = 0; r <= r_max; ++r) {
    out.m.push_back(((r % 2 == 0 ? 1.0 : -1.0) * fact[r]) * phi_coef[r]);
    const double scale = std::max(1.0, out.m.back().cwiseAbs().maxCoeff());
    if (out.m.back().minCoeff() < -1e-9 * scale) out.nonnegative = false;
  }
  if (r_max >= 2) {
    const double m0 = out.m[0].sum(), m1 = out.m[1].sum(), m2 = out.m[2].sum();
    out.jensen = m2 >= m1 * m1 / m0 - 1e-9;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tail asymptotics
// ---------------------------------------------------------------------------

struct DecayProfile {
  double R = 0.0;
  CVector C;                       // residue of Phi at -R (density tail coefficient)
  double det_derivative = 0.0;
  std::vector<cplx> maximizers;    // zeros sharing the largest real part
  bool oscillatory = false;
  ZeroSet zeros;                   // all zeros of det G found in the strip
  std::vector<std::string> warnings;
};

inline DecayProfile decay_profile(const Model2Solution& sol, double search_bound = 0.0) {
  const Model2Spec& sp = sol.spec;
  if (sp.p == 0.0) throw InvalidArgument("decay_profile: det G has no service-driven zeros when p = 0");
  double zeta = std::numeric_limits<double>::infinity();
  for (const auto& b : sp.beta) zeta = std::min(zeta, b.zeta());
  if (!(zeta > 0.0)) throw InvalidArgument("decay_profile: service transform not analytic left of 0");
  double bound = search_bound;
  if (!(bound > 0.0)) {
    // Only lambda and the service transforms enter det G.
    double m = 0.0;
    for (std::size_t j = 0; j < sp.size(); ++j) m = std::max(m, sp.lambda[j]);
    if (std::isfinite(zeta)) m = std::max(m, zeta);
    bound = 10.0 * m + 10.0;
  }
  // The left edge stays a relative 1e-3 inside the analyticity strip so the
  // contour does not graze the singularity at -zeta.
  const double left = std::isfinite(zeta) ? -zeta * (1.0 - 1e-3) : -bound;
  const double inset = sp.p == 1.0 ? 1e-6 : 1e-9;
  const Rectangle rect{left, -inset, -bound * 1.0000137, bound * 0.9999829};
  ScalarFunction f = [&sp](cplx s) { return determinant(build_G(sp, s)); };

  DecayProfile out;
  out.zeros = find_zeros_in_rectangle(f, rect, -1);
  if (out.zeros.zeros.empty())
    throw Error("no exponential decay rate within analyticity region");
  double best = -std::numeric_limits<double>::infinity();
  for (cplx z : out.zeros.zeros) best = std::max(best, z.real());
  for (cplx z : out.zeros.zeros)
    if (std::abs(z.real() - best) <= 1e-9 * std::max(1.0, std::abs(best))) out.maximizers.push_back(z);
  cplx root = out.maximizers.front();
  for (cplx z : out.maximizers)
    if (std::abs(z.imag()) < std::abs(root.imag())) root = z;
  out.oscillatory = out.maximizers.size() > 1 || std::abs(root.imag()) > 1e-9;
  if (out.oscillatory) out.warnings.push_back("several zeros share the largest real part; decay is oscillatory");
  out.R = -root.real();

  const double h = 1e-7 * std::max(1.0, out.R);
  const cplx d = (f(root + h) - f(root - h)) / (2.0 * h);
  out.det_derivative = std::abs(d);
  if (!(std::abs(d) > 1e-8)) throw Error("-R is not a simple zero of det G");
  const CMatrix adj = adjugate(build_G(sp, root));
  out.C = (adj.transpose() * sol.v_tilde(root)) / d;
  for (std::size_t j = 0; j < sp.size(); ++j) {
    if (sp.q() > 0.0 && sp.mu[j] < out.R) {
      out.warnings.push_back("pole of v(s) at -mu_" + std::to_string(j + 1) +
                             " lies right of -R; the tail is dominated by rate mu_" + std::to_string(j + 1));
    }
  }
  return out;
}

}  // namespace mmlindley
