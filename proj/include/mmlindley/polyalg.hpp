#pragma once

// Complex-analytic and dense linear-algebra kernels: solves with condition
// estimates, winding numbers, zero isolation by contour quadrisection, null
// vectors, and affine forms in a vector of unknown coefficients.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mmlindley/errors.hpp"
#include "mmlindley/probcore.hpp"

namespace mmlindley {

using ScalarFunction = std::function<cplx(cplx)>;

/// s -> N x N complex matrix, analytic on Re(s) > -zeta except at `poles`.
struct MatrixFunction {
  std::function<CMatrix(cplx)> eval;
  double zeta = 0.0;
  std::vector<cplx> poles;

  CMatrix operator()(cplx s) const { return eval(s); }
};

// ---------------------------------------------------------------------------
// Dense solves
// ---------------------------------------------------------------------------

struct DenseSolution {
  CVector x;
  double condition = 1.0;  // 1-norm estimate
  double residual = 0.0;   // ||Ax - b||_inf
};

inline DenseSolution solve_dense(const CMatrix& A, const CVector& b) {
  if (A.rows() != A.cols()) throw InvalidArgument("solve_dense: matrix is not square");
  if (A.rows() != b.size()) throw InvalidArgument("solve_dense: dimension mismatch");
  if (A.rows() == 0) return {CVector(0), 1.0, 0.0};
  Eigen::PartialPivLU<CMatrix> lu(A);
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(rcond > 1e-15) || !std::isfinite(cond)) {
    std::ostringstream os;
    os << "dense system singular to working precision (condition estimate " << cond << ")";
    throw SingularSystemError(os.str(), cond);
  }
  CVector x = lu.solve(b);
  const double target = 1e-10 * (1.0 + b.cwiseAbs().maxCoeff());
  double res = (A * x - b).cwiseAbs().maxCoeff();
  for (int it = 0; it < 3 && res > target; ++it) {
    x += lu.solve(b - A * x);
    res = (A * x - b).cwiseAbs().maxCoeff();
  }
  if (!(res <= target)) {
    std::ostringstream os;
    os << "dense solve residual " << res << " above tolerance (condition estimate " << cond << ")";
    throw SingularSystemError(os.str(), cond);
  }
  return {std::move(x), cond, res};
}

inline cplx determinant(const CMatrix& A) {
  if (A.rows() == 0) return 1.0;
  if (A.rows() == 1) return A(0, 0);
  return Eigen::PartialPivLU<CMatrix>(A).determinant();
}

/// Adjugate by cofactor expansion; intended for small matrices (N <= 8).
inline CMatrix adjugate(const CMatrix& A) {
  const Eigen::Index n = A.rows();
  if (n > 8) throw InvalidArgument("adjugate: cofactor path limited to N <= 8");
  if (n == 1) return CMatrix::Ones(1, 1);
  CMatrix adj(n, n);
  CMatrix minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index r = 0, mr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Eigen::Index c = 0, mc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(mr, mc++) = A(r, c);
        }
        ++mr;
      }
      // Eigen's determinant is exact expansion for n <= 4 and LU beyond.
      const cplx d = n - 1 <= 4 ? minor.determinant() : determinant(minor);
      adj(j, i) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * d;
    }
  }
  return adj;
}

// ---------------------------------------------------------------------------
// Null vectors
// ---------------------------------------------------------------------------

/// Unit vector spanning the one-dimensional kernel of A, first nonzero entry
/// rotated onto the positive real axis.
inline CVector null_vector_right(const CMatrix& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw InvalidArgument("null_vector_right: need a nonempty square matrix");
  const Eigen::Index n = A.rows();
  Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double scale = std::max(1.0, sv(0));
  if (!(sv(n - 1) < 1e-8 * scale)) {
    std::ostringstream os;
    os << "null vector requested for a nonsingular matrix (smallest singular value " << sv(n - 1) << ")";
    throw RankError(os.str());
  }
  if (n > 1 && !(sv(n - 2) > 1e-6 * scale)) {
    std::ostringstream os;
    os << "kernel dimension exceeds one (second smallest singular value " << sv(n - 2) << ")";
    throw RankError(os.str());
  }
  CVector v = svd.matrixV().col(n - 1);
  v /= v.norm();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(v(k)) > 1e-12) {
      v *= std::conj(v(k)) / std::abs(v(k));
      v(k) = std::abs(v(k));
      break;
    }
  }
  if ((A * v).cwiseAbs().maxCoeff() > 1e-8 * scale) throw RankError("null vector residual above tolerance");
  return v;
}

/// Row vector z (returned as a column) with z^T A = 0.
inline CVector null_vector_left(const CMatrix& A) { return null_vector_right(A.transpose()); }

// ---------------------------------------------------------------------------
// Affine forms
// ---------------------------------------------------------------------------

/// constant + coeff * c, linear in an unknown coefficient vector c.
struct AffineVector {
  CVector constant;
  CMatrix coeff;

  AffineVector() = default;
  AffineVector(CVector k, CMatrix m) : constant(std::move(k)), coeff(std::move(m)) {
    if (constant.size() != coeff.rows()) throw InvalidArgument("affine vector: dimension mismatch");
  }
  static AffineVector zero(Eigen::Index n, Eigen::Index unknowns) {
    return {CVector::Zero(n), CMatrix::Zero(n, unknowns)};
  }

  Eigen::Index size() const noexcept { return constant.size(); }
  Eigen::Index unknowns() const noexcept { return coeff.cols(); }

  CVector evaluate(const CVector& c) const { return constant + coeff * c; }
  double max_abs() const {
    double m = constant.size() ? constant.cwiseAbs().maxCoeff() : 0.0;
    if (coeff.size()) m = std::max(m, coeff.cwiseAbs().maxCoeff());
    return m;
  }

  AffineVector& operator+=(const AffineVector& o) {
    constant += o.constant;
    coeff += o.coeff;
    return *this;
  }
  friend AffineVector operator+(AffineVector a, const AffineVector& b) { return a += b; }
  friend AffineVector operator-(const AffineVector& a, const AffineVector& b) {
    return {a.constant - b.constant, a.coeff - b.coeff};
  }
  friend AffineVector operator*(const CMatrix& M, const AffineVector& v) { return {M * v.constant, M * v.coeff}; }
  friend AffineVector operator*(cplx k, const AffineVector& v) { return {k * v.constant, k * v.coeff}; }
};

/// A scalar affine form: constant + row . c
struct AffineScalar {
  cplx constant{0.0};
  Eigen::RowVectorXcd row;
};

inline AffineScalar dot(const CVector& w, const AffineVector& v) {
  return {(w.transpose() * v.constant)(0), w.transpose() * v.coeff};
}

// ---------------------------------------------------------------------------
// Contours and winding numbers
// ---------------------------------------------------------------------------

struct Rectangle {
  double re_lo, re_hi, im_lo, im_hi;

  cplx center() const { return {(re_lo + re_hi) / 2, (im_lo + im_hi) / 2}; }
  double width() const { return re_hi - re_lo; }
  double height() const { return im_hi - im_lo; }
  bool contains(cplx z, double slack = 0.0) const {
    return z.real() >= re_lo - slack && z.real() <= re_hi + slack && z.imag() >= im_lo - slack &&
           z.imag() <= im_hi + slack;
  }
};

struct Circle {
  cplx center;
  double radius;
};

using Contour = std::variant<Rectangle, Circle>;

namespace detail {

/// Point at parameter t in [0, 1), traversed counterclockwise. Each side of a
/// rectangle gets a quarter of the parameter range, so thin boxes are still
/// sampled densely along their short sides. On an elongated box the long sides
/// are sampled with a sinh map that crowds points toward their midpoints,
/// where the real axis usually crosses.
inline cplx contour_point(const Contour& c, double t) {
  if (const auto* circle = std::get_if<Circle>(&c)) {
    return circle->center + circle->radius * std::polar(1.0, 2.0 * std::numbers::pi * t);
  }
  const auto& r = std::get<Rectangle>(c);
  const double w = r.width(), h = r.height();
  const double aspect = std::max(w, h) / std::min(w, h);
  const double k = aspect > 4.0 ? std::min(std::asinh(aspect), 8.0) : 0.0;
  auto along = [k](double u, bool long_side) {
    if (!long_side || k == 0.0) return u;
    return 0.5 + 0.5 * std::sinh(k * (2.0 * u - 1.0)) / std::sinh(k);
  };
  const double u = 4.0 * t;
  if (u < 1.0) return {r.re_lo + along(u, w > h) * w, r.im_lo};
  if (u < 2.0) return {r.re_hi, r.im_lo + along(u - 1.0, h > w) * h};
  if (u < 3.0) return {r.re_hi - along(u - 2.0, w > h) * w, r.im_hi};
  return {r.re_lo, r.im_hi - along(u - 3.0, h > w) * h};
}

struct WindingAccumulator {
  const ScalarFunction& f;
  const Contour& contour;
  double min_abs;
  cplx min_point;
  int evaluations = 0;

  cplx eval(double t) {
    const cplx z = contour_point(contour, t);
    const cplx v = f(z);
    ++evaluations;
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream os;
      os << "non-finite function value on contour at " << z;
      throw ContourError(os.str(), z, 0.0);
    }
    const double a = std::abs(v);
    if (a < min_abs) {
      min_abs = a;
      min_point = z;
    }
    return v;
  }

  // Phase increment over [t0, t1]. A step is accepted once it and both of its
  // halves turn by less than pi/4, the halves add up to the whole, and |f|
  // changes by less than a factor e (a sharp jump hints at a nearby pole or zero).
  double increment(double t0, cplx f0, double t1, cplx f1, int depth) {
    const double d = std::arg(f1 / f0);
    const double tm = 0.5 * (t0 + t1);
    const cplx fm = eval(tm);
    check_floor();
    const double d1 = std::arg(fm / f0), d2 = std::arg(f1 / fm);
    constexpr double quarter = std::numbers::pi / 4;
    const double jump = std::max(std::abs(std::log(std::abs(fm / f0))), std::abs(std::log(std::abs(f1 / fm))));
    if (std::abs(d) < quarter && std::abs(d1) < quarter && std::abs(d2) < quarter && std::abs(d1 + d2 - d) < 1e-9 &&
        jump < 1.0)
      return d1 + d2;
    if (depth >= 48) {
      std::ostringstream os;
      os << "winding number unresolved near " << contour_point(contour, t0);
      throw ContourError(os.str(), contour_point(contour, t0), min_abs);
    }
    return increment(t0, f0, tm, fm, depth + 1) + increment(tm, fm, t1, f1, depth + 1);
  }

  void check_floor() const {
    if (min_abs < 1e-8) {
      std::ostringstream os;
      os << "function nearly vanishes on the contour (|f| = " << min_abs << " at " << min_point
         << "); perturb the contour";
      throw ContourError(os.str(), min_point, min_abs);
    }
  }
};

inline double winding_pass(const ScalarFunction& f, const Contour& contour, int n_points) {
  WindingAccumulator acc{f, contour, std::numeric_limits<double>::infinity(), cplx{}};
  std::vector<cplx> values(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) values[k] = acc.eval(static_cast<double>(k) / n_points);
  acc.check_floor();
  double total = 0.0;
  for (int k = 0; k < n_points; ++k) {
    const int k1 = (k + 1) % n_points;
    const double t1 = k1 == 0 ? 1.0 : static_cast<double>(k1) / n_points;
    total += acc.increment(static_cast<double>(k) / n_points, values[k], t1, values[k1], 0);
  }
  return total / (2.0 * std::numbers::pi);
}

}  // namespace detail

/// Winding number of f along the contour (number of zeros minus poles inside).
/// Sampling starts at n_points and is doubled until two consecutive passes agree.
inline int count_zeros(const ScalarFunction& f, const Contour& contour, int n_points = 64) {
  if (n_points < 16) n_points = 16;
  auto rounded = [](double w) { return std::abs(w - std::lround(w)) < 1e-6 ? std::lround(w) : LONG_MIN; };
  long prev2 = rounded(detail::winding_pass(f, contour, n_points));
  n_points *= 2;
  long prev = rounded(detail::winding_pass(f, contour, n_points));
  for (int round = 0; round < 6; ++round) {
    if (prev != LONG_MIN && prev == prev2) return static_cast<int>(prev);
    n_points *= 2;
    prev2 = prev;
    prev = rounded(detail::winding_pass(f, contour, n_points));
  }
  throw ContourError("winding number did not stabilise", detail::contour_point(contour, 0.0), 0.0);
}

// ---------------------------------------------------------------------------
// Zero isolation
// ---------------------------------------------------------------------------

struct ZeroSet {
  std::vector<cplx> zeros;
  std::vector<double> residuals;  // |f(z)| after refinement
  std::vector<bool> multiple;     // always false: repeated zeros abort the search
  Rectangle contour{};
  int count = 0;                  // argument-principle count on `contour`
};

namespace detail {

inline cplx central_derivative(const ScalarFunction& f, cplx z) {
  const double h = 1e-7 * std::max(1.0, std::abs(z));
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

/// Newton iteration from z0; nullopt if it leaves `cell` or fails to converge.
inline std::optional<cplx> newton_in_cell(const ScalarFunction& f, cplx z0, const Rectangle& cell) {
  cplx z = z0;
  const double slack = 1e-9 * std::max(1.0, std::abs(z0));
  for (int it = 0; it < 100; ++it) {
    const cplx fz = f(z);
    if (fz == cplx{0.0}) return z;
    const cplx d = central_derivative(f, z);
    if (d == cplx{0.0}) return std::nullopt;
    const cplx step = fz / d;
    z -= step;
    if (!cell.contains(z, slack + 0.25 * std::max(cell.width(), cell.height()))) return std::nullopt;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  if (!cell.contains(z, slack)) return std::nullopt;
  const cplx fz = f(z);
  const cplx d = central_derivative(f, z);
  if (!(std::abs(fz) < 1e-9 * (1.0 + std::abs(d)))) return std::nullopt;
  return z;
}

struct QuadrisectionSearch {
  const ScalarFunction& f;
  double min_cell;
  ZeroSet& out;
  int n_points;

  // Split fractions deliberately avoid 1/2 so symmetric zeros (e.g. on the real axis) miss the cut lines.
  static constexpr std::array<double, 4> kSplits{0.5137, 0.4711, 0.5523, 0.4419};

  int count(const Rectangle& r) { return count_zeros(f, r, n_points); }

  void process(const Rectangle& cell, int n) {
    if (n <= 0) return;
    if (n == 1) {
      if (auto z = newton_in_cell(f, cell.center(), cell)) {
        accept(*z);
        return;
      }
    }
    if (std::max(cell.width(), cell.height()) < min_cell) {
      if (n == 1) {
        // Tiny cell with one zero: Newton from the centre must converge.
        if (auto z = newton_in_cell(f, cell.center(), Rectangle{cell.re_lo - cell.width(), cell.re_hi + cell.width(),
                                                                cell.im_lo - cell.height(), cell.im_hi + cell.height()})) {
          accept(*z);
          return;
        }
      }
      std::ostringstream os;
      os << n << " zeros remain in a cell of size " << std::max(cell.width(), cell.height()) << " near "
         << cell.center() << " (repeated or clustered zero)";
      throw ZeroCountError(os.str(), n, 1);
    }
    for (double frac : kSplits) {
      const double xm = cell.re_lo + frac * cell.width();
      const double ym = cell.im_lo + (1.0 - frac) * cell.height();
      const std::array<Rectangle, 4> kids{Rectangle{cell.re_lo, xm, cell.im_lo, ym}, Rectangle{xm, cell.re_hi, cell.im_lo, ym},
                                          Rectangle{cell.re_lo, xm, ym, cell.im_hi}, Rectangle{xm, cell.re_hi, ym, cell.im_hi}};
      std::array<int, 4> counts{};
      try {
        int total = 0;
        for (std::size_t k = 0; k < 4; ++k) {
          counts[k] = count(kids[k]);
          total += counts[k];
        }
        if (total != n) continue;
      } catch (const ContourError&) {
        continue;
      }
      for (std::size_t k = 0; k < 4; ++k) process(kids[k], counts[k]);
      return;
    }
    std::ostringstream os;
    os << "could not subdivide cell near " << cell.center() << " consistently";
    throw ZeroCountError(os.str(), n, n);
  }

  void accept(cplx z) {
    for (cplx w : out.zeros) {
      if (std::abs(w - z) <= 1e-6 * std::max(1.0, std::abs(z))) {
        std::ostringstream os;
        os << "zero " << z << " found twice (near-coincident zeros)";
        throw ZeroCountError(os.str(), static_cast<int>(out.zeros.size()) + 1, static_cast<int>(out.zeros.size()));
      }
    }
    out.zeros.push_back(z);
    out.residuals.push_back(std::abs(f(z)));
    out.multiple.push_back(false);
  }
};

}  // namespace detail

/// All zeros of f inside `rect`, which must hold exactly `expected` of them
/// (pass expected < 0 to accept whatever the argument principle reports).
inline ZeroSet find_zeros_in_rectangle(const ScalarFunction& f, const Rectangle& rect, int expected,
                                       int n_points = 64) {
  ZeroSet out;
  out.contour = rect;
  out.count = count_zeros(f, rect, n_points);
  if (expected >= 0 && out.count != expected) {
    std::ostringstream os;
    os << "argument principle found " << out.count << " zeros, expected " << expected;
    throw ZeroCountError(os.str(), out.count, expected);
  }
  const double size = std::max(rect.width(), rect.height());
  detail::QuadrisectionSearch search{f, 1e-10 * std::max(1.0, size), out, n_points};
  search.process(rect, out.count);
  if (static_cast<int>(out.zeros.size()) != out.count) {
    throw ZeroCountError("refined zero count differs from the argument-principle count",
                         static_cast<int>(out.zeros.size()), out.count);
  }
  std::sort(out.zeros.begin(), out.zeros.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  for (std::size_t k = 0; k < out.zeros.size(); ++k) out.residuals[k] = std::abs(f(out.zeros[k]));
  return out;
}

/// Exactly `expected_count` zeros with Re(s) > 0, searched in
/// [inset, bound] x [-bound, bound]. The box is enlarged (up to 8x) while too
/// few zeros are enclosed.
inline ZeroSet find_zeros_right_halfplane(const ScalarFunction& f, int expected_count, double search_bound,
                                          double inset = 1e-9) {
  if (expected_count < 1) throw InvalidArgument("find_zeros_right_halfplane: expected_count must be >= 1");
  if (!(search_bound > inset)) throw InvalidArgument("find_zeros_right_halfplane: bound must exceed the inset");
  double bound = search_bound;
  int found = -1;
  for (int attempt = 0; attempt < 4; ++attempt, bound *= 2.0) {
    // Odd offsets keep the box edges off symmetric zero locations.
    const Rectangle rect{inset, bound, -bound * 1.0000137, bound * 0.9999829};
    found = count_zeros(f, rect);
    if (found == expected_count) return find_zeros_in_rectangle(f, rect, expected_count);
    if (found > expected_count) break;
  }
  std::ostringstream os;
  os << "found " << found << " zeros in the right half-plane, expected " << expected_count
     << " (model misspecification or multiple zeros)";
  throw ZeroCountError(os.str(), found, expected_count);
}

}  // namespace mmlindley
