#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lapdecon/errors.hpp"
#include "lapdecon/polynomial.hpp"

namespace lapdecon {

/// Tolerance on the moment conditions of an order-(L, j) kernel.
inline constexpr double kMomentTolerance = 1e-10;

/// Closed-form integral over [-1, 1] of t^l * p(t).
inline double polynomial_moment(const RealPoly& p, int l) {
  double acc = 0.0;
  for (int k = 0; k <= p.degree(); ++k)
    if ((k + l) % 2 == 0) acc += p[k] * 2.0 / double(k + l + 1);
  return acc;
}

/// Target value of the l-th moment of an order-(L, j) kernel.
inline double moment_target(int j, int l) {
  return l == j ? (j % 2 == 0 ? 1.0 : -1.0) * std::tgamma(j + 1.0) : 0.0;
}

/// Polynomial kernel K_j on [-1, 1] with
///   int t^l K_j(t) dt = 0 for l in {0..L-1} \ {j}, and (-1)^j j! for l = j.
/// Zero outside [-1, 1].
class DerivKernel {
 public:
  DerivKernel(int L, int j, RealPoly coeffs) : L_(L), j_(j), poly_(std::move(coeffs)) {
    if (j < 0 || j >= L) throw InvalidKernel("kernel order: need 0 <= j < L");
    for (int l = 0; l < L; ++l) {
      const double err = std::abs(polynomial_moment(poly_, l) - moment_target(j, l));
      if (err > kMomentTolerance * std::max(1.0, std::abs(moment_target(j, l))))
        throw InvalidKernel("kernel violates moment condition l = " + std::to_string(l) + " (error " +
                            std::to_string(err) + ")");
    }
    l2_ = polynomial_moment(poly_ * poly_, 0);
    std::vector<double> prim(static_cast<std::size_t>(poly_.degree()) + 2, 0.0);
    for (int k = 0; k <= poly_.degree(); ++k) prim[static_cast<std::size_t>(k) + 1] = poly_[k] / double(k + 1);
    primitive_ = RealPoly(std::move(prim));
  }

  int L() const { return L_; }
  int j() const { return j_; }
  const RealPoly& coeffs() const { return poly_; }
  /// Cached integral of K_j^2 over [-1, 1].
  double l2norm_sq() const { return l2_; }

  double operator()(double t) const { return (t < -1.0 || t > 1.0) ? 0.0 : poly_(t); }

  /// Exact integral of K over [a, b] (zero outside the support).
  double integral(double a, double b) const {
    a = std::max(a, -1.0);
    b = std::min(b, 1.0);
    return a < b ? primitive_(b) - primitive_(a) : 0.0;
  }

 private:
  int L_;
  int j_;
  RealPoly poly_;
  RealPoly primitive_;
  double l2_ = 0.0;
};

/// Legendre polynomials P_0..P_{count-1} in the monomial basis.
inline std::vector<RealPoly> legendre_polynomials(int count) {
  std::vector<RealPoly> p;
  if (count <= 0) return p;
  p.push_back(RealPoly{1.0});
  if (count > 1) p.push_back(RealPoly{0.0, 1.0});
  const RealPoly t{0.0, 1.0};
  for (int k = 1; k + 1 < count; ++k)
    p.push_back((t * p[static_cast<std::size_t>(k)] * double(2 * k + 1) - p[static_cast<std::size_t>(k - 1)] * double(k)) *
                (1.0 / double(k + 1)));
  return p;
}

/// Minimal-degree (<= L-1) kernel of order (L, j).
///
/// In the Legendre basis the moment system is triangular with an explicit
/// inverse: writing K = sum_k b_k P_k, orthogonality gives
/// b_k = (2k+1)/2 * int P_k K = (2k+1)/2 * (-1)^j j! [t^j]P_k.
inline DerivKernel build_kernel(int L, int j) {
  if (j < 0 || j >= L) throw InvalidKernel("build_kernel: need 0 <= j < L");
  const std::vector<RealPoly> legendre = legendre_polynomials(L);
  RealPoly k;
  const double target = moment_target(j, j);
  for (int n = 0; n < L; ++n) {
    const RealPoly& pn = legendre[static_cast<std::size_t>(n)];
    const double b = 0.5 * double(2 * n + 1) * target * pn[j];
    k = k + pn * b;
  }
  if (k.l1() > 1e12) throw SingularMomentSystem("build_kernel: moment system too ill-conditioned");
  return DerivKernel(L, j, k);
}

inline double kernel_moment(const DerivKernel& K, int l) {
  if (l < 0) throw InvalidKernel("kernel_moment: l must be >= 0");
  return polynomial_moment(K.coeffs(), l);
}

inline double kernel_l2_norm_sq(const DerivKernel& K) { return K.l2norm_sq(); }

/// Kernels K_0..K_r of a common order L.
inline std::vector<DerivKernel> build_kernel_family(int L, int r) {
  if (L <= r) throw InvalidKernel("kernel family: need L > r");
  std::vector<DerivKernel> out;
  for (int j = 0; j <= r; ++j) out.push_back(build_kernel(L, j));
  return out;
}

struct MomentCheckRow {
  int L = 0;
  int j = 0;
  int l = 0;
  double moment = 0.0;
  double target = 0.0;
  double abs_error = 0.0;
};

/// Every moment condition of every kernel with L <= l_max.
inline std::vector<MomentCheckRow> moment_conformance(int l_max) {
  std::vector<MomentCheckRow> rows;
  for (int L = 1; L <= l_max; ++L)
    for (int j = 0; j < L; ++j) {
      const DerivKernel K = build_kernel(L, j);
      for (int l = 0; l < L; ++l) {
        const double m = kernel_moment(K, l);
        const double target = moment_target(j, l);
        rows.push_back({L, j, l, m, target, std::abs(m - target)});
      }
    }
  return rows;
}

}  // namespace lapdecon
