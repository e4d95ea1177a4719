#pragma once

// Convolution kernels with rational Laplace transforms and the explicit
// inversion of the Volterra equation q = g * f they induce.

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "lapdecon/design.hpp"
#include "lapdecon/errors.hpp"
#include "lapdecon/exp_poly.hpp"
#include "lapdecon/numerics.hpp"
#include "lapdecon/polynomial.hpp"

namespace lapdecon {

/// Roots must satisfy Re < -kHalfPlaneMargin to count as strictly in the
/// open left half-plane.
inline constexpr double kHalfPlaneMargin = 1e-9;

/// First nonvanishing derivative order r of g at 0 and its value B_r = g^{(r-1)}(0).
struct KernelOrder {
  int r = 0;
  double b_r = 0.0;
};

/// Validates numer(s)/denom(s) as a convolution kernel transform and returns
/// (r, B_r). Throws DegenerateKernel, UnstableKernel or NonnegativeRealPartZero.
KernelOrder validate_kernel(const RealPoly& numer, const RealPoly& denom);

/// g with transform P(s)/Q(s); construction validates.
class RationalLaplaceKernel {
 public:
  RationalLaplaceKernel(std::vector<double> numer, std::vector<double> denom)
      : numer_(std::move(numer)), denom_(std::move(denom)) {
    const KernelOrder order = validate_kernel(numer_, denom_);
    r_ = order.r;
    b_r_ = order.b_r;
    zeros_ = numer_.degree() > 0 ? find_roots(numer_) : std::vector<Root>{};
    poles_ = find_roots(denom_);
    time_ = ExpPoly::from_pole_terms(partial_fraction_terms(numer_.cast<Complex>(), denom_.lead(), poles_));
  }

  const RealPoly& numer() const { return numer_; }
  const RealPoly& denom() const { return denom_; }
  int r() const { return r_; }
  double b_r() const { return b_r_; }
  /// Zeros of the transform (roots of P).
  const std::vector<Root>& zeros() const { return zeros_; }
  /// Poles of the transform (roots of Q).
  const std::vector<Root>& poles() const { return poles_; }
  /// g(t) in closed form.
  const ExpPoly& time_domain() const { return time_; }

  Complex transform(Complex s) const { return numer_(s) / denom_(s); }

 private:
  RealPoly numer_;
  RealPoly denom_;
  int r_ = 0;
  double b_r_ = 0.0;
  std::vector<Root> zeros_;
  std::vector<Root> poles_;
  ExpPoly time_;
};

inline KernelOrder validate_kernel(const RealPoly& numer, const RealPoly& denom) {
  if (numer.is_zero() || denom.is_zero()) throw DegenerateKernel("kernel: numerator and denominator must be nonzero");
  if (denom.degree() <= numer.degree())
    throw DegenerateKernel("kernel: deg Q must exceed deg P (got deg P = " + std::to_string(numer.degree()) +
                           ", deg Q = " + std::to_string(denom.degree()) + ")");
  const std::vector<Root> poles = find_roots(denom);
  for (const auto& p : poles)
    if (!(p.value.real() < -kHalfPlaneMargin))
      throw UnstableKernel("kernel: denominator root with nonnegative real part (" + std::to_string(p.value.real()) +
                           ")");
  const std::vector<Root> zeros = numer.degree() > 0 ? find_roots(numer) : std::vector<Root>{};
  for (const auto& z : zeros)
    if (!(z.value.real() < -kHalfPlaneMargin))
      throw NonnegativeRealPartZero("kernel: transform zero with nonnegative real part (" +
                                    std::to_string(z.value.real()) + ")");
  for (const auto& z : zeros)
    for (const auto& p : poles)
      if (std::abs(z.value - p.value) <= 1e-7 * std::max(1.0, std::abs(p.value)))
        throw DegenerateKernel("kernel: numerator and denominator share a root; reduce the transform first");

  KernelOrder order{denom.degree() - numer.degree(), numer.lead() / denom.lead()};

  // Time-domain confirmation: g^{(j)}(0) = 0 for j < r-1 and g^{(r-1)}(0) = B_r.
  const ExpPoly g = ExpPoly::from_pole_terms(partial_fraction_terms(numer.cast<Complex>(), denom.lead(), poles));
  const double scale = std::max(1.0, std::abs(order.b_r));
  for (int j = 0; j < order.r; ++j) {
    const double value = g.derivative(j)(0.0);
    const double expected = j == order.r - 1 ? order.b_r : 0.0;
    if (std::abs(value - expected) > 1e-7 * scale)
      throw DegenerateKernel("kernel: time-domain derivative g^(" + std::to_string(j) + ")(0) = " +
                             std::to_string(value) + " disagrees with the transform (expected " +
                             std::to_string(expected) + ")");
  }
  return order;
}

inline double g_time_eval(const RationalLaplaceKernel& g, double t) { return g.time_domain()(t); }

/// Proper rational function numer(s)/denom(s).
struct RationalFunction {
  RealPoly numer;
  RealPoly denom;
  Complex operator()(Complex s) const { return numer(s) / denom(s); }
};

/// phi~(s) = 1 - B_r Q(s) / (s^r P(s)), as (s^r P - B_r Q) / (s^r P).
inline RationalFunction phi_tilde(const RationalLaplaceKernel& g) {
  const RealPoly sr = RealPoly::monomial(g.r());
  const RealPoly den = sr * g.numer();
  const RealPoly diff = den - g.denom() * g.b_r();
  // The leading terms cancel identically; drop the rounding residue.
  std::vector<double> c = diff.coeffs();
  c.resize(static_cast<std::size_t>(std::min<int>(den.degree(), static_cast<int>(c.size()))));
  return {RealPoly(std::move(c)), den};
}

/// Residue coefficients of phi~: a0[j] multiplies 1/s^(j+1); each exp term
/// holds a zero S_l of g~, its multiplicity and a_{l,0..multiplicity-1}.
struct InversionCoefficients {
  std::vector<double> a0;
  std::vector<PoleTerm> exp_terms;

  /// Direct evaluation of the expansion at s.
  Complex expansion(Complex s) const {
    Complex acc(0.0);
    Complex pw = 1.0 / s;
    for (double a : a0) {
      acc += a * pw;
      pw /= s;
    }
    return acc + eval_partial_fractions(exp_terms, s);
  }
};

inline InversionCoefficients partial_fractions(const RationalLaplaceKernel& g) {
  const RationalFunction phi = phi_tilde(g);
  std::vector<Root> poles{{Complex(0.0), g.r()}};
  poles.insert(poles.end(), g.zeros().begin(), g.zeros().end());
  std::vector<PoleTerm> terms = partial_fraction_terms(phi.numer.cast<Complex>(), phi.denom.lead(), poles);
  InversionCoefficients out;
  for (const auto& c : terms.front().coeffs) out.a0.push_back(c.real());
  out.exp_terms.assign(terms.begin() + 1, terms.end());
  return out;
}

/// phi_1 as a closed-form exponential polynomial.
inline ExpPoly phi1_function(const InversionCoefficients& coeffs) { return ExpPoly::from_pole_terms(coeffs.exp_terms); }

inline double phi1_eval(const InversionCoefficients& coeffs, double x) {
  Complex acc(0.0);
  for (const auto& term : coeffs.exp_terms) {
    double factorial = 1.0;
    double xpow = 1.0;
    const Complex e = std::exp(term.pole * x);
    for (std::size_t j = 0; j < term.coeffs.size(); ++j) {
      if (j > 0) {
        factorial *= double(j);
        xpow *= x;
      }
      acc += term.coeffs[j] * xpow * e / factorial;
    }
  }
  return acc.real();
}

inline constexpr int kDefaultRefinement = 8;

/// q(t_i) = int_0^{t_i} g(t_i - x) f(x) dx on the evaluation grid t_0..t_n by
/// composite trapezoid on a sub-grid refined by `refinement`.
inline std::vector<double> forward_convolve(const RationalLaplaceKernel& g, const std::function<double(double)>& f,
                                            const ExperimentDesign& design, int refinement = kDefaultRefinement) {
  if (refinement < 1) throw ConfigError("forward_convolve: refinement must be >= 1");
  const std::size_t fine = static_cast<std::size_t>(design.n) * static_cast<std::size_t>(refinement) + 1;
  const double h = design.step() / refinement;
  std::vector<double> gs(fine), fs(fine);
  for (std::size_t k = 0; k < fine; ++k) {
    gs[k] = g.time_domain()(double(k) * h);
    fs[k] = f(double(k) * h);
  }
  const std::vector<double> conv = trapezoid_causal_convolution(gs, fs, h);
  std::vector<double> q(static_cast<std::size_t>(design.n) + 1);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = conv[i * static_cast<std::size_t>(refinement)];
  return q;
}

/// Same, for f given only by its samples on the evaluation grid (no refinement).
inline std::vector<double> forward_convolve(const RationalLaplaceKernel& g, std::span<const double> f_vals,
                                            const ExperimentDesign& design) {
  if (static_cast<int>(f_vals.size()) != design.eval_size())
    throw GridMismatch("forward_convolve: f must be sampled on t_0..t_n");
  std::vector<double> gs(f_vals.size());
  for (std::size_t k = 0; k < gs.size(); ++k) gs[k] = g.time_domain()(design.time(static_cast<int>(k)));
  return trapezoid_causal_convolution(gs, f_vals, design.step());
}

/// Applies the inversion formula
///   f = (q^{(r)} - sum_j a_{0,r-j-1} q^{(j)} - q^{(r)} * phi_1) / B_r
/// to exact derivative callables q_derivs[0..r]; the convolution term uses
/// composite trapezoid with step (T/n)/refinement. Test oracle.
inline std::vector<double> reconstruct_exact(const RationalLaplaceKernel& g,
                                             const std::vector<std::function<double(double)>>& q_derivs,
                                             const ExperimentDesign& design, int refinement = kDefaultRefinement) {
  const int r = g.r();
  if (static_cast<int>(q_derivs.size()) != r + 1)
    throw ConfigError("reconstruct_exact: need derivatives q^(0..r)");
  const InversionCoefficients coeffs = partial_fractions(g);
  const std::vector<double> grid = design.eval_grid();
  std::vector<double> conv(grid.size(), 0.0);
  if (!coeffs.exp_terms.empty()) {
    const std::size_t fine = static_cast<std::size_t>(design.n) * static_cast<std::size_t>(refinement) + 1;
    const double h = design.step() / refinement;
    std::vector<double> qr(fine), phi(fine);
    for (std::size_t k = 0; k < fine; ++k) {
      qr[k] = q_derivs[static_cast<std::size_t>(r)](double(k) * h);
      phi[k] = phi1_eval(coeffs, double(k) * h);
    }
    const std::vector<double> c = trapezoid_causal_convolution(qr, phi, h);
    for (std::size_t i = 0; i < grid.size(); ++i) conv[i] = c[i * static_cast<std::size_t>(refinement)];
  }
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    double v = q_derivs[static_cast<std::size_t>(r)](t);
    for (int j = 0; j < r; ++j) v -= coeffs.a0[static_cast<std::size_t>(r - j - 1)] * q_derivs[static_cast<std::size_t>(j)](t);
    f[i] = (v - conv[i]) / g.b_r();
  }
  return f;
}

}  // namespace lapdecon
