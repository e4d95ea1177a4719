#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "lapdecon/polynomial.hpp"

namespace lapdecon {

/// c * (t - shift)^power * exp(rate * (t - shift)) / power!  for t >= shift, else 0.
struct ExpPolyTerm {
  Complex coeff;
  int power = 0;
  Complex rate;
  double shift = 0.0;
};

/// Finite sum of shifted polynomial-times-exponential terms. This is the
/// closed form of the inverse Laplace transform of any proper rational
/// function (times e^{-shift*s}), so kernels with rational transforms, their
/// convolutions with spline or exponential inputs, and all their derivatives
/// are represented exactly.
class ExpPoly {
 public:
  ExpPoly() = default;
  explicit ExpPoly(std::vector<ExpPolyTerm> terms) : terms_(std::move(terms)) {}

  /// Inverse Laplace transform of sum coeffs_{l,j}/(s - p_l)^(j+1), delayed by shift.
  static ExpPoly from_pole_terms(const std::vector<PoleTerm>& poles, double shift = 0.0) {
    std::vector<ExpPolyTerm> terms;
    for (const auto& p : poles)
      for (std::size_t j = 0; j < p.coeffs.size(); ++j)
        if (p.coeffs[j] != Complex(0.0)) terms.push_back({p.coeffs[j], static_cast<int>(j), p.pole, shift});
    return ExpPoly(std::move(terms));
  }

  const std::vector<ExpPolyTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Real part of the sum; conjugate-paired terms make it real.
  double operator()(double t) const {
    Complex acc(0.0);
    for (const auto& term : terms_) {
      const double u = t - term.shift;
      if (u < 0.0) continue;
      acc += term.coeff * std::pow(u, term.power) * std::exp(term.rate * u) / std::tgamma(term.power + 1.0);
    }
    return acc.real();
  }

  /// Term-wise derivative. Delta contributions at the shift points are
  /// dropped, which is exact whenever the function is continuous there.
  ExpPoly derivative(int order = 1) const {
    ExpPoly d = *this;
    for (int o = 0; o < order; ++o) {
      std::vector<ExpPolyTerm> out;
      for (const auto& term : d.terms_) {
        if (term.power >= 1) out.push_back({term.coeff, term.power - 1, term.rate, term.shift});
        if (term.rate != Complex(0.0)) out.push_back({term.coeff * term.rate, term.power, term.rate, term.shift});
      }
      d.terms_ = std::move(out);
    }
    return d;
  }

  friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) {
    a.terms_.insert(a.terms_.end(), b.terms_.begin(), b.terms_.end());
    return a;
  }
  friend ExpPoly operator*(ExpPoly a, double scale) {
    for (auto& t : a.terms_) t.coeff *= scale;
    return a;
  }

 private:
  std::vector<ExpPolyTerm> terms_;
};

}  // namespace lapdecon
