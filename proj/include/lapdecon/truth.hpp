#pragma once

// Test functions with known smoothness and the exact convolutions q = g * f
// they produce under a rational kernel.

#include <cmath>
#include <string>
#include <vector>

#include "lapdecon/errors.hpp"
#include "lapdecon/exp_poly.hpp"
#include "lapdecon/laplace_kernel.hpp"

namespace lapdecon {

enum class TruthKind { Zero, Constant, Smooth, Kink };

/// A catalog test function.
///   ZERO     f = 0
///   CONST    f = 1
///   SMOOTH   f(t) = t^2 e^{-t}
///   KINK_m   degree-m B-spline on [T/4, 3T/4] with equally spaced knots,
///            scaled to peak 1: m-1 continuous derivatives, jump in the m-th.
struct TruthSpec {
  TruthKind kind = TruthKind::Smooth;
  /// Nominal Sobolev index.
  int m = 1;
  ExpPoly f;
  std::string name;

  double operator()(double t) const { return f(t); }
};

inline double binomial(int n, int k) { return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0)); }

/// Cardinal B-spline of degree m with knots 0, 1, ..., m+1.
inline double cardinal_bspline(int m, double x) {
  double acc = 0.0;
  for (int i = 0; i <= m + 1; ++i) {
    const double u = x - i;
    if (u > 0.0) acc += ((i % 2 == 0) ? 1.0 : -1.0) * binomial(m + 1, i) * std::pow(u, m);
  }
  return acc / std::tgamma(m + 1.0);
}

inline TruthSpec make_truth(const std::string& name, double horizon, int smooth_m = 3) {
  TruthSpec t;
  t.name = name;
  if (name == "ZERO") {
    t.kind = TruthKind::Zero;
    t.m = smooth_m;
    return t;
  }
  if (name == "CONST") {
    t.kind = TruthKind::Constant;
    t.m = smooth_m;
    t.f = ExpPoly({{Complex(1.0), 0, Complex(0.0), 0.0}});
    return t;
  }
  if (name == "SMOOTH") {
    t.kind = TruthKind::Smooth;
    t.m = smooth_m;
    t.f = ExpPoly({{Complex(2.0), 2, Complex(-1.0), 0.0}});
    return t;
  }
  if (name.rfind("KINK_", 0) == 0) {
    int m = 0;
    try {
      m = std::stoi(name.substr(5));
    } catch (const std::exception&) {
      throw ConfigError("truth: cannot parse smoothness in '" + name + "'");
    }
    if (m < 1 || m > 8) throw ConfigError("truth: KINK_m needs 1 <= m <= 8");
    t.kind = TruthKind::Kink;
    t.m = m;
    const double start = 0.25 * horizon;
    const double width = 0.5 * horizon / double(m + 1);
    const double amplitude = 1.0 / cardinal_bspline(m, 0.5 * (m + 1));
    std::vector<ExpPolyTerm> terms;
    for (int i = 0; i <= m + 1; ++i) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      // (x - i)_+^m / m! with x = (t - start)/width equals (t - tau)_+^m / (m! width^m).
      const double c = amplitude * sign * binomial(m + 1, i) / std::pow(width, m);
      terms.push_back({Complex(c), m, Complex(0.0), start + i * width});
    }
    t.f = ExpPoly(std::move(terms));
    return t;
  }
  throw ConfigError("truth: unknown test function '" + name + "' (expected ZERO, CONST, SMOOTH or KINK_<m>)");
}

/// q = g * f in closed form: each term of f has transform
/// c e^{-tau s} / (s - p)^{k+1}, multiplied by P/Q and inverted by partial
/// fractions.
inline ExpPoly exact_convolution(const RationalLaplaceKernel& g, const ExpPoly& f) {
  ExpPoly q;
  for (const auto& term : f.terms()) {
    std::vector<Root> poles = g.poles();
    bool merged = false;
    for (auto& p : poles)
      if (std::abs(p.value - term.rate) <= 1e-12 * std::max(1.0, std::abs(p.value))) {
        p.multiplicity += term.power + 1;
        merged = true;
      }
    if (!merged) poles.push_back({term.rate, term.power + 1});
    const ComplexPoly numer = g.numer().cast<Complex>() * ComplexPoly{term.coeff};
    q = q + ExpPoly::from_pole_terms(partial_fraction_terms(numer, g.denom().lead(), poles), term.shift);
  }
  return q;
}

inline std::vector<double> sample_on_grid(const ExpPoly& fn, const ExperimentDesign& design) {
  std::vector<double> out(static_cast<std::size_t>(design.eval_size()));
  for (int i = 0; i <= design.n; ++i) out[static_cast<std::size_t>(i)] = fn(design.time(i));
  return out;
}

}  // namespace lapdecon
