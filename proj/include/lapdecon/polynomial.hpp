#pragma once

// Dense univariate polynomials, root finding with multiplicity detection, and
// partial-fraction expansion of proper rational functions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lapdecon/errors.hpp"

namespace lapdecon {

using Complex = std::complex<double>;

/// Polynomial with coefficients stored in ascending degree order:
/// coeffs[k] multiplies s^k. Trailing zeros are trimmed on construction so
/// that the last coefficient is the leading one (the zero polynomial is {}).
template <class T>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<T> coeffs) : c_(std::move(coeffs)) { trim(); }
  Polynomial(std::initializer_list<T> coeffs) : c_(coeffs) { trim(); }

  static Polynomial monomial(int degree, T value = T(1)) {
    std::vector<T> c(static_cast<std::size_t>(degree) + 1, T(0));
    c.back() = value;
    return Polynomial(std::move(c));
  }

  /// Degree; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  T lead() const { return c_.empty() ? T(0) : c_.back(); }
  const std::vector<T>& coeffs() const { return c_; }
  T operator[](int k) const {
    return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(k)] : T(0);
  }

  template <class U>
  auto operator()(const U& s) const {
    using R = decltype(T(0) * s);
    R acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + R(*it);
    return acc;
  }

  Polynomial derivative(int order = 1) const {
    Polynomial d = *this;
    for (int o = 0; o < order; ++o) {
      if (d.c_.size() <= 1) return Polynomial();
      std::vector<T> out(d.c_.size() - 1);
      for (std::size_t k = 1; k < d.c_.size(); ++k) out[k - 1] = d.c_[k] * T(static_cast<double>(k));
      d = Polynomial(std::move(out));
    }
    return d;
  }

  /// Sum of absolute values of the coefficients.
  double l1() const {
    double s = 0.0;
    for (const auto& v : c_) s += std::abs(v);
    return s;
  }

  /// Coefficients of the same polynomial written in powers of (s - center).
  template <class U>
  std::vector<U> taylor_shift(const U& center) const {
    std::vector<U> b(c_.begin(), c_.end());
    const auto n = b.size();
    // Repeated synthetic division by (s - center).
    for (std::size_t k = 0; k + 1 < n; ++k)
      for (std::size_t i = n - 1; i > k; --i) b[i - 1] += center * b[i];
    return b;
  }

  template <class U>
  Polynomial<U> cast() const {
    std::vector<U> out(c_.begin(), c_.end());
    return Polynomial<U>(std::move(out));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<T> out(std::max(a.c_.size(), b.c_.size()), T(0));
    for (std::size_t k = 0; k < a.c_.size(); ++k) out[k] += a.c_[k];
    for (std::size_t k = 0; k < b.c_.size(); ++k) out[k] += b.c_[k];
    return Polynomial(std::move(out));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + b * T(-1); }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return Polynomial();
    std::vector<T> out(a.c_.size() + b.c_.size() - 1, T(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(out));
  }
  friend Polynomial operator*(const Polynomial& a, T scale) {
    std::vector<T> out = a.c_;
    for (auto& v : out) v *= scale;
    return Polynomial(std::move(out));
  }
  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  void trim() {
    while (!c_.empty() && c_.back() == T(0)) c_.pop_back();
  }
  std::vector<T> c_;
};

using RealPoly = Polynomial<double>;
using ComplexPoly = Polynomial<Complex>;

/// (s - root)^multiplicity, expanded.
inline ComplexPoly linear_factor_power(Complex root, int multiplicity) {
  ComplexPoly out{Complex(1.0)};
  const ComplexPoly factor{-root, Complex(1.0)};
  for (int k = 0; k < multiplicity; ++k) out = out * factor;
  return out;
}

/// A root together with its multiplicity.
struct Root {
  Complex value;
  int multiplicity = 1;
};

/// Cluster radius (relative) below which k nearby eigenvalues are read as a
/// single root of multiplicity k. A k-fold root perturbed at the level of
/// machine precision spreads as eps^(1/k), so the bound grows with k.
inline double multiplicity_merge_tolerance(int cluster_size) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::max(1e-7, std::pow(100.0 * eps, 1.0 / cluster_size));
}

namespace detail {

inline Complex newton_step(const RealPoly& p, const RealPoly& dp, Complex z) {
  const Complex d = dp(z);
  if (std::abs(d) == 0.0) return z;
  const Complex candidate = z - p(z) / d;
  return std::abs(p(candidate)) <= std::abs(p(z)) ? candidate : z;
}

// Makes the root list exactly closed under conjugation: near-real roots are
// snapped to the real axis and complex roots are paired with exact conjugates.
inline void symmetrize_conjugates(std::vector<Root>& roots) {
  std::vector<Root> out;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    Root r = roots[i];
    const double scale = std::max(1.0, std::abs(r.value));
    if (std::abs(r.value.imag()) <= 1e-10 * scale) {
      out.push_back({Complex(r.value.real(), 0.0), r.multiplicity});
      continue;
    }
    // find the conjugate partner with the same multiplicity
    std::size_t best = roots.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j] || roots[j].multiplicity != r.multiplicity) continue;
      const double d = std::abs(roots[j].value - std::conj(r.value));
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    if (best == roots.size()) {
      out.push_back(r);
      continue;
    }
    used[best] = true;
    const Complex avg = 0.5 * (r.value + std::conj(roots[best].value));
    const Complex upper = avg.imag() > 0 ? avg : std::conj(avg);
    out.push_back({upper, r.multiplicity});
    out.push_back({std::conj(upper), r.multiplicity});
  }
  roots = std::move(out);
}

}  // namespace detail

/// Roots of a real polynomial via eigenvalues of the companion matrix, with
/// one Newton polish step per simple root. Clusters of eigenvalues whose
/// radius is below multiplicity_merge_tolerance(k) are merged into a root of
/// multiplicity k, whose location is refined by Newton iteration on the
/// (k-1)-th derivative.
inline std::vector<Root> find_roots(const RealPoly& p) {
  const int d = p.degree();
  if (d < 0) throw Error("find_roots: zero polynomial");
  if (d == 0) return {};
  std::vector<Complex> eig;
  if (d == 1) {
    eig.push_back(Complex(-p[0] / p[1], 0.0));
  } else {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
    for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) companion(i, d - 1) = -p[i] / p[d];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success) throw Error("find_roots: eigenvalue solver failed");
    for (int i = 0; i < d; ++i) eig.push_back(solver.eigenvalues()(i));
  }
  const RealPoly dp = p.derivative();
  for (auto& z : eig) z = detail::newton_step(p, dp, z);

  // Loose single-link clustering, then decide per cluster whether it is one
  // multiple root.
  const std::size_t m = eig.size();
  std::vector<int> label(m, -1);
  int n_clusters = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (label[i] >= 0) continue;
    label[i] = n_clusters;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < m; ++b) {
        if (label[b] >= 0) continue;
        const double scale = std::max({1.0, std::abs(eig[a]), std::abs(eig[b])});
        if (std::abs(eig[a] - eig[b]) <= 1e-2 * scale) {
          label[b] = n_clusters;
          stack.push_back(b);
        }
      }
    }
    ++n_clusters;
  }

  std::vector<Root> roots;
  for (int c = 0; c < n_clusters; ++c) {
    std::vector<Complex> members;
    for (std::size_t i = 0; i < m; ++i)
      if (label[i] == c) members.push_back(eig[i]);
    const int k = static_cast<int>(members.size());
    if (k == 1) {
      roots.push_back({members[0], 1});
      continue;
    }
    const Complex centroid = std::accumulate(members.begin(), members.end(), Complex(0.0)) / double(k);
    double radius = 0.0;
    for (const auto& z : members) radius = std::max(radius, std::abs(z - centroid));
    if (radius <= multiplicity_merge_tolerance(k) * std::max(1.0, std::abs(centroid))) {
      const RealPoly pk = p.derivative(k - 1);
      const RealPoly dpk = pk.derivative();
      Complex z = centroid;
      for (int it = 0; it < 3; ++it) z = detail::newton_step(pk, dpk, z);
      roots.push_back({z, k});
    } else {
      for (const auto& z : members) roots.push_back({z, 1});
    }
  }
  detail::symmetrize_conjugates(roots);
  return roots;
}

/// Smallest pairwise distance between distinct roots, relative to their scale.
inline double min_relative_separation(const std::vector<Root>& roots) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      const double scale = std::max({1.0, std::abs(roots[i].value), std::abs(roots[j].value)});
      best = std::min(best, std::abs(roots[i].value - roots[j].value) / scale);
    }
  return best;
}

/// Partial-fraction data for one pole: coeffs[j] multiplies 1/(s - pole)^(j+1).
struct PoleTerm {
  Complex pole;
  int multiplicity = 1;
  std::vector<Complex> coeffs;
};

/// Separation below which distinct poles make residue extraction unreliable.
inline constexpr double kIllConditionedSeparation = 1e-5;

/// Expands numer(s) / (lead * prod_k (s - p_k)^{m_k}) into partial fractions.
/// Requires deg numer < sum m_k. Residues come from the Taylor expansion of
/// (s - p)^m * F(s) about p: both polynomial factors are re-centred at p by
/// synthetic division and divided as power series.
inline std::vector<PoleTerm> partial_fraction_terms(const ComplexPoly& numer, Complex lead,
                                                    const std::vector<Root>& poles) {
  int total = 0;
  for (const auto& r : poles) total += r.multiplicity;
  if (numer.degree() >= total) throw Error("partial_fraction_terms: rational function is not proper");
  if (poles.size() > 1 && min_relative_separation(poles) < kIllConditionedSeparation)
    throw IllConditionedRoots("partial_fraction_terms: distinct poles closer than " +
                              std::to_string(kIllConditionedSeparation) + " (relative)");

  std::vector<PoleTerm> out;
  out.reserve(poles.size());
  for (std::size_t l = 0; l < poles.size(); ++l) {
    const Complex p = poles[l].value;
    const int m = poles[l].multiplicity;
    ComplexPoly rest{lead};
    for (std::size_t k = 0; k < poles.size(); ++k)
      if (k != l) rest = rest * linear_factor_power(poles[k].value, poles[k].multiplicity);
    std::vector<Complex> nu = numer.taylor_shift(p);
    std::vector<Complex> de = rest.taylor_shift(p);
    nu.resize(static_cast<std::size_t>(std::max<int>(m, static_cast<int>(nu.size()))), Complex(0.0));
    de.resize(static_cast<std::size_t>(std::max<int>(m, static_cast<int>(de.size()))), Complex(0.0));
    std::vector<Complex> h(static_cast<std::size_t>(m), Complex(0.0));
    for (int k = 0; k < m; ++k) {
      Complex acc = nu[static_cast<std::size_t>(k)];
      for (int i = 1; i <= k; ++i) acc -= de[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(k - i)];
      h[static_cast<std::size_t>(k)] = acc / de[0];
    }
    PoleTerm term{p, m, std::vector<Complex>(static_cast<std::size_t>(m))};
    for (int j = 0; j < m; ++j) term.coeffs[static_cast<std::size_t>(j)] = h[static_cast<std::size_t>(m - 1 - j)];
    out.push_back(std::move(term));
  }

  // Conjugate poles get exactly conjugate coefficients.
  for (std::size_t l = 0; l < out.size(); ++l) {
    if (out[l].pole.imag() <= 0.0) continue;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (out[k].pole == std::conj(out[l].pole) && out[k].multiplicity == out[l].multiplicity) {
        for (std::size_t j = 0; j < out[l].coeffs.size(); ++j) out[k].coeffs[j] = std::conj(out[l].coeffs[j]);
      }
    }
  }
  return out;
}

/// Evaluates sum_l sum_j coeffs_{l,j} / (s - p_l)^(j+1).
inline Complex eval_partial_fractions(const std::vector<PoleTerm>& terms, Complex s) {
  Complex acc(0.0);
  for (const auto& t : terms) {
    const Complex inv = 1.0 / (s - t.pole);
    Complex pw = inv;
    for (const auto& c : t.coeffs) {
      acc += c * pw;
      pw *= inv;
    }
  }
  return acc;
}

}  // namespace lapdecon
