#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lapdecon/errors.hpp"

namespace lapdecon {

/// Equispaced sampling design t_i = i*T/n, i = 1..n, with t_0 = 0.
///
/// Functions sampled "on the evaluation grid" carry n + 1 values for
/// t_0, ..., t_n; observation vectors carry n values for t_1, ..., t_n.
struct ExperimentDesign {
  int n = 0;
  double horizon = 1.0;
  /// Grid-regularity constant: max |t_i - t_{i-1}| <= mu * T / n.
  double mu = 1.0;

  ExperimentDesign() = default;
  ExperimentDesign(int n_, double horizon_, double mu_ = 1.0) : n(n_), horizon(horizon_), mu(mu_) {
    if (n < 1) throw ConfigError("design: n must be >= 1");
    if (!(horizon > 0.0)) throw ConfigError("design: horizon must be positive");
    if (!(mu >= 1.0)) throw ConfigError("design: mu must be >= 1");
  }

  double step() const { return horizon / n; }
  double time(int i) const { return i * horizon / n; }
  int eval_size() const { return n + 1; }

  std::vector<double> eval_grid() const {
    std::vector<double> t(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) t[static_cast<std::size_t>(i)] = time(i);
    return t;
  }

  /// T^2 / n^alpha; the asymptotic regime needs this small.
  double noise_ratio(double alpha) const { return horizon * horizon / std::pow(double(n), alpha); }

  /// Non-fatal diagnostics about the asymptotic regime.
  std::vector<std::string> warnings(double alpha) const {
    std::vector<std::string> out;
    const double ratio = noise_ratio(alpha);
    if (ratio >= 0.1)
      out.push_back("T^2/n^alpha = " + std::to_string(ratio) + " is not small; asymptotic rates may not be visible");
    return out;
  }
};

inline bool same_grid(const ExperimentDesign& a, const ExperimentDesign& b) {
  return a.n == b.n && a.horizon == b.horizon;
}

}  // namespace lapdecon
