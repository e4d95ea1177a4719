#pragma once

// Kernel estimation of q^{(j)}, Lepski bandwidth selection and the plug-in
// reconstruction of f.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lapdecon/deriv_kernels.hpp"
#include "lapdecon/design.hpp"
#include "lapdecon/errors.hpp"
#include "lapdecon/laplace_kernel.hpp"
#include "lapdecon/numerics.hpp"

namespace lapdecon {

struct LepskiConfig {
  /// Geometric grid ratio a > 1.
  double a = 2.0;
  /// gamma_j^2 = gamma_sq_factor * mu * ||K_j||^2; must exceed 1.
  double gamma_sq_factor = 4.0;
  /// Known noise scale and memory parameter.
  double sigma = 1.0;
  double alpha = 1.0;

  void validate() const {
    if (!(a > 1.0)) throw ConfigError("lepski: grid ratio a must exceed 1");
    if (!(gamma_sq_factor > 1.0)) throw ConfigError("lepski: gamma_j^2 must exceed mu * ||K_j||^2 (factor > 1)");
    if (!(sigma >= 0.0)) throw ConfigError("lepski: sigma must be nonnegative");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("lepski: alpha must lie in (0, 1]");
  }

  double gamma_sq(const DerivKernel& K, const ExperimentDesign& design) const {
    return gamma_sq_factor * design.mu * K.l2norm_sq();
  }
};

// ---------------------------------------------------------------------------
// Kernel estimator

inline void check_bandwidth(double lambda, const ExperimentDesign& design) {
  if (!(lambda > 0.0) || lambda > design.horizon)
    throw BandwidthOutOfRange("bandwidth " + std::to_string(lambda) + " outside (0, T]");
}

inline void check_observations(std::span<const double> y, const ExperimentDesign& design) {
  if (static_cast<int>(y.size()) != design.n)
    throw GridMismatch("observations: expected " + std::to_string(design.n) + " values, got " +
                       std::to_string(y.size()));
}

/// Weight of an observation at distance u = (t - t_i)/lambda:
/// lambda^{-j} times the integral of K_j over the node's cell
/// [u - h/(2 lambda), u + h/(2 lambda)]. This stands in for the Riemann
/// weight h K_j(u) / lambda^{j+1}; integrating the kernel across the cell
/// keeps the discretization error second order in h/lambda even when the
/// support ends fall between nodes.
inline double cell_weight(const DerivKernel& K, double u, double half_cell, double lambda) {
  return K.integral(u - half_cell, u + half_cell) / std::pow(lambda, K.j());
}

/// q^_j(t) = lambda^{-(j+1)} sum_i K_j((t - t_i)/lambda) (t_i - t_{i-1}) y(t_i)
/// at arbitrary points, with cell-integrated kernel weights (see cell_weight).
/// Only nodes whose cell meets the kernel support contribute.
inline std::vector<double> estimate_qj_at(std::span<const double> y, const ExperimentDesign& design,
                                          const DerivKernel& K, double lambda, std::span<const double> points) {
  check_observations(y, design);
  check_bandwidth(lambda, design);
  const double h = design.step();
  const double half_cell = 0.5 * h / lambda;
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double t = points[p];
    const int lo = std::max(1, static_cast<int>(std::floor((t - lambda) / h)) - 1);
    const int hi = std::min(design.n, static_cast<int>(std::ceil((t + lambda) / h)) + 1);
    double acc = 0.0;
    for (int i = lo; i <= hi; ++i)
      acc += cell_weight(K, (t - design.time(i)) / lambda, half_cell, lambda) * y[static_cast<std::size_t>(i - 1)];
    out[p] = acc;
  }
  return out;
}

/// Same estimator on the evaluation grid t_0..t_n. On the equispaced grid the
/// sum is a discrete convolution of y with the sampled weights.
inline std::vector<double> estimate_qj(std::span<const double> y, const ExperimentDesign& design,
                                       const DerivKernel& K, double lambda) {
  check_observations(y, design);
  check_bandwidth(lambda, design);
  const double h = design.step();
  const double half_cell = 0.5 * h / lambda;
  const int w = static_cast<int>(std::ceil(lambda / h + 0.5));
  std::vector<double> weights(static_cast<std::size_t>(2 * w + 1));
  for (int d = -w; d <= w; ++d) weights[static_cast<std::size_t>(d + w)] = cell_weight(K, d * h / lambda, half_cell, lambda);
  std::vector<double> padded(static_cast<std::size_t>(design.n) + 1, 0.0);
  std::copy(y.begin(), y.end(), padded.begin() + 1);
  const std::vector<double> conv = linear_convolve(padded, weights);
  std::vector<double> out(padded.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = conv[k + static_cast<std::size_t>(w)];
  return out;
}

// ---------------------------------------------------------------------------
// Norms on the evaluation grid

/// Index range [first, last] of the evaluation grid kept after excluding
/// boundary bands of width `band` at both ends.
struct Window {
  int first = 0;
  int last = 0;
};

inline Window full_window(const ExperimentDesign& design) { return {0, design.n}; }

inline Window interior_window(const ExperimentDesign& design, double band) {
  const int first = static_cast<int>(std::ceil(band / design.step() - 1e-9));
  const int last = design.n - first;
  if (first < 0 || last - first < 1)
    throw ConfigError("boundary band " + std::to_string(band) + " leaves no interior on [0, " +
                      std::to_string(design.horizon) + "]");
  return {first, last};
}

/// Trapezoid approximation of the integral of (u - v)^2 over the window.
inline double l2_diff_sq(std::span<const double> u, std::span<const double> v, const ExperimentDesign& design,
                         Window window) {
  if (u.size() != v.size() || static_cast<int>(u.size()) != design.eval_size())
    throw GridMismatch("l2_diff_sq: inputs must both be sampled on t_0..t_n");
  if (window.first < 0 || window.last > design.n || window.first > window.last)
    throw GridMismatch("l2_diff_sq: window outside the grid");
  double acc = 0.0;
  for (int i = window.first; i <= window.last; ++i) {
    const double d = u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(i)];
    const double w = (i == window.first || i == window.last) ? 0.5 : 1.0;
    acc += w * d * d;
  }
  return window.first == window.last ? 0.0 : acc * design.step();
}

inline double l2_diff_sq(std::span<const double> u, std::span<const double> v, const ExperimentDesign& design) {
  return l2_diff_sq(u, v, design, full_window(design));
}

// ---------------------------------------------------------------------------
// Bandwidths

/// c * (T^2 / n^alpha)^{1/(2(m+r)+1)}.
inline double oracle_bandwidth(int m, int r, const ExperimentDesign& design, double alpha, double c = 1.0) {
  if (m < 1) throw ConfigError("oracle_bandwidth: m must be >= 1");
  return c * std::pow(design.noise_ratio(alpha), 1.0 / (2.0 * (m + r) + 1.0));
}

/// Grid point of `grid` nearest to lambda on the log scale.
inline double snap_to_grid(double lambda, std::span<const double> grid) {
  double best = grid.front();
  for (double g : grid)
    if (std::abs(std::log(g / lambda)) < std::abs(std::log(best / lambda))) best = g;
  return best;
}

/// Lambda_j = {a^{-l} : l = 0..J_n}, J_n = floor(log_a(n^alpha / (sigma^2 T^2)) / (2j+1)),
/// in descending order. J_n is additionally capped so that the smallest
/// bandwidth spans at least one grid step (binding only for tiny sigma).
inline std::vector<double> lepski_grid(int j, const LepskiConfig& config, const ExperimentDesign& design) {
  config.validate();
  const double ratio = std::pow(double(design.n), config.alpha) /
                       (config.sigma * config.sigma * design.horizon * design.horizon);
  const double levels = std::log(ratio) / std::log(config.a) / double(2 * j + 1);
  if (!(ratio > 1.0)) throw EmptyGrid("lepski_grid: n^alpha / (sigma^2 T^2) <= 1, grid is empty");
  const double cap = std::floor(std::log(1.0 / design.step()) / std::log(config.a) + 1e-9);
  const int jn = static_cast<int>(std::min(std::floor(levels + 1e-9), std::max(cap, 0.0)));
  std::vector<double> grid;
  for (int l = 0; l <= jn; ++l) grid.push_back(std::pow(config.a, -double(l)));
  return grid;
}

/// Bandwidths below this many grid steps are skipped by the selector: the
/// Riemann sum over so few nodes no longer honours the kernel's moment
/// conditions, and the resulting discretization error would dominate every
/// comparison against it.
inline constexpr double kMinBandwidthSteps = 8.0;

/// Grid bandwidths the selector may use; keeps at least max Lambda_j.
inline std::vector<double> resolvable_grid(const std::vector<double>& grid, const ExperimentDesign& design) {
  std::vector<double> out;
  for (double l : grid)
    if (out.empty() || l >= kMinBandwidthSteps * design.step() * (1.0 - 1e-12)) out.push_back(l);
  return out;
}

/// rho^2_{lambda,j} = 4 sigma^2 T^2 / (n^alpha lambda^{2j+1}).
inline double rho_sq(double lambda, int j, const LepskiConfig& config, const ExperimentDesign& design) {
  if (!(lambda > 0.0)) throw BandwidthOutOfRange("rho_sq: bandwidth must be positive");
  return 4.0 * config.sigma * config.sigma * design.horizon * design.horizon /
         (std::pow(double(design.n), config.alpha) * std::pow(lambda, 2.0 * j + 1.0));
}

struct LepskiComparison {
  double lambda = 0.0;
  double lambda_prime = 0.0;
  double stat = 0.0;
  double threshold = 0.0;
  bool accepted = false;
};

struct LepskiSelection {
  int j = 0;
  double lambda_hat = 0.0;
  std::vector<double> grid;
  /// Every (lambda, lambda') comparison with lambda' < lambda, ordered by grid index.
  std::vector<LepskiComparison> diagnostics;
  /// q^_j at lambda_hat on the evaluation grid.
  std::vector<double> estimate;
};

/// Largest lambda in Lambda_j with ||q^_lambda - q^_lambda'||^2 <= gamma_j^2 rho^2_{lambda',j}
/// for every smaller lambda' in Lambda_j. Norms exclude boundary bands of
/// width max Lambda_j. The smallest bandwidth is admissible vacuously.
/// Grid points narrower than kMinBandwidthSteps grid steps are dropped first.
inline LepskiSelection lepski_select(std::span<const double> y, int j, const DerivKernel& K,
                                     const LepskiConfig& config, const ExperimentDesign& design) {
  if (K.j() != j) throw InvalidKernel("lepski_select: kernel derivative order does not match j");
  LepskiSelection sel;
  sel.j = j;
  sel.grid = resolvable_grid(lepski_grid(j, config, design), design);
  const Window window = interior_window(design, sel.grid.front());
  const double gamma_sq = config.gamma_sq(K, design);
  std::vector<std::vector<double>> est;
  est.reserve(sel.grid.size());
  for (double lambda : sel.grid) est.push_back(estimate_qj(y, design, K, lambda));

  std::size_t chosen = sel.grid.size() - 1;
  bool found = false;
  for (std::size_t a = 0; a < sel.grid.size(); ++a) {
    bool ok = true;
    for (std::size_t b = a + 1; b < sel.grid.size(); ++b) {
      LepskiComparison c;
      c.lambda = sel.grid[a];
      c.lambda_prime = sel.grid[b];
      c.stat = l2_diff_sq(est[a], est[b], design, window);
      c.threshold = gamma_sq * rho_sq(c.lambda_prime, j, config, design);
      c.accepted = c.stat <= c.threshold;
      ok = ok && c.accepted;
      sel.diagnostics.push_back(c);
    }
    if (ok && !found) {
      chosen = a;
      found = true;
    }
  }
  sel.lambda_hat = sel.grid[chosen];
  sel.estimate = std::move(est[chosen]);
  return sel;
}

// ---------------------------------------------------------------------------
// Plug-in reconstruction

struct EstimateResult {
  std::vector<double> f_hat;
  /// q^_j on the evaluation grid, j = 0..r.
  std::vector<std::vector<double>> q_hat;
  std::vector<double> lambda_hat;
  /// Per-j Lepski records; empty for supplied bandwidths.
  std::vector<std::vector<LepskiComparison>> diagnostics;
};

/// f^ = (q^_r - sum_j a_{0,r-j-1} q^_j - q^_r * phi_1) / B_r from already
/// estimated q^_0..q^_r on the evaluation grid.
inline std::vector<double> assemble_f(const RationalLaplaceKernel& g, const InversionCoefficients& coeffs,
                                      const std::vector<std::vector<double>>& q_hat, const ExperimentDesign& design) {
  const int r = g.r();
  const std::size_t size = static_cast<std::size_t>(design.eval_size());
  const std::vector<double>& qr = q_hat[static_cast<std::size_t>(r)];
  std::vector<double> conv(size, 0.0);
  if (!coeffs.exp_terms.empty()) {
    std::vector<double> phi(size);
    for (std::size_t k = 0; k < size; ++k) phi[k] = phi1_eval(coeffs, design.time(static_cast<int>(k)));
    conv = trapezoid_causal_convolution(qr, phi, design.step());
  }
  std::vector<double> f(size);
  for (std::size_t i = 0; i < size; ++i) {
    double v = qr[i];
    for (int j = 0; j < r; ++j) v -= coeffs.a0[static_cast<std::size_t>(r - j - 1)] * q_hat[static_cast<std::size_t>(j)][i];
    f[i] = (v - conv[i]) / g.b_r();
  }
  return f;
}

/// Estimates f from observations. Bandwidths are either supplied per j
/// (j = 0..r) or selected independently for each j by Lepski's rule.
inline EstimateResult estimate_f(std::span<const double> y, const RationalLaplaceKernel& g,
                                 const InversionCoefficients& coeffs, const std::vector<DerivKernel>& kernels,
                                 const LepskiConfig& config, const ExperimentDesign& design,
                                 const std::optional<std::vector<double>>& bandwidths = std::nullopt) {
  const int r = g.r();
  if (static_cast<int>(kernels.size()) != r + 1) throw InvalidKernel("estimate_f: need kernels K_0..K_r");
  if (bandwidths && static_cast<int>(bandwidths->size()) != r + 1)
    throw ConfigError("estimate_f: need one bandwidth per j = 0..r");
  EstimateResult res;
  for (int j = 0; j <= r; ++j) {
    const DerivKernel& K = kernels[static_cast<std::size_t>(j)];
    if (K.j() != j) throw InvalidKernel("estimate_f: kernels must be ordered by j");
    if (bandwidths) {
      const double lambda = (*bandwidths)[static_cast<std::size_t>(j)];
      res.q_hat.push_back(estimate_qj(y, design, K, lambda));
      res.lambda_hat.push_back(lambda);
      res.diagnostics.emplace_back();
    } else {
      LepskiSelection sel = lepski_select(y, j, K, config, design);
      res.q_hat.push_back(std::move(sel.estimate));
      res.lambda_hat.push_back(sel.lambda_hat);
      res.diagnostics.push_back(std::move(sel.diagnostics));
    }
  }
  res.f_hat = assemble_f(g, coeffs, res.q_hat, design);
  return res;
}

}  // namespace lapdecon
