#pragma once

// Simulation of the observation model y(t_i) = q(t_i) + sigma eps_i,
// Monte Carlo risk studies, the three-term risk decomposition, and the
// Lepski large-deviation experiment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lapdecon/deriv_kernels.hpp"
#include "lapdecon/design.hpp"
#include "lapdecon/estimator.hpp"
#include "lapdecon/laplace_kernel.hpp"
#include "lapdecon/lrd_noise.hpp"
#include "lapdecon/numerics.hpp"
#include "lapdecon/parallel.hpp"
#include "lapdecon/rng.hpp"
#include "lapdecon/truth.hpp"

namespace lapdecon {

/// Kernel, inversion coefficients, truth and derivative kernels of one
/// deconvolution problem.
struct Problem {
  RationalLaplaceKernel g;
  InversionCoefficients coeffs;
  TruthSpec truth;
  std::vector<DerivKernel> kernels;
  /// q = g * f in closed form.
  ExpPoly q_exact;

  /// L = 0 selects the default kernel order r + 2.
  Problem(RationalLaplaceKernel g_, TruthSpec truth_, int L = 0)
      : g(std::move(g_)),
        coeffs(partial_fractions(g)),
        truth(std::move(truth_)),
        kernels(build_kernel_family(L > 0 ? L : g.r() + 2, g.r())),
        q_exact(exact_convolution(g, truth.f)) {}

  int r() const { return g.r(); }
  int kernel_order() const { return kernels.front().L(); }
};

/// Everything about a problem that depends on the design but not on the noise.
struct DesignData {
  ExperimentDesign design;
  /// q by forward quadrature on t_0..t_n.
  std::vector<double> q;
  /// f on t_0..t_n.
  std::vector<double> f;
  /// Exact q^{(j)} on t_0..t_n, j = 0..r.
  std::vector<std::vector<double>> q_derivs;
};

inline DesignData prepare_design(const Problem& problem, const ExperimentDesign& design,
                                 int refinement = kDefaultRefinement) {
  DesignData d;
  d.design = design;
  d.q = forward_convolve(problem.g, [&](double t) { return problem.truth(t); }, design, refinement);
  d.f = sample_on_grid(problem.truth.f, design);
  for (int j = 0; j <= problem.r(); ++j) d.q_derivs.push_back(sample_on_grid(problem.q_exact.derivative(j), design));
  return d;
}

/// y(t_i) = q(t_i) + sigma eps_i for i = 1..n.
inline std::vector<double> observe(std::span<const double> q_grid, const NoiseSampler& sampler, std::uint64_t seed) {
  std::vector<double> y(q_grid.begin() + 1, q_grid.end());
  if (sampler.model().sigma == 0.0) return y;
  const std::vector<double> eps = sampler.sample(seed);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += eps[i];
  return y;
}

inline std::vector<double> simulate(const TruthSpec& truth, const RationalLaplaceKernel& g,
                                    const ExperimentDesign& design, const NoiseModel& noise, std::uint64_t seed,
                                    int refinement = kDefaultRefinement) {
  const std::vector<double> q = forward_convolve(g, [&](double t) { return truth(t); }, design, refinement);
  return observe(q, NoiseSampler(noise, design.n), seed);
}

// ---------------------------------------------------------------------------
// Bandwidth policies

enum class PolicyKind { Lepski, Fixed, Oracle };

struct BandwidthPolicy {
  PolicyKind kind = PolicyKind::Lepski;
  /// Per-j bandwidths for Fixed (a single value applies to every j).
  std::vector<double> fixed;
  /// Proportionality constant of the oracle bandwidth.
  double oracle_c = 1.0;

  static BandwidthPolicy lepski() { return {}; }
  static BandwidthPolicy with_bandwidths(std::vector<double> bw) { return {PolicyKind::Fixed, std::move(bw), 1.0}; }
  static BandwidthPolicy oracle(double c = 1.0) { return {PolicyKind::Oracle, {}, c}; }

  std::optional<std::vector<double>> bandwidths(const Problem& problem, const ExperimentDesign& design,
                                                double alpha) const {
    const auto count = static_cast<std::size_t>(problem.r() + 1);
    switch (kind) {
      case PolicyKind::Lepski:
        return std::nullopt;
      case PolicyKind::Fixed:
        if (fixed.size() == 1) return std::vector<double>(count, fixed.front());
        if (fixed.size() != count) throw ConfigError("policy: need one fixed bandwidth or one per j = 0..r");
        return fixed;
      case PolicyKind::Oracle:
        return std::vector<double>(count, oracle_bandwidth(problem.truth.m, problem.r(), design, alpha, oracle_c));
    }
    return std::nullopt;
  }

  /// Width of the boundary bands excluded from risk figures: the largest
  /// bandwidth in play (the Lepski grid always starts at 1).
  double boundary_band(const Problem& problem, const ExperimentDesign& design, double alpha) const {
    double band = 1.0;
    if (const auto bw = bandwidths(problem, design, alpha))
      for (double b : *bw) band = std::max(band, b);
    return band;
  }
};

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Lepski:
      return "lepski";
    case PolicyKind::Fixed:
      return "fixed";
    case PolicyKind::Oracle:
      return "oracle";
  }
  return "?";
}

inline double theoretical_exponent(int m, int r, double alpha) {
  return -2.0 * m * alpha / (2.0 * m + 2.0 * r + 1.0);
}

// ---------------------------------------------------------------------------
// Monte Carlo risk

struct ReplicateOutcome {
  double ise = 0.0;
  double ise_full = 0.0;
  std::vector<double> lambda_hat;
};

inline ReplicateOutcome run_replicate(const Problem& problem, const DesignData& data, const NoiseSampler& sampler,
                                      const LepskiConfig& lepski, const BandwidthPolicy& policy, std::uint64_t seed) {
  const std::vector<double> y = observe(data.q, sampler, seed);
  const EstimateResult est = estimate_f(y, problem.g, problem.coeffs, problem.kernels, lepski, data.design,
                                        policy.bandwidths(problem, data.design, lepski.alpha));
  const Window window = interior_window(data.design, policy.boundary_band(problem, data.design, lepski.alpha));
  return {l2_diff_sq(est.f_hat, data.f, data.design, window), l2_diff_sq(est.f_hat, data.f, data.design),
          est.lambda_hat};
}

struct RiskRow {
  int n = 0;
  int replicates = 0;
  /// Interior-window ISE (boundary bands excluded).
  double mean_ise = 0.0;
  double se = 0.0;
  /// Full-interval ISE, reported for reference.
  double mean_ise_full = 0.0;
  double se_full = 0.0;
  /// Mean selected bandwidth per j.
  std::vector<double> mean_lambda;
  std::vector<double> ise_samples;
};

struct RiskDecomposition {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double total = 0.0;
  double total_se = 0.0;
  /// (2 + r) / B_r^2 * (R1 + R2 + R3).
  double bound = 0.0;
  bool holds = false;
};

struct RiskReport {
  double alpha = 1.0;
  std::vector<RiskRow> per_n;
  /// Slope of log mean ISE on log n; present with >= 4 sizes and >= 20 replicates.
  std::optional<LinearFit> fit;
  double theoretical_exponent = 0.0;
  std::optional<RiskDecomposition> decomposition;
};

inline constexpr int kMinFitSizes = 4;
inline constexpr int kMinFitReplicates = 20;

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(std::span<const double> v) {
  MeanSe out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= double(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / double(v.size() - 1) / double(v.size()));
  }
  return out;
}

/// Replicate r of the cell for sample size n uses derive_seed(derive_seed(seed, n), r).
/// Cells differing only in alpha share noise draws (common random numbers).
inline std::uint64_t replicate_seed(std::uint64_t seed, int n, int replicate) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(replicate));
}

struct StudyOptions {
  int replicates = 50;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  int refinement = kDefaultRefinement;
};

inline RiskRow risk_cell(const Problem& problem, const DesignData& data, const NoiseModel& noise,
                         const BandwidthPolicy& policy, LepskiConfig lepski, const StudyOptions& opt) {
  if (opt.replicates < 2) throw ConfigError("mc_risk: need at least 2 replicates");
  lepski.sigma = noise.sigma;
  lepski.alpha = noise.alpha;
  const NoiseSampler sampler(noise, data.design.n);
  std::vector<ReplicateOutcome> out(static_cast<std::size_t>(opt.replicates));
  parallel_for(out.size(), opt.threads, [&](std::size_t r) {
    out[r] = run_replicate(problem, data, sampler, lepski, policy,
                           replicate_seed(opt.seed, data.design.n, static_cast<int>(r)));
  });
  RiskRow row;
  row.n = data.design.n;
  row.replicates = opt.replicates;
  std::vector<double> full;
  row.mean_lambda.assign(static_cast<std::size_t>(problem.r() + 1), 0.0);
  for (const auto& o : out) {
    row.ise_samples.push_back(o.ise);
    full.push_back(o.ise_full);
    for (std::size_t j = 0; j < o.lambda_hat.size(); ++j) row.mean_lambda[j] += o.lambda_hat[j] / opt.replicates;
  }
  const MeanSe interior = mean_and_se(row.ise_samples);
  const MeanSe whole = mean_and_se(full);
  row.mean_ise = interior.mean;
  row.se = interior.se;
  row.mean_ise_full = whole.mean;
  row.se_full = whole.se;
  return row;
}

inline void fit_report(RiskReport& report, int replicates) {
  if (static_cast<int>(report.per_n.size()) < kMinFitSizes || replicates < kMinFitReplicates) return;
  std::vector<double> x, y;
  for (const auto& row : report.per_n) {
    if (!(row.mean_ise > 0.0)) return;
    x.push_back(row.n);
    y.push_back(row.mean_ise);
  }
  report.fit = loglog_fit(x, y);
}

/// Mean ISE of f^ over `replicates` seeds for each design, with the log-log
/// exponent fit across designs.
inline RiskReport mc_risk(const Problem& problem, const std::vector<ExperimentDesign>& designs,
                          const NoiseModel& noise, const BandwidthPolicy& policy, const LepskiConfig& lepski,
                          const StudyOptions& opt) {
  RiskReport report;
  report.alpha = noise.alpha;
  report.theoretical_exponent = theoretical_exponent(problem.truth.m, problem.r(), noise.alpha);
  for (const auto& design : designs) {
    const DesignData data = prepare_design(problem, design, opt.refinement);
    report.per_n.push_back(risk_cell(problem, data, noise, policy, lepski, opt));
  }
  fit_report(report, opt.replicates);
  return report;
}

/// Monte Carlo estimates of
///   R1 = E||q^_r - q^(r)||^2, R2 = E||(q^_r - q^(r)) * phi_1||^2,
///   R3 = sum_j a_{0,r-j-1}^2 E||q^_j - q^(j)||^2
/// with fixed bandwidths, against the measured total risk E||f^ - f||^2.
/// Norms use the same interior window as the risk figures.
inline RiskDecomposition risk_decomposition(const Problem& problem, const ExperimentDesign& design,
                                            const NoiseModel& noise, const std::vector<double>& bandwidths,
                                            const StudyOptions& opt) {
  if (opt.replicates < 2) throw ConfigError("risk_decomposition: need at least 2 replicates");
  const DesignData data = prepare_design(problem, design, opt.refinement);
  const BandwidthPolicy policy = BandwidthPolicy::with_bandwidths(bandwidths);
  const auto bw = policy.bandwidths(problem, design, noise.alpha);
  const Window window = interior_window(design, policy.boundary_band(problem, design, noise.alpha));
  const NoiseSampler sampler(noise, design.n);
  const int r = problem.r();
  const std::size_t size = static_cast<std::size_t>(design.eval_size());
  std::vector<double> phi(size);
  for (std::size_t k = 0; k < size; ++k) phi[k] = phi1_eval(problem.coeffs, design.time(static_cast<int>(k)));

  struct Terms {
    double r1, r2, r3, total;
  };
  std::vector<Terms> out(static_cast<std::size_t>(opt.replicates));
  LepskiConfig lepski;
  lepski.sigma = noise.sigma;
  lepski.alpha = noise.alpha;
  parallel_for(out.size(), opt.threads, [&](std::size_t rep) {
    const std::vector<double> y = observe(data.q, sampler, replicate_seed(opt.seed, design.n, static_cast<int>(rep)));
    const EstimateResult est = estimate_f(y, problem.g, problem.coeffs, problem.kernels, lepski, design, bw);
    Terms t{};
    const auto& qr_hat = est.q_hat[static_cast<std::size_t>(r)];
    const auto& qr = data.q_derivs[static_cast<std::size_t>(r)];
    t.r1 = l2_diff_sq(qr_hat, qr, design, window);
    if (!problem.coeffs.exp_terms.empty()) {
      std::vector<double> err(size);
      for (std::size_t k = 0; k < size; ++k) err[k] = qr_hat[k] - qr[k];
      const std::vector<double> conv = trapezoid_causal_convolution(err, phi, design.step());
      const std::vector<double> zero(size, 0.0);
      t.r2 = l2_diff_sq(conv, zero, design, window);
    } else {
      t.r2 = 0.0;
    }
    t.r3 = 0.0;
    for (int j = 0; j < r; ++j) {
      const double a = problem.coeffs.a0[static_cast<std::size_t>(r - j - 1)];
      t.r3 += a * a *
              l2_diff_sq(est.q_hat[static_cast<std::size_t>(j)], data.q_derivs[static_cast<std::size_t>(j)], design,
                         window);
    }
    t.total = l2_diff_sq(est.f_hat, data.f, design, window);
    out[rep] = t;
  });
  RiskDecomposition d;
  std::vector<double> totals;
  for (const auto& t : out) {
    d.r1 += t.r1 / opt.replicates;
    d.r2 += t.r2 / opt.replicates;
    d.r3 += t.r3 / opt.replicates;
    totals.push_back(t.total);
  }
  const MeanSe tot = mean_and_se(totals);
  d.total = tot.mean;
  d.total_se = tot.se;
  d.bound = (2.0 + r) / (problem.g.b_r() * problem.g.b_r()) * (d.r1 + d.r2 + d.r3);
  d.holds = d.total <= d.bound + 2.0 * d.total_se;
  return d;
}

// ---------------------------------------------------------------------------
// Fixed-bandwidth oracle

struct FixedSearchResult {
  int n = 0;
  int replicates = 0;
  /// Median ISE of the Lepski policy over the replicates.
  double lepski_median = 0.0;
  /// Bandwidths (one per j) whose median ISE is smallest, and that median.
  std::vector<double> best_bandwidths;
  double best_median = 0.0;
  /// Number of bandwidth combinations searched.
  std::size_t combinations = 0;
};

inline constexpr std::size_t kMaxFixedCombinations = 200000;

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

/// Compares the Lepski policy with every fixed choice of one grid bandwidth
/// per j, on the same replicates as risk_cell. The fixed choice is scored by
/// its median ISE over the replicates. f^ is linear in each q^_j, so every
/// combination is a sum of precomputed per-j contributions.
inline FixedSearchResult fixed_bandwidth_search(const Problem& problem, const DesignData& data, const NoiseModel& noise,
                                                LepskiConfig lepski, const StudyOptions& opt) {
  if (opt.replicates < 1) throw ConfigError("fixed_bandwidth_search: need at least 1 replicate");
  lepski.sigma = noise.sigma;
  lepski.alpha = noise.alpha;
  const ExperimentDesign& design = data.design;
  const int r = problem.r();
  const auto count = static_cast<std::size_t>(r + 1);
  std::vector<std::vector<double>> grids;
  std::size_t combos = 1;
  for (int j = 0; j <= r; ++j) {
    grids.push_back(resolvable_grid(lepski_grid(j, lepski, design), design));
    combos *= grids.back().size();
    if (combos > kMaxFixedCombinations) throw ConfigError("fixed_bandwidth_search: too many bandwidth combinations");
  }
  const BandwidthPolicy policy = BandwidthPolicy::lepski();
  const Window window = interior_window(design, policy.boundary_band(problem, design, noise.alpha));
  const NoiseSampler sampler(noise, design.n);
  const std::size_t size = static_cast<std::size_t>(design.eval_size());

  std::vector<double> lepski_ise(static_cast<std::size_t>(opt.replicates));
  std::vector<std::vector<double>> combo_ise(static_cast<std::size_t>(opt.replicates));
  parallel_for(combo_ise.size(), opt.threads, [&](std::size_t rep) {
    const std::vector<double> y = observe(data.q, sampler, replicate_seed(opt.seed, design.n, static_cast<int>(rep)));
    const EstimateResult est = estimate_f(y, problem.g, problem.coeffs, problem.kernels, lepski, design);
    lepski_ise[rep] = l2_diff_sq(est.f_hat, data.f, design, window);
    // parts[j][b]: contribution of q^_j at bandwidth grids[j][b] to f^.
    std::vector<std::vector<std::vector<double>>> parts(count);
    for (std::size_t j = 0; j < count; ++j)
      for (double lambda : grids[j]) {
        std::vector<std::vector<double>> q_hat(count, std::vector<double>(size, 0.0));
        q_hat[j] = estimate_qj(y, design, problem.kernels[j], lambda);
        parts[j].push_back(assemble_f(problem.g, problem.coeffs, q_hat, design));
      }
    std::vector<double>& out = combo_ise[rep];
    out.reserve(combos);
    std::vector<std::size_t> idx(count, 0);
    std::vector<double> f_hat(size);
    for (std::size_t c = 0; c < combos; ++c) {
      std::fill(f_hat.begin(), f_hat.end(), 0.0);
      for (std::size_t j = 0; j < count; ++j) {
        const auto& p = parts[j][idx[j]];
        for (std::size_t k = 0; k < size; ++k) f_hat[k] += p[k];
      }
      out.push_back(l2_diff_sq(f_hat, data.f, design, window));
      for (std::size_t j = 0; j < count && ++idx[j] == grids[j].size(); ++j) idx[j] = 0;
    }
  });

  FixedSearchResult res;
  res.n = design.n;
  res.replicates = opt.replicates;
  res.combinations = combos;
  res.lepski_median = median(lepski_ise);
  res.best_median = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t c = 0; c < combos; ++c) {
    std::vector<double> v;
    for (const auto& row : combo_ise) v.push_back(row[c]);
    const double m = median(std::move(v));
    if (m < res.best_median) {
      res.best_median = m;
      best = c;
    }
  }
  for (std::size_t j = 0; j < count; ++j) {
    res.best_bandwidths.push_back(grids[j][best % grids[j].size()]);
    best /= grids[j].size();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Lepski large-deviation experiment

struct TailRow {
  int n = 0;
  int j = 0;
  double lambda = 0.0;
  /// Oracle bandwidth snapped to the grid.
  double lambda_o = 0.0;
  double lower_limit = 0.0;
  int exceed = 0;
  int replicates = 0;
  double frequency = 0.0;
};

/// Pure-noise (f = 0) frequency of ||q^_lambda - q^_{lambda_o}||^2 > gamma_j^2 rho^2_{lambda,j}
/// for grid bandwidths (sigma^2 T^2 / n^alpha)^{1/(2j+1)} < lambda < lambda_o.
/// lambda_o uses the nominal smoothness `m`.
inline std::vector<TailRow> lepski_tail_study(const RationalLaplaceKernel& g, const std::vector<ExperimentDesign>& designs,
                                              const NoiseModel& noise, int j, int m, LepskiConfig lepski,
                                              const StudyOptions& opt, int L = 0) {
  if (opt.replicates < 1) throw ConfigError("lepski_tail_study: need at least 1 replicate");
  if (j < 0 || j > g.r()) throw ConfigError("lepski_tail_study: j must lie in 0..r");
  lepski.sigma = noise.sigma;
  lepski.alpha = noise.alpha;
  const DerivKernel K = build_kernel(L > 0 ? L : g.r() + 2, j);
  std::vector<TailRow> rows;
  for (const auto& design : designs) {
    const double gamma_sq = lepski.gamma_sq(K, design);
    const std::vector<double> grid = resolvable_grid(lepski_grid(j, lepski, design), design);
    const double lambda_o = snap_to_grid(oracle_bandwidth(m, g.r(), design, noise.alpha), grid);
    const double lower = std::pow(noise.sigma * noise.sigma * design.noise_ratio(noise.alpha), 1.0 / (2.0 * j + 1.0));
    std::vector<double> admissible;
    for (double l : grid)
      if (l < lambda_o && l > lower) admissible.push_back(l);
    const Window window = interior_window(design, grid.front());
    const NoiseSampler sampler(noise, design.n);
    std::vector<std::vector<int>> hits(static_cast<std::size_t>(opt.replicates));
    parallel_for(hits.size(), opt.threads, [&](std::size_t rep) {
      const std::vector<double> y = sampler.sample(replicate_seed(opt.seed, design.n, static_cast<int>(rep)));
      const std::vector<double> ref = estimate_qj(y, design, K, lambda_o);
      std::vector<int> h;
      for (double l : admissible) {
        const double stat = l2_diff_sq(estimate_qj(y, design, K, l), ref, design, window);
        h.push_back(stat > gamma_sq * rho_sq(l, j, lepski, design) ? 1 : 0);
      }
      hits[rep] = std::move(h);
    });
    for (std::size_t a = 0; a < admissible.size(); ++a) {
      TailRow row{design.n, j, admissible[a], lambda_o, lower, 0, opt.replicates, 0.0};
      for (const auto& h : hits) row.exceed += h[a];
      row.frequency = double(row.exceed) / opt.replicates;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace lapdecon
