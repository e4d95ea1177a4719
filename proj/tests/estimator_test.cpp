#include "lapdecon/estimator.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "lapdecon/lrd_noise.hpp"
#include "lapdecon/truth.hpp"

namespace lapdecon {
namespace {

std::vector<double> observe_fn(const std::function<double(double)>& q, const ExperimentDesign& d) {
  std::vector<double> y(static_cast<std::size_t>(d.n));
  for (int i = 1; i <= d.n; ++i) y[static_cast<std::size_t>(i - 1)] = q(d.time(i));
  return y;
}

// Weight of node t_i for evaluation at t: lambda^{-j} times the integral of
// K over the node's cell in kernel units, clipped to the support. Simpson's
// rule is exact for the cubic kernels used here.
double cell_oracle_weight(const DerivKernel& K, double t, double ti, double h, double lambda) {
  const double u = (t - ti) / lambda;
  const double a = std::max(-1.0, u - 0.5 * h / lambda);
  const double b = std::min(1.0, u + 0.5 * h / lambda);
  if (!(a < b)) return 0.0;
  const auto& p = K.coeffs();
  return (b - a) / 6.0 * (p(a) + 4.0 * p(0.5 * (a + b)) + p(b)) / std::pow(lambda, K.j());
}

double estimator_oracle(const std::vector<double>& y, const ExperimentDesign& d, const DerivKernel& K, double lambda,
                        double t) {
  long double acc = 0.0L;
  for (int i = 1; i <= d.n; ++i)
    acc += static_cast<long double>(cell_oracle_weight(K, t, d.time(i), d.step(), lambda)) * y[static_cast<std::size_t>(i - 1)];
  return static_cast<double>(acc);
}

TEST(EstimateQjTest, ZeroObservationsGiveZero) {
  const ExperimentDesign d(512, 4.0);
  const std::vector<double> y(512, 0.0);
  for (int j = 0; j < 3; ++j)
    for (double v : estimate_qj(y, d, build_kernel(4, j), 0.5)) EXPECT_EQ(v, 0.0);
}

TEST(EstimateQjTest, MatchesDirectOracle) {
  const ExperimentDesign d(2000, 5.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> y(2000);
  for (auto& v : y) v = nd(rng);
  for (int j = 0; j < 3; ++j) {
    const DerivKernel K = build_kernel(4, j);
    for (double lambda : {0.01, 0.0125, 0.25, 1.3}) {
      const auto est = estimate_qj(y, d, K, lambda);
      ASSERT_EQ(est.size(), 2001u);
      for (int k : {0, 1, 7, 400, 1000, 1999, 2000}) {
        const double oracle = estimator_oracle(y, d, K, lambda, d.time(k));
        EXPECT_NEAR(est[static_cast<std::size_t>(k)], oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
      }
      const std::vector<double> pts{0.0, 0.123, 2.5, 4.999};
      const auto direct = estimate_qj_at(y, d, K, lambda, pts);
      for (std::size_t p = 0; p < pts.size(); ++p) {
        const double oracle = estimator_oracle(y, d, K, lambda, pts[p]);
        EXPECT_NEAR(direct[p], oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
      }
    }
  }
}

TEST(EstimateQjTest, WeightsCollapseToRiemannSumForSmoothKernels) {
  // Away from the support ends the cell weight is h K(u) / lambda^{j+1} up to
  // O((h/lambda)^3).
  const DerivKernel K = build_kernel(3, 1);
  const double lambda = 0.5, h = 1e-3;
  for (double u : {-0.7, 0.0, 0.31})
    EXPECT_NEAR(cell_weight(K, u, 0.5 * h / lambda, lambda), h * K(u) / (lambda * lambda), 1e-12);
}

TEST(EstimateQjTest, WithinDiscretizationErrorOfPlainRiemannSum) {
  // The plain sum lambda^{-j-1} sum_i K((t - t_i)/lambda) h y_i differs from
  // the cell-weighted one only near the support ends: O(h/lambda) relative.
  const ExperimentDesign d(4096, 8.0);
  const auto y = observe_fn([](double t) { return std::sin(t) + 0.1 * t * t; }, d);
  for (int j = 0; j < 3; ++j) {
    const DerivKernel K = build_kernel(4, j);
    for (double lambda : {0.1, 0.37, 1.0}) {
      const auto est = estimate_qj(y, d, K, lambda);
      for (int k = 600; k <= 3500; k += 290) {
        long double plain = 0.0L;
        for (int i = 1; i <= d.n; ++i)
          plain += K((d.time(k) - d.time(i)) / lambda) * d.step() * y[static_cast<std::size_t>(i - 1)];
        plain /= std::pow(lambda, j + 1);
        double scale = 0.0;
        for (int i = 1; i <= d.n; ++i) scale += std::abs(K((d.time(k) - d.time(i)) / lambda) * y[static_cast<std::size_t>(i - 1)]);
        scale *= d.step() / std::pow(lambda, j + 1);
        EXPECT_NEAR(est[static_cast<std::size_t>(k)], static_cast<double>(plain), 4.0 * d.step() / lambda * scale)
            << "j=" << j << " lambda=" << lambda;
      }
    }
  }
}

TEST(EstimateQjTest, CubicDerivative) {
  // q = t^3, j = 1, K of order (3, 1). The t^3 term leaves bias
  // lambda^2 * int v^3 K_1(v) dv * (-1) = 0.6 lambda^2; averaging over the node cells adds
  // a relative O((h/lambda)^2).
  const ExperimentDesign d(1 << 14, 1.0);
  const auto y = observe_fn([](double t) { return t * t * t; }, d);
  const DerivKernel K = build_kernel(3, 1);
  const double lambda = 0.03;
  const auto est = estimate_qj(y, d, K, lambda);
  const double rel = std::pow(d.step() / lambda, 2);
  for (double t : {0.2, 0.37, 0.5, 0.81}) {
    const int k = static_cast<int>(std::lround(t / d.step()));
    const double tk = d.time(k);
    const double expected = 3 * tk * tk + 0.6 * lambda * lambda;
    EXPECT_NEAR(est[static_cast<std::size_t>(k)], expected, rel * expected);
    EXPECT_NEAR(est[static_cast<std::size_t>(k)], 3 * tk * tk, 1e-3);
  }
}

TEST(EstimateQjTest, ConstantIsReproduced) {
  const ExperimentDesign d(4096, 8.0);
  const auto y = observe_fn([](double) { return 2.5; }, d);
  const auto est = estimate_qj(y, d, build_kernel(2, 0), 64 * d.step());
  for (int k = 100; k <= 4000; k += 97) EXPECT_NEAR(est[static_cast<std::size_t>(k)], 2.5, 1e-3);
}

TEST(EstimateQjTest, PolynomialReproductionHasNoBandwidthBias) {
  // Degree < L: no bandwidth bias. Cell averaging leaves an O((h/lambda)^2)
  // error; the jumps of K at the support ends let it reach the lower
  // derivatives, each weighted by lambda^{m-j}.
  const ExperimentDesign d(8192, 4.0);
  const RealPoly p{0.3, -1.0, 0.7, 0.25};
  const auto y = observe_fn([&](double t) { return p(t); }, d);
  for (int j = 0; j < 4; ++j) {
    const DerivKernel K = build_kernel(4, j);
    const RealPoly dp = p.derivative(j);
    for (double lambda : {256 * d.step(), 0.2, 0.7}) {
      const auto est = estimate_qj(y, d, K, lambda);
      double tol = 1e-12 / std::pow(lambda, j + 1);
      for (int m = 0; m <= j; ++m) {
        const RealPoly pm = p.derivative(m);
        const double sup = std::max({std::abs(pm(0.0)), std::abs(pm(4.0)), 1.0});
        tol += std::pow(d.step() / lambda, 2) * std::pow(lambda, m - j) * sup;
      }
      for (int k = 2048; k <= 6144; k += 512)
        EXPECT_NEAR(est[static_cast<std::size_t>(k)], dp(d.time(k)), tol)
            << "j=" << j << " lambda=" << lambda;
    }
  }
}

TEST(EstimateQjTest, LinearInObservations) {
  const ExperimentDesign d(1000, 3.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> u(1000), v(1000), w(1000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = nd(rng);
    v[i] = nd(rng);
    w[i] = 2.0 * u[i] - 0.5 * v[i];
  }
  const DerivKernel K = build_kernel(3, 1);
  const auto eu = estimate_qj(u, d, K, 0.3);
  const auto ev = estimate_qj(v, d, K, 0.3);
  const auto ew = estimate_qj(w, d, K, 0.3);
  for (std::size_t k = 0; k < ew.size(); ++k) EXPECT_NEAR(ew[k], 2.0 * eu[k] - 0.5 * ev[k], 1e-12 * (1 + std::abs(ew[k])));
}

TEST(EstimateQjTest, Errors) {
  const ExperimentDesign d(100, 2.0);
  const std::vector<double> y(100, 1.0);
  const DerivKernel K = build_kernel(2, 0);
  EXPECT_THROW(estimate_qj(y, d, K, 0.0), BandwidthOutOfRange);
  EXPECT_THROW(estimate_qj(y, d, K, 2.5), BandwidthOutOfRange);
  EXPECT_THROW(estimate_qj(std::vector<double>(99, 1.0), d, K, 0.5), GridMismatch);
}

TEST(L2DiffTest, Examples) {
  const ExperimentDesign d(1024, 1.0);
  const auto t = d.eval_grid();
  const std::vector<double> zero(t.size(), 0.0);
  EXPECT_EQ(l2_diff_sq(t, t, d), 0.0);
  EXPECT_NEAR(l2_diff_sq(t, zero, d), 1.0 / 3.0, 1e-5);
  EXPECT_DOUBLE_EQ(l2_diff_sq(t, zero, d), l2_diff_sq(zero, t, d));

  const ExperimentDesign d5(100, 5.0);
  const std::vector<double> ones(101, 1.0), zeros(101, 0.0);
  EXPECT_NEAR(l2_diff_sq(ones, zeros, d5), 5.0, 1e-12);
  EXPECT_NEAR(l2_diff_sq(ones, zeros, d5, interior_window(d5, 1.0)), 3.0, 1e-12);
  EXPECT_THROW(l2_diff_sq(ones, std::vector<double>(100, 0.0), d5), GridMismatch);
  EXPECT_THROW(interior_window(d5, 2.5), ConfigError);
}

TEST(OracleBandwidthTest, Examples) {
  const ExperimentDesign d(1024, 1.0);
  EXPECT_NEAR(oracle_bandwidth(1, 1, d, 1.0), 0.25, 1e-15);
  EXPECT_NEAR(oracle_bandwidth(1, 1, d, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(oracle_bandwidth(1000000, 1, d, 1.0), 1.0, 1e-5);
  EXPECT_NEAR(oracle_bandwidth(1, 1, d, 1.0, 3.0), 0.75, 1e-15);
  const std::vector<double> grid{1.0, 0.5, 0.25, 0.125};
  EXPECT_EQ(snap_to_grid(0.3, grid), 0.25);
  EXPECT_EQ(snap_to_grid(0.36, grid), 0.5);
  EXPECT_EQ(snap_to_grid(0.01, grid), 0.125);
}

TEST(LepskiGridTest, Examples) {
  const ExperimentDesign d(1024, 1.0);
  LepskiConfig cfg;
  auto grid = lepski_grid(0, cfg, d);
  ASSERT_EQ(grid.size(), 11u);
  EXPECT_EQ(grid.front(), 1.0);
  EXPECT_EQ(grid.back(), 1.0 / 1024.0);
  grid = lepski_grid(1, cfg, d);
  EXPECT_EQ(grid, (std::vector<double>{1.0, 0.5, 0.25, 0.125}));

  cfg.sigma = 40.0;  // sigma^2 T^2 = 1600 >= 1024
  EXPECT_THROW(lepski_grid(0, cfg, d), EmptyGrid);
}

TEST(LepskiGridTest, SmallestBandwidthSpansAGridStep) {
  LepskiConfig cfg;
  cfg.sigma = 1e-3;
  const ExperimentDesign d(1000, 2.0);
  const auto grid = lepski_grid(0, cfg, d);
  EXPECT_GE(grid.back(), d.step());
  EXPECT_LT(grid.back() / cfg.a, d.step());
  cfg.sigma = 0.0;
  EXPECT_EQ(lepski_grid(0, cfg, d), grid);
}

TEST(RhoSqTest, Examples) {
  const ExperimentDesign d(1024, 1.0);
  LepskiConfig cfg;
  EXPECT_DOUBLE_EQ(rho_sq(0.25, 0, cfg, d), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(rho_sq(1.0, 3, cfg, d), 4.0 / 1024.0);
  cfg.alpha = 0.5;
  EXPECT_DOUBLE_EQ(rho_sq(1.0, 0, cfg, d), 0.125);
  EXPECT_THROW(rho_sq(0.0, 0, cfg, d), BandwidthOutOfRange);
}

TEST(LepskiConfigTest, Validation) {
  LepskiConfig cfg;
  cfg.a = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.gamma_sq_factor = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  EXPECT_DOUBLE_EQ(cfg.gamma_sq(build_kernel(3, 1), ExperimentDesign(10, 1.0)), 6.0);
}

TEST(LepskiSelectTest, ZeroDataPicksLargestBandwidth) {
  const ExperimentDesign d(1024, 4.0);
  const std::vector<double> y(1024, 0.0);
  LepskiConfig cfg;
  cfg.sigma = 0.5;
  const auto sel = lepski_select(y, 0, build_kernel(2, 0), cfg, d);
  EXPECT_EQ(sel.lambda_hat, 1.0);
  for (const auto& c : sel.diagnostics) EXPECT_TRUE(c.accepted);
}

TEST(LepskiSelectTest, InfiniteThresholdPicksLargestBandwidth) {
  const ExperimentDesign d(2048, 4.0);
  const auto y = sample_noise(NoiseModel::iid(1.0), 2048, 17);
  LepskiConfig cfg;
  cfg.gamma_sq_factor = std::numeric_limits<double>::infinity();
  EXPECT_EQ(lepski_select(y, 0, build_kernel(2, 0), cfg, d).lambda_hat, 1.0);
}

TEST(LepskiSelectTest, DiagnosticsAreSelfConsistent) {
  const ExperimentDesign d(2048, 6.0);
  const TruthSpec truth = make_truth("KINK_1", 6.0);
  auto y = sample_noise(NoiseModel::iid(0.2), 2048, 4);
  for (int i = 1; i <= d.n; ++i) y[static_cast<std::size_t>(i - 1)] += truth(d.time(i));
  LepskiConfig cfg;
  cfg.sigma = 0.2;
  const DerivKernel K = build_kernel(3, 0);
  const auto sel = lepski_select(y, 0, K, cfg, d);
  const std::size_t g = sel.grid.size();
  ASSERT_EQ(sel.diagnostics.size(), g * (g - 1) / 2);
  EXPECT_NE(std::find(sel.grid.begin(), sel.grid.end(), sel.lambda_hat), sel.grid.end());
  // the choice passes every one of its own comparisons, and every larger
  // bandwidth fails at least one
  for (double lam : sel.grid) {
    bool all = true;
    for (const auto& c : sel.diagnostics)
      if (c.lambda == lam) {
        all = all && c.accepted;
        EXPECT_EQ(c.accepted, c.stat <= c.threshold);
        EXPECT_LT(c.lambda_prime, c.lambda);
        EXPECT_DOUBLE_EQ(c.threshold, cfg.gamma_sq(K, d) * rho_sq(c.lambda_prime, 0, cfg, d));
      }
    if (lam == sel.lambda_hat) EXPECT_TRUE(all);
    if (lam > sel.lambda_hat) EXPECT_FALSE(all);
  }
  const auto direct = estimate_qj(y, d, K, sel.lambda_hat);
  EXPECT_EQ(direct, sel.estimate);
}

TEST(LepskiSelectTest, TracksRiskMinimizingBandwidth) {
  // q for f = t^2 e^{-t}, g~ = 1/(s+1)^2 is t^4 e^{-t}/12.
  const ExperimentDesign d(1 << 12, 8.0);
  const double sigma = 0.1;
  LepskiConfig cfg;
  cfg.sigma = sigma;
  const DerivKernel K = build_kernel(4, 0);
  std::vector<double> q(static_cast<std::size_t>(d.eval_size()));
  for (int i = 0; i <= d.n; ++i) q[static_cast<std::size_t>(i)] = std::pow(d.time(i), 4) * std::exp(-d.time(i)) / 12.0;
  const auto grid = lepski_grid(0, cfg, d);
  const Window window = interior_window(d, grid.front());
  const NoiseSampler sampler(NoiseModel::iid(sigma), d.n);
  std::vector<double> risk(grid.size(), 0.0), picks;
  for (int rep = 0; rep < 50; ++rep) {
    auto y = sampler.sample(derive_seed(99, static_cast<std::uint64_t>(rep)));
    for (int i = 1; i <= d.n; ++i) y[static_cast<std::size_t>(i - 1)] += q[static_cast<std::size_t>(i)];
    for (std::size_t l = 0; l < grid.size(); ++l) risk[l] += l2_diff_sq(estimate_qj(y, d, K, grid[l]), q, d, window);
    picks.push_back(lepski_select(y, 0, K, cfg, d).lambda_hat);
  }
  const double best = grid[static_cast<std::size_t>(std::min_element(risk.begin(), risk.end()) - risk.begin())];
  std::nth_element(picks.begin(), picks.begin() + 25, picks.end());
  const double median = picks[25];
  EXPECT_LE(std::abs(std::log(median / best)), std::log(cfg.a * cfg.a) + 1e-12) << median << " vs " << best;
}

TEST(EstimateFTest, NoiselessConstantTruth) {
  // g~ = 1/(s+1), f = 1: q = 1 - e^{-t}.
  const ExperimentDesign d(1 << 12, 8.0);
  const RationalLaplaceKernel g({1.0}, {1.0, 1.0});
  const auto y = observe_fn([](double t) { return 1.0 - std::exp(-t); }, d);
  const auto res = estimate_f(y, g, partial_fractions(g), build_kernel_family(3, 1), LepskiConfig{}, d,
                              std::vector<double>{0.25, 0.25});
  const Window w = interior_window(d, 1.0);
  for (int i = w.first; i <= w.last; ++i) EXPECT_NEAR(res.f_hat[static_cast<std::size_t>(i)], 1.0, 5e-2);
}

TEST(EstimateFTest, ZeroObservationsGiveZero) {
  const ExperimentDesign d(1024, 4.0);
  const RationalLaplaceKernel g({2.0, 1.0}, {1.0, 2.0, 1.0});
  const std::vector<double> y(1024, 0.0);
  const auto res = estimate_f(y, g, partial_fractions(g), build_kernel_family(3, 1), LepskiConfig{}, d);
  for (double v : res.f_hat) EXPECT_EQ(v, 0.0);
}

TEST(EstimateFTest, MatchesExactReconstructionUpToBias) {
  // g~ = (s+2)/(s+1)^2, f = t^2 e^{-t}; fixed bandwidths lambda, lambda/2.
  const ExperimentDesign d(1 << 13, 8.0);
  const RationalLaplaceKernel g({2.0, 1.0}, {1.0, 2.0, 1.0});
  const TruthSpec truth = make_truth("SMOOTH", 8.0);
  const ExpPoly q = exact_convolution(g, truth.f);
  const auto y = observe_fn([&](double t) { return q(t); }, d);
  const std::vector<std::function<double(double)>> derivs{[&](double t) { return q(t); },
                                                           [dq = q.derivative(1)](double t) { return dq(t); }};
  const auto exact = reconstruct_exact(g, derivs, d);
  const auto coeffs = partial_fractions(g);
  const auto kernels = build_kernel_family(3, 1);
  const Window w = interior_window(d, 1.0);
  auto sup_err = [&](double lambda) {
    const auto res = estimate_f(y, g, coeffs, kernels, LepskiConfig{}, d, std::vector<double>{lambda, lambda});
    double e = 0.0;
    for (int i = w.first; i <= w.last; ++i)
      e = std::max(e, std::abs(res.f_hat[static_cast<std::size_t>(i)] - exact[static_cast<std::size_t>(i)]));
    return e;
  };
  const double e1 = sup_err(128 * d.step());
  const double e2 = sup_err(64 * d.step());
  EXPECT_LT(e1, 1e-2);
  // dominant bias is O(lambda^2) from the (3, 1) kernel
  EXPECT_NEAR(e1 / e2, 4.0, 0.6) << e1 << " " << e2;
}

TEST(EstimateFTest, Errors) {
  const ExperimentDesign d(256, 4.0);
  const RationalLaplaceKernel g({1.0}, {1.0, 1.0});
  const std::vector<double> y(256, 0.0);
  EXPECT_THROW(estimate_f(y, g, partial_fractions(g), build_kernel_family(3, 2), LepskiConfig{}, d), InvalidKernel);
  EXPECT_THROW(estimate_f(y, g, partial_fractions(g), build_kernel_family(3, 1), LepskiConfig{}, d, std::vector<double>{0.5}),
               ConfigError);
}

}  // namespace
}  // namespace lapdecon
