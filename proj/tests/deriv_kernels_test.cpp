#include "lapdecon/deriv_kernels.hpp"

#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

namespace lapdecon {
namespace {

// 20-point Gauss-Legendre rule from the Golub-Welsch eigenproblem; exact
// for polynomials of degree <= 39 and independent of the closed-form moments.
template <class F>
double gauss_legendre(F f) {
  constexpr int n = 20;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    acc += w * f(es.eigenvalues()(i));
  }
  return acc;
}

// Solves the moment system directly in the monomial basis. The Hankel
// matrix is badly conditioned, so the solve runs in extended precision.
Eigen::VectorXd monomial_solve(int L, int j) {
  using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  MatrixL M(L, L);
  VectorL rhs = VectorL::Zero(L);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < L; ++k) M(l, k) = (l + k) % 2 == 0 ? 2.0L / (l + k + 1) : 0.0L;
  rhs(j) = (j % 2 == 0 ? 1.0L : -1.0L) * std::tgamma(j + 1.0L);
  return VectorL(M.fullPivLu().solve(rhs)).cast<double>();
}

TEST(DerivKernelTest, SecondOrderSmoothingKernel) {
  // The Epanechnikov shape is one valid (2, 0) kernel; the builder's
  // minimal-degree answer must satisfy the same moment checks.
  const DerivKernel epan(2, 0, RealPoly{0.75, 0.0, -0.75});
  EXPECT_NEAR(kernel_moment(epan, 0), 1.0, 1e-15);
  EXPECT_NEAR(kernel_moment(epan, 1), 0.0, 1e-15);
  EXPECT_NEAR(kernel_l2_norm_sq(epan), 0.6, 1e-14);

  const DerivKernel built = build_kernel(2, 0);
  EXPECT_NEAR(kernel_moment(built, 0), 1.0, 1e-12);
  EXPECT_NEAR(kernel_moment(built, 1), 0.0, 1e-12);
}

TEST(DerivKernelTest, FirstDerivativeKernel) {
  const DerivKernel K = build_kernel(3, 1);
  EXPECT_EQ(K.coeffs(), (RealPoly{0.0, -1.5}));
  EXPECT_NEAR(kernel_moment(K, 0), 0.0, 1e-15);
  EXPECT_NEAR(kernel_moment(K, 1), -1.0, 1e-15);
  EXPECT_NEAR(kernel_moment(K, 2), 0.0, 1e-15);
  EXPECT_NEAR(kernel_l2_norm_sq(K), 1.5, 1e-14);
}

TEST(DerivKernelTest, SecondDerivativeKernel) {
  const DerivKernel K = build_kernel(4, 2);
  ASSERT_EQ(K.coeffs().degree(), 2);
  EXPECT_NEAR(K.coeffs()[0], -15.0 / 4.0, 1e-13);
  EXPECT_NEAR(K.coeffs()[1], 0.0, 1e-13);
  EXPECT_NEAR(K.coeffs()[2], 45.0 / 4.0, 1e-13);
  EXPECT_NEAR(kernel_moment(K, 2), 2.0, 1e-13);
  EXPECT_NEAR(kernel_moment(K, 1), 0.0, 1e-15);
  EXPECT_NEAR(kernel_moment(K, 3), 0.0, 1e-15);
}

TEST(DerivKernelTest, AllOrdersUpToEightPassMomentChecks) {
  for (const auto& row : moment_conformance(8)) EXPECT_LE(row.abs_error, kMomentTolerance) << row.L << "," << row.j << "," << row.l;
  EXPECT_EQ(moment_conformance(8).size(), 204u);  // sum over L of L^2
}

TEST(DerivKernelTest, MomentsAgreeWithQuadrature) {
  for (int L = 1; L <= 8; ++L)
    for (int j = 0; j < L; ++j) {
      const DerivKernel K = build_kernel(L, j);
      for (int l = 0; l < L; ++l)
        EXPECT_NEAR(gauss_legendre([&](double t) { return std::pow(t, l) * K(t); }), moment_target(j, l), 1e-9 * std::max(1.0, K.coeffs().l1()));
    }
}

TEST(DerivKernelTest, LegendreAndMonomialSolvesAgree) {
  for (int L = 1; L <= 8; ++L)
    for (int j = 0; j < L; ++j) {
      const DerivKernel K = build_kernel(L, j);
      const Eigen::VectorXd c = monomial_solve(L, j);
      for (int k = 0; k < L; ++k) EXPECT_NEAR(K.coeffs()[k], c(k), 1e-9 * std::max(1.0, std::abs(c(k)))) << "L=" << L << " j=" << j << " k=" << k;
    }
}

TEST(DerivKernelTest, ScaledKernelReproducesPolynomialDerivatives) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int L = 2; L <= 6; ++L)
    for (int j = 0; j < L; ++j) {
      const DerivKernel K = build_kernel(L, j);
      std::vector<double> c(static_cast<std::size_t>(L));
      for (auto& v : c) v = u(rng);
      const RealPoly p(c);  // degree L-1 < L
      const double t = u(rng);
      const double lambda = 0.3;
      // substitute u = t - lambda v
      const double approx = gauss_legendre([&](double v) { return std::pow(lambda, -j) * K(v) * p(t - lambda * v); });
      const double exact = p.derivative(j)(t);
      EXPECT_NEAR(approx, exact, 1e-8 * std::max(1.0, std::abs(exact))) << "L=" << L << " j=" << j;
    }
}

TEST(DerivKernelTest, ZeroOutsideSupport) {
  const DerivKernel K = build_kernel(4, 0);
  EXPECT_EQ(K(1.0000001), 0.0);
  EXPECT_EQ(K(-3.0), 0.0);
  EXPECT_NE(K(0.0), 0.0);
}

TEST(DerivKernelTest, IntegralOverSubintervals) {
  const DerivKernel K = build_kernel(3, 1);  // -1.5 t
  EXPECT_NEAR(K.integral(-1.0, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(K.integral(0.0, 1.0), -0.75, 1e-15);
  EXPECT_NEAR(K.integral(0.5, 3.0), -0.5625, 1e-15);  // clipped to [0.5, 1]
  EXPECT_EQ(K.integral(1.5, 2.0), 0.0);
  EXPECT_EQ(K.integral(0.3, 0.2), 0.0);
  for (int L = 1; L <= 8; ++L)
    for (int j = 0; j < L; ++j) {
      const DerivKernel Kj = build_kernel(L, j);
      EXPECT_NEAR(Kj.integral(-2.0, 2.0), moment_target(j, 0), 1e-10);
      EXPECT_NEAR(Kj.integral(-0.3, 0.45), gauss_legendre([&](double v) { return 0.375 * Kj(0.375 * v + 0.075); }),
                  1e-10 * std::max(1.0, Kj.coeffs().l1()));
    }
}

TEST(DerivKernelTest, InvalidInputsRejected) {
  EXPECT_THROW(build_kernel(2, 2), InvalidKernel);
  EXPECT_THROW(build_kernel(3, -1), InvalidKernel);
  EXPECT_THROW(DerivKernel(2, 0, RealPoly{}), InvalidKernel);
  EXPECT_THROW(DerivKernel(2, 0, RealPoly{1.0}), InvalidKernel);  // integrates to 2
  EXPECT_THROW(build_kernel_family(2, 2), InvalidKernel);
}

TEST(DerivKernelTest, FamilySharesOrder) {
  const auto family = build_kernel_family(4, 2);
  ASSERT_EQ(family.size(), 3u);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(family[static_cast<std::size_t>(j)].L(), 4);
    EXPECT_EQ(family[static_cast<std::size_t>(j)].j(), j);
    EXPECT_GT(family[static_cast<std::size_t>(j)].l2norm_sq(), 0.0);
  }
}

}  // namespace
}  // namespace lapdecon
