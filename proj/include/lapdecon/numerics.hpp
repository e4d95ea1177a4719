#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace lapdecon {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

/// Full linear convolution c_k = sum_i a_i b_{k-i}, length |a| + |b| - 1.
/// Direct summation for short inputs, zero-padded FFT otherwise.
inline std::vector<double> linear_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::vector<double> out(out_len, 0.0);
  if (std::min(a.size(), b.size()) <= 32) {
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
  }
  const std::size_t m = next_pow2(out_len);
  std::vector<double> pa(m, 0.0), pb(m, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, pa);
  fft.fwd(fb, pb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> back;
  fft.inv(back, fa);
  std::copy(back.begin(), back.begin() + static_cast<std::ptrdiff_t>(out_len), out.begin());
  return out;
}

/// Composite trapezoid approximation of (a*b)(t_k) = int_0^{t_k} a(t_k - x) b(x) dx
/// from samples a_i = a(i h), b_i = b(i h), i = 0..N-1.
inline std::vector<double> trapezoid_causal_convolution(std::span<const double> a, std::span<const double> b,
                                                        double h) {
  if (a.size() != b.size()) throw std::invalid_argument("trapezoid_causal_convolution: size mismatch");
  const std::size_t n = a.size();
  std::vector<double> full = linear_convolve(a, b);
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) out[k] = h * (full[k] - 0.5 * a[k] * b[0] - 0.5 * a[0] * b[k]);
  return out;
}

/// Trapezoid rule over equispaced samples with step h.
inline double trapezoid(std::span<const double> v, double h) {
  if (v.size() < 2) return 0.0;
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * h;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Regression standard error of the slope (0 when only two points).
  double slope_se = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit ols(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("ols: need at least two paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - fit.intercept - fit.slope * x[i];
      rss += e * e;
    }
    fit.slope_se = std::sqrt(rss / double(n - 2) / sxx);
  }
  return fit;
}

/// Slope of log(y) against log(x).
inline LinearFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) lx[i] = std::log(x[i]);
  for (std::size_t i = 0; i < y.size(); ++i) ly[i] = std::log(y[i]);
  return ols(lx, ly);
}

}  // namespace lapdecon
