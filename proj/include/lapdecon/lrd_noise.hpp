#pragma once

// Gaussian error processes: iid and fractional Gaussian noise (fGn), exact
// sampling as a linear map of iid normals, and covariance eigenvalue scaling.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "lapdecon/errors.hpp"
#include "lapdecon/numerics.hpp"
#include "lapdecon/rng.hpp"

namespace lapdecon {

enum class NoiseKind { IID, FGN };

inline std::string to_string(NoiseKind k) { return k == NoiseKind::IID ? "iid" : "fgn"; }

/// Error process sigma * eps with unit-variance eps.
/// alpha in (0, 1] is the long-memory parameter; fGn uses H = 1 - alpha/2.
struct NoiseModel {
  NoiseKind kind = NoiseKind::IID;
  double alpha = 1.0;
  double sigma = 1.0;

  NoiseModel() = default;
  NoiseModel(NoiseKind kind_, double alpha_, double sigma_) : kind(kind_), alpha(alpha_), sigma(sigma_) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("noise: alpha must lie in (0, 1]");
    if (!(sigma >= 0.0)) throw ConfigError("noise: sigma must be nonnegative");
    if (kind == NoiseKind::IID) alpha = 1.0;
  }

  static NoiseModel iid(double sigma) { return {NoiseKind::IID, 1.0, sigma}; }
  static NoiseModel fgn(double alpha, double sigma) { return {NoiseKind::FGN, alpha, sigma}; }

  double hurst() const { return kind == NoiseKind::IID ? 0.5 : 1.0 - 0.5 * alpha; }
};

/// Stationary autocovariance gamma(0..n-1) of the unit-variance process.
struct CovarianceSpec {
  std::vector<double> autocov;

  /// Dense Toeplitz matrix Sigma_n.
  Eigen::MatrixXd toeplitz() const {
    const auto n = static_cast<Eigen::Index>(autocov.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = autocov[static_cast<std::size_t>(std::abs(i - j))];
    return m;
  }
};

inline double fgn_autocov(double hurst, double lag) {
  const double k = std::abs(lag);
  const double two_h = 2.0 * hurst;
  return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(std::abs(k - 1.0), two_h));
}

inline CovarianceSpec autocovariance(const NoiseModel& model, int n) {
  if (n < 1) throw ConfigError("autocovariance: n must be >= 1");
  CovarianceSpec spec;
  spec.autocov.assign(static_cast<std::size_t>(n), 0.0);
  spec.autocov[0] = 1.0;
  if (model.kind == NoiseKind::FGN)
    for (int k = 1; k < n; ++k) spec.autocov[static_cast<std::size_t>(k)] = fgn_autocov(model.hurst(), k);
  return spec;
}

/// Exact sampler of sigma * eps_n, eps_n = A_n eta_n with iid standard
/// normal eta_n.
///
/// Primary path: circulant embedding of Sigma_n into a circulant matrix of
/// size m = next power of two >= 2(n-1) and multiplication by its spectral
/// square root, O(m log m) per draw. If the embedding has an eigenvalue below
/// -1e-10 the sampler falls back to a dense Cholesky factor of Sigma_n and
/// records a warning.
class NoiseSampler {
 public:
  NoiseSampler(const NoiseModel& model, int n) : model_(model), n_(n) {
    if (n < 1) throw ConfigError("sample_noise: n must be >= 1");
    if (model.kind == NoiseKind::IID || n == 1) return;
    const std::size_t m = next_pow2(2 * static_cast<std::size_t>(n - 1));
    std::vector<double> row(m / 2 + 1);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = fgn_autocov(model.hurst(), double(k));
    factor(row, autocovariance(model, n));
  }

  /// Sampler for an arbitrary stationary unit-variance covariance; the
  /// embedding pads autocov with zeros.
  NoiseSampler(const CovarianceSpec& cov, double sigma) : n_(static_cast<int>(cov.autocov.size())) {
    if (n_ < 1) throw ConfigError("sample_noise: n must be >= 1");
    model_.sigma = sigma;
    if (n_ == 1) return;
    std::vector<double> row(next_pow2(2 * static_cast<std::size_t>(n_ - 1)) / 2 + 1, 0.0);
    std::copy(cov.autocov.begin(), cov.autocov.end(), row.begin());
    factor(row, cov);
  }

  int size() const { return n_; }
  const NoiseModel& model() const { return model_; }
  /// Set when the dense fallback was used.
  const std::optional<std::string>& warning() const { return warning_; }

  std::vector<double> sample(std::uint64_t seed) const {
    NormalStream rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n_));
    if (!root_spectrum_.empty()) {
      const std::size_t m = root_spectrum_.size();
      std::vector<std::complex<double>> z(m), w;
      for (std::size_t k = 0; k < m; ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        z[k] = root_spectrum_[k] * std::complex<double>(re, im);
      }
      Eigen::FFT<double> fft;
      fft.fwd(w, z);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = model_.sigma * w[i].real();
      return out;
    }
    Eigen::VectorXd eta(n_);
    for (int i = 0; i < n_; ++i) eta(i) = rng.normal();
    if (dense_factor_.size() > 0) eta = dense_factor_ * eta;
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = model_.sigma * eta(i);
    return out;
  }

 private:
  // half_row holds lags 0..m/2 of the circulant's first row.
  void factor(const std::vector<double>& half_row, const CovarianceSpec& cov) {
    const std::size_t m = 2 * (half_row.size() - 1);
    std::vector<double> row(m);
    for (std::size_t k = 0; k <= m / 2; ++k) row[k] = half_row[k];
    for (std::size_t k = m / 2 + 1; k < m; ++k) row[k] = row[m - k];
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, row);
    double min_eig = 0.0;
    for (const auto& s : spectrum) min_eig = std::min(min_eig, s.real());
    if (min_eig < -1e-10) {
      warning_ = "circulant embedding not nonnegative (min eigenvalue " + std::to_string(min_eig) +
                 "); using dense factorization";
      Eigen::LLT<Eigen::MatrixXd> llt(cov.toeplitz());
      if (llt.info() != Eigen::Success)
        throw EmbeddingFailure("sample_noise: covariance is numerically not positive definite");
      dense_factor_ = llt.matrixL();
      return;
    }
    root_spectrum_.resize(m);
    for (std::size_t k = 0; k < m; ++k) root_spectrum_[k] = std::sqrt(std::max(0.0, spectrum[k].real()) / double(m));
  }

  NoiseModel model_;
  int n_;
  std::vector<double> root_spectrum_;
  Eigen::MatrixXd dense_factor_;
  std::optional<std::string> warning_;
};

inline std::vector<double> sample_noise(const NoiseModel& model, int n, std::uint64_t seed) {
  return NoiseSampler(model, n).sample(seed);
}

struct EigenRow {
  int n = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

struct EigenEnvelope {
  std::vector<EigenRow> rows;
  /// log-log slope of lambda_max against n (needs >= 2 distinct n).
  std::optional<LinearFit> slope;
};

inline constexpr int kEigenSizeCap = 4096;

/// Extreme eigenvalues of the unit-variance Sigma_n via dense symmetric
/// eigensolve. An exactly diagonal Sigma_n (iid, or fGn with alpha = 1) is
/// read off without a solve.
inline EigenEnvelope eigen_envelope(const NoiseModel& model, const std::vector<int>& n_list,
                                    int cap = kEigenSizeCap) {
  EigenEnvelope env;
  for (int n : n_list) {
    if (n < 1 || n > cap)
      throw ConfigError("eigen_envelope: n = " + std::to_string(n) + " outside [1, " + std::to_string(cap) + "]");
    const CovarianceSpec cov = autocovariance(model, n);
    const bool diagonal = std::all_of(cov.autocov.begin() + 1, cov.autocov.end(), [](double v) { return v == 0.0; });
    if (diagonal) {
      env.rows.push_back({n, cov.autocov[0], cov.autocov[0]});
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov.toeplitz(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("eigen_envelope: eigensolver failed");
    env.rows.push_back({n, solver.eigenvalues()(0), solver.eigenvalues()(n - 1)});
  }
  if (env.rows.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& r : env.rows) {
      x.push_back(r.n);
      y.push_back(r.lambda_max);
    }
    bool distinct = false;
    for (double v : x) distinct = distinct || v != x.front();
    if (distinct) env.slope = loglog_fit(x, y);
  }
  return env;
}

}  // namespace lapdecon
