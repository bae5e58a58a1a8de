#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "cpodem/lbfgs.hpp"

namespace cpodem {

/// exp(-sum_k eta_k (a_k - b_k)^2).
double gaussian_correlation(std::span<const double> a, std::span<const double> b, std::span<const double> eta);

/// Correlation matrix of the rows of X (no nugget).
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& eta);

struct GPPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Ordinary kriging model with constant mean and Gaussian correlation.
/// Immutable after fitting; predict is thread-safe.
class GPModel {
 public:
  GPModel() = default;

  /// Model at fixed eta with the generalized-least-squares mu and the
  /// profile sigma^2. Throws IllConditioned if R + nugget I is not positive definite.
  static GPModel with_eta(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                          double nugget);

  /// Constant-response model: mu = y, sigma^2 = 0, flagged degenerate.
  static GPModel constant(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                          double nugget);

  GPPrediction predict(std::span<const double> c) const;
  double predict_mean(std::span<const double> c) const;

  double mu() const noexcept { return mu_; }
  double sigma2() const noexcept { return sigma2_; }
  const Eigen::VectorXd& eta() const noexcept { return eta_; }
  double nugget() const noexcept { return nugget_; }
  bool degenerate() const noexcept { return degenerate_; }
  double log_likelihood() const noexcept { return loglik_; }
  const Eigen::MatrixXd& designs() const noexcept { return X_; }
  const Eigen::VectorXd& responses() const noexcept { return y_; }
  /// Lower Cholesky factor of R + nugget I.
  const Eigen::MatrixXd& factor() const noexcept { return L_; }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::VectorXd eta_;
  double nugget_ = 0.0;
  double mu_ = 0.0;
  double sigma2_ = 0.0;
  double loglik_ = 0.0;
  bool degenerate_ = false;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;    // R^-1 (y - mu 1)
  double one_rinv_one_ = 1.0;
};

/// Concentrated log-likelihood -(n/2) log sigma^2 - (1/2) log|R| at eta, with
/// its gradient with respect to log eta when `grad_log_eta` is non-null.
/// Returns -infinity when R + nugget I cannot be factored.
double profile_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                              double nugget, Eigen::VectorXd* grad_log_eta = nullptr);

struct GPFitOptions {
  double nugget = 1e-8;
  std::size_t n_starts = 8;
  std::uint64_t seed = 0;
  double log_eta_lo = -6.0;
  double log_eta_hi = 8.0;
  double start_lo = -2.0;  ///< multi-starts are spread over [start_lo, start_hi] in log eta
  double start_hi = 4.0;
  /// Treat the nugget as a likelihood hyperparameter in [nugget, max_nugget]
  /// (log scale) instead of a fixed value. For noisy responses.
  bool estimate_nugget = false;
  double max_nugget = 1e-2;
  LbfgsOptions lbfgs{};
};

struct GPFitTrace {
  std::vector<double> start_loglik;
  std::vector<double> final_loglik;
  std::size_t best_start = 0;
};

/// Maximum-likelihood fit over log eta by multi-start L-BFGS. Constant
/// responses return a degenerate model without optimizing. Throws
/// IllConditioned when no start yields a factorizable correlation matrix.
GPModel fit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPFitOptions& options = {},
                GPFitTrace* trace = nullptr);

/// Standard normal quantile.
double normal_quantile(double p);

/// One-sided half-width z_{(1+level)/2} sqrt(variance) of a central interval.
double confidence_halfwidth(double variance, double level = 0.80);

}  // namespace cpodem
