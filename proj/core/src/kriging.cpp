#include "cpodem/kriging.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cpodem/error.hpp"
#include "cpodem/maxpro.hpp"

namespace cpodem {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Squared coordinate differences per dimension, reused across likelihood evaluations.
std::vector<Eigen::MatrixXd> squared_differences(const Eigen::MatrixXd& X) {
  const auto n = X.rows();
  std::vector<Eigen::MatrixXd> D(static_cast<std::size_t>(X.cols()), Eigen::MatrixXd::Zero(n, n));
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    auto& Dk = D[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = X(i, k) - X(j, k);
        Dk(i, j) = Dk(j, i) = d * d;
      }
    }
  }
  return D;
}

Eigen::MatrixXd correlation_from(const std::vector<Eigen::MatrixXd>& D, const Eigen::VectorXd& eta, Eigen::Index n) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < D.size(); ++k) E.noalias() -= eta(static_cast<Eigen::Index>(k)) * D[k];
  return E.array().exp().matrix();
}

struct Profile {
  double loglik = kNegInf;
  double mu = 0.0;
  double sigma2 = 0.0;
  double one_rinv_one = 1.0;
  Eigen::MatrixXd R;  // without nugget
  Eigen::MatrixXd L;
  Eigen::VectorXd alpha;
};

bool evaluate_profile(const std::vector<Eigen::MatrixXd>& D, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                      double nugget, Profile& out) {
  const auto n = y.size();
  out.R = correlation_from(D, eta, n);
  Eigen::MatrixXd A = out.R;
  A.diagonal().array() += nugget;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return false;
  out.L = llt.matrixL();
  if ((out.L.diagonal().array() <= 0.0).any()) return false;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd rinv1 = llt.solve(ones);
  const Eigen::VectorXd rinvy = llt.solve(y);
  out.one_rinv_one = ones.dot(rinv1);
  if (!(out.one_rinv_one > 0.0) || !std::isfinite(out.one_rinv_one)) return false;
  out.mu = ones.dot(rinvy) / out.one_rinv_one;
  out.alpha = rinvy - out.mu * rinv1;
  out.sigma2 = (y.array() - out.mu).matrix().dot(out.alpha) / static_cast<double>(n);
  if (!(out.sigma2 > 0.0) || !std::isfinite(out.sigma2)) return false;
  const double logdet = 2.0 * out.L.diagonal().array().log().sum();
  out.loglik = -0.5 * static_cast<double>(n) * std::log(out.sigma2) - 0.5 * logdet;
  return std::isfinite(out.loglik);
}

double loglik_and_gradient(const std::vector<Eigen::MatrixXd>& D, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& eta, double nugget, Eigen::VectorXd* grad,
                           double* grad_log_nugget = nullptr) {
  Profile pr;
  if (!evaluate_profile(D, y, eta, nugget, pr)) return kNegInf;
  if (grad || grad_log_nugget) {
    const auto n = y.size();
    Eigen::MatrixXd Rinv = Eigen::MatrixXd::Identity(n, n);
    pr.L.triangularView<Eigen::Lower>().solveInPlace(Rinv);
    pr.L.triangularView<Eigen::Lower>().transpose().solveInPlace(Rinv);
    const Eigen::MatrixXd M =
        ((pr.alpha * pr.alpha.transpose()) / pr.sigma2 - Rinv).cwiseProduct(pr.R);
    if (grad) {
      grad->resize(eta.size());
      for (std::size_t k = 0; k < D.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        (*grad)(kk) = -0.5 * eta(kk) * M.cwiseProduct(D[k]).sum();
      }
    }
    if (grad_log_nugget) {
      *grad_log_nugget = 0.5 * nugget * (pr.alpha.squaredNorm() / pr.sigma2 - Rinv.trace());
    }
  }
  return pr.loglik;
}

bool is_constant(const Eigen::VectorXd& y) {
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  return (y.maxCoeff() - y.minCoeff()) <= 1e-14 * scale;
}

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() < 2) throw Error(ErrorKind::InvalidArgument, "kriging needs at least two training points");
  if (X.rows() != y.size()) throw Error(ErrorKind::ShapeMismatch, "one response per training design required");
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorKind::InvalidArgument, "training data must be finite");
}

}  // namespace

double gaussian_correlation(std::span<const double> a, std::span<const double> b, std::span<const double> eta) {
  if (a.size() != b.size() || a.size() != eta.size()) {
    throw Error(ErrorKind::ShapeMismatch, "correlation arguments differ in dimension");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += eta[k] * d * d;
  }
  return std::exp(-s);
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& eta) {
  if (eta.size() != X.cols()) throw Error(ErrorKind::ShapeMismatch, "eta does not match the design dimension");
  return correlation_from(squared_differences(X), eta, X.rows());
}

GPModel GPModel::with_eta(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                          double nugget) {
  check_inputs(X, y);
  if (eta.size() != X.cols()) throw Error(ErrorKind::ShapeMismatch, "eta does not match the design dimension");
  if (is_constant(y)) return constant(X, y, eta, nugget);
  Profile pr;
  if (!evaluate_profile(squared_differences(X), y, eta, nugget, pr)) {
    throw Error(ErrorKind::IllConditioned, "correlation matrix is not positive definite at the given eta");
  }
  GPModel m;
  m.X_ = X;
  m.y_ = y;
  m.eta_ = eta;
  m.nugget_ = nugget;
  m.mu_ = pr.mu;
  m.sigma2_ = pr.sigma2;
  m.loglik_ = pr.loglik;
  m.L_ = std::move(pr.L);
  m.alpha_ = std::move(pr.alpha);
  m.one_rinv_one_ = pr.one_rinv_one;
  return m;
}

GPModel GPModel::constant(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                          double nugget) {
  GPModel m;
  m.X_ = X;
  m.y_ = y;
  m.eta_ = eta;
  m.nugget_ = nugget;
  m.mu_ = y.mean();
  m.sigma2_ = 0.0;
  m.loglik_ = std::numeric_limits<double>::infinity();
  m.degenerate_ = true;
  m.alpha_ = Eigen::VectorXd::Zero(y.size());
  return m;
}

GPPrediction GPModel::predict(std::span<const double> c) const {
  if (static_cast<Eigen::Index>(c.size()) != X_.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "prediction point has the wrong dimension");
  }
  if (degenerate_) return {mu_, 0.0};
  const auto n = X_.rows();
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < X_.cols(); ++k) {
      const double d = X_(i, k) - c[static_cast<std::size_t>(k)];
      s += eta_(k) * d * d;
    }
    r(i) = std::exp(-s);
  }
  GPPrediction p;
  p.mean = mu_ + r.dot(alpha_);
  // u = R^-1 r via the stored factor.
  Eigen::VectorXd u = r;
  L_.triangularView<Eigen::Lower>().solveInPlace(u);
  const double rtr = u.squaredNorm();
  L_.triangularView<Eigen::Lower>().transpose().solveInPlace(u);
  const double gap = 1.0 - u.sum();
  p.variance = std::max(0.0, sigma2_ * (1.0 - rtr + gap * gap / one_rinv_one_));
  return p;
}

double GPModel::predict_mean(std::span<const double> c) const {
  if (degenerate_) return mu_;
  double s = mu_;
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    double q = 0.0;
    for (Eigen::Index k = 0; k < X_.cols(); ++k) {
      const double d = X_(i, k) - c[static_cast<std::size_t>(k)];
      q += eta_(k) * d * d;
    }
    s += alpha_(i) * std::exp(-q);
  }
  return s;
}

double profile_log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                              double nugget, Eigen::VectorXd* grad_log_eta) {
  check_inputs(X, y);
  if (eta.size() != X.cols()) throw Error(ErrorKind::ShapeMismatch, "eta does not match the design dimension");
  return loglik_and_gradient(squared_differences(X), y, eta, nugget, grad_log_eta);
}

GPModel fit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPFitOptions& options, GPFitTrace* trace) {
  check_inputs(X, y);
  const auto p = X.cols();
  if (is_constant(y)) {
    if (trace) *trace = {};
    return GPModel::constant(X, y, Eigen::VectorXd::Ones(p), options.nugget);
  }
  const auto D = squared_differences(X);
  const bool fit_nugget = options.estimate_nugget;
  const double log_g_lo = std::log(std::max(options.nugget, 1e-12));
  const double log_g_hi = std::log(std::max(options.max_nugget, std::max(options.nugget, 1e-12)));
  // The optimization vector is log eta, followed by log nugget when it is estimated.
  const Objective negll = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const Eigen::VectorXd eta = x.head(p).array().exp().matrix();
    const double nugget = fit_nugget ? std::exp(x(p)) : options.nugget;
    Eigen::VectorXd ge;
    double gn = 0.0;
    const double ll = loglik_and_gradient(D, y, eta, nugget, &ge, fit_nugget ? &gn : nullptr);
    if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
    g.resize(x.size());
    g.head(p) = -ge;
    if (fit_nugget) g(p) = -gn;
    return -ll;
  };

  const auto q = p + (fit_nugget ? 1 : 0);
  const std::size_t starts = std::max<std::size_t>(options.n_starts, 1);
  Eigen::MatrixXd unit = starts >= 2 ? random_latin_hypercube(starts, static_cast<std::size_t>(q), options.seed)
                                     : Eigen::MatrixXd::Constant(1, q, 0.5);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(q, options.log_eta_lo);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(q, options.log_eta_hi);
  if (fit_nugget) {
    lo(p) = log_g_lo;
    hi(p) = log_g_hi;
  }

  GPFitTrace local;
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (std::size_t s = 0; s < starts; ++s) {
    Eigen::VectorXd x0 = (options.start_lo + (options.start_hi - options.start_lo) *
                                                 unit.row(static_cast<Eigen::Index>(s)).array())
                             .matrix()
                             .transpose();
    if (fit_nugget) x0(p) = log_g_lo + (log_g_hi - log_g_lo) * unit(static_cast<Eigen::Index>(s), p);
    Eigen::VectorXd g0;
    const double f0 = negll(x0, g0);
    local.start_loglik.push_back(-f0);
    if (!std::isfinite(f0)) {
      local.final_loglik.push_back(kNegInf);
      continue;
    }
    const auto res = minimize_lbfgs(negll, x0, lo, hi, options.lbfgs);
    local.final_loglik.push_back(-res.f);
    if (res.f < best_f) {
      best_f = res.f;
      best_x = res.x;
      local.best_start = s;
    }
  }
  if (!std::isfinite(best_f)) {
    throw Error(ErrorKind::IllConditioned, "correlation matrix could not be factored at any start");
  }
  if (trace) *trace = std::move(local);
  const double nugget = fit_nugget ? std::exp(best_x(p)) : options.nugget;
  return GPModel::with_eta(X, y, best_x.head(p).array().exp().matrix(), nugget);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "quantile level must lie in (0, 1)");
  // Acklam's rational approximation, then one Halley step against erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  double x = 0.0;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - 0.02425) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double confidence_halfwidth(double variance, double level) {
  if (variance < 0.0) throw Error(ErrorKind::InvalidArgument, "variance must be non-negative");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidArgument, "confidence level must lie in (0, 1)");
  return normal_quantile(0.5 * (1.0 + level)) * std::sqrt(variance);
}

}  // namespace cpodem
