#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dame/rng.hpp"

namespace dame {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// GP hyperparameters: variance multiplier tau and length-scale kappa (in time units).
struct GpHyper {
  double tau = 1.0;
  double kappa = 1.0;
};

/// Inverse-Gamma / half-Cauchy hyperparameters.
struct PriorConfig {
  double a = 2.0;  // IG shape for the GP variances tau
  double b = 1.0;  // IG scale for the GP variances tau
  double a_sigma = 2.0;
  double b_sigma = 1.0;
  double a_u = 2.0;  // IG prior of the latent-position variances tau^u
  double b_u = 1.0;
  double gamma = 5.0;  // half-Cauchy scale of kappa
  double kappa_max = 1e3;

  void validate() const;  // throws ConfigError
};

enum class KernelShape { kExponential, kSquaredExponential };

std::vector<double> unit_times(int num_times);

/// Correlation matrix f(kappa) with entries exp(-|t - t'| / kappa), or
/// exp(-|t - t'|^2 / kappa) for the squared shape. kappa == 0 gives the identity.
Matrix exp_covariance(double kappa, std::span<const double> times,
                      KernelShape shape = KernelShape::kExponential);
Matrix exp_covariance(double kappa, int num_times, KernelShape shape = KernelShape::kExponential);

/// tau * f(kappa) together with its Cholesky factor.
///
/// The factorization is done on the unit-diagonal correlation matrix and then
/// scaled by sqrt(tau), so tiny or huge tau never affects conditioning. When the
/// plain factorization fails, a diagonal jitter escalating from 1e-10 to 1e-6
/// is added to the correlation matrix; `jitter()` reports what was used.
class CovarianceMatrix {
 public:
  /// Throws NumericalError if the correlation matrix cannot be factored with jitter <= 1e-6.
  static CovarianceMatrix from_correlation(const Matrix& correlation, double tau);

  int dim() const { return static_cast<int>(lower_.rows()); }
  double tau() const { return tau_; }
  double jitter() const { return jitter_; }
  double log_det() const { return log_det_; }

  Matrix matrix() const;                         // tau * (f + jitter I)
  const Matrix& lower() const { return lower_; }  // L with L L' = matrix()

  Vector solve(const Vector& x) const;  // matrix()^{-1} x
  Matrix inverse() const;
  double quad_form(const Vector& x) const;  // x' matrix()^{-1} x

 private:
  Matrix lower_;
  Matrix correlation_;
  double tau_ = 1.0;
  double jitter_ = 0.0;
  double log_det_ = 0.0;
};

CovarianceMatrix scaled_covariance(const GpHyper& h, std::span<const double> times,
                                   KernelShape shape = KernelShape::kExponential);

double mvn_logpdf(const Vector& x, const Vector& mean, const CovarianceMatrix& cov);
Vector mvn_sample(Rng& rng, const Vector& mean, const CovarianceMatrix& cov);

/// Gaussian in information form: precision Q and linear term h, so that the
/// mean is Q^{-1} h and the covariance Q^{-1}. All Gibbs full conditionals
/// are built this way.
struct GaussianConditional {
  Matrix precision;
  Vector linear;

  Vector mean() const;
  Matrix covariance() const;
  /// One draw; throws NumericalError when the precision is not positive definite.
  Vector sample(Rng& rng) const;
};

double ig_logpdf(double x, double a, double b);
double ig_sample(Rng& rng, double a, double b);
double half_cauchy_logpdf(double kappa, double gamma);

}  // namespace dame
