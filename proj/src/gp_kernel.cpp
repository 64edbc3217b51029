#include "dame/gp_kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dame/errors.hpp"

namespace dame {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const Vector diag = llt.matrixLLT().diagonal();
  return diag.allFinite() && (diag.array() > 0.0).all();
}

}  // namespace

void PriorConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("priors.") + name + " must be > 0");
  };
  positive(a, "a");
  positive(b, "b");
  positive(a_sigma, "a_sigma");
  positive(b_sigma, "b_sigma");
  positive(a_u, "a_u");
  positive(b_u, "b_u");
  positive(gamma, "gamma");
  positive(kappa_max, "kappa_max");
}

std::vector<double> unit_times(int num_times) {
  std::vector<double> times(num_times);
  for (int t = 0; t < num_times; ++t) times[t] = t + 1.0;
  return times;
}

Matrix exp_covariance(double kappa, std::span<const double> times, KernelShape shape) {
  const int T = static_cast<int>(times.size());
  if (kappa == 0.0) return Matrix::Identity(T, T);
  Matrix f(T, T);
  for (int s = 0; s < T; ++s) {
    f(s, s) = 1.0;
    for (int t = s + 1; t < T; ++t) {
      double dist = std::abs(times[s] - times[t]);
      if (shape == KernelShape::kSquaredExponential) dist *= dist;
      f(s, t) = f(t, s) = std::exp(-dist / kappa);
    }
  }
  return f;
}

Matrix exp_covariance(double kappa, int num_times, KernelShape shape) {
  const auto times = unit_times(num_times);
  return exp_covariance(kappa, times, shape);
}

CovarianceMatrix CovarianceMatrix::from_correlation(const Matrix& correlation, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw NumericalError("covariance scale tau must be positive and finite, got " + std::to_string(tau));
  }
  const int T = static_cast<int>(correlation.rows());
  CovarianceMatrix cov;
  cov.tau_ = tau;
  Eigen::LLT<Matrix> llt(correlation);
  double jitter = 0.0;
  for (double eps = 1e-10; !factor_ok(llt); eps *= 10.0) {
    if (eps > 1.0001e-6) {
      throw NumericalError("Cholesky factorization failed with jitter up to 1e-6 (T=" + std::to_string(T) + ")");
    }
    jitter = eps;
    llt.compute(correlation + eps * Matrix::Identity(T, T));
  }
  cov.jitter_ = jitter;
  cov.correlation_ = correlation;
  if (jitter > 0.0) cov.correlation_.diagonal().array() += jitter;
  cov.lower_ = std::sqrt(tau) * llt.matrixL().toDenseMatrix();
  cov.log_det_ = 2.0 * cov.lower_.diagonal().array().log().sum();
  return cov;
}

Matrix CovarianceMatrix::matrix() const { return tau_ * correlation_; }

Vector CovarianceMatrix::solve(const Vector& x) const {
  const auto L = lower_.triangularView<Eigen::Lower>();
  return L.transpose().solve(L.solve(x));
}

Matrix CovarianceMatrix::inverse() const {
  const auto L = lower_.triangularView<Eigen::Lower>();
  Matrix linv = L.solve(Matrix::Identity(dim(), dim()));
  return linv.transpose() * linv;
}

double CovarianceMatrix::quad_form(const Vector& x) const {
  return lower_.triangularView<Eigen::Lower>().solve(x).squaredNorm();
}

CovarianceMatrix scaled_covariance(const GpHyper& h, std::span<const double> times, KernelShape shape) {
  return CovarianceMatrix::from_correlation(exp_covariance(h.kappa, times, shape), h.tau);
}

double mvn_logpdf(const Vector& x, const Vector& mean, const CovarianceMatrix& cov) {
  if (x.size() != cov.dim() || mean.size() != cov.dim()) {
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  }
  return -0.5 * (cov.dim() * kLog2Pi + cov.log_det() + cov.quad_form(x - mean));
}

Vector mvn_sample(Rng& rng, const Vector& mean, const CovarianceMatrix& cov) {
  Vector z(cov.dim());
  for (int k = 0; k < z.size(); ++k) z[k] = rng.normal();
  return mean + cov.lower() * z;
}

Vector GaussianConditional::mean() const {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("conditional precision is not positive definite");
  return llt.solve(linear);
}

Matrix GaussianConditional::covariance() const {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("conditional precision is not positive definite");
  return llt.solve(Matrix::Identity(precision.rows(), precision.cols()));
}

Vector GaussianConditional::sample(Rng& rng) const {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("conditional precision is not positive definite");
  const auto L = llt.matrixL();
  Vector z(precision.rows());
  for (int k = 0; k < z.size(); ++k) z[k] = rng.normal();
  // mean = L'^{-1} L^{-1} h ; L'^{-1} z has covariance Q^{-1}.
  Vector w = L.solve(linear) + z;
  return L.transpose().solve(w);
}

double ig_logpdf(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ig_logpdf: shape and scale must be > 0");
  if (!(x > 0.0)) throw std::invalid_argument("ig_logpdf: x must be > 0");
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double ig_sample(Rng& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ig_sample: shape and scale must be > 0");
  return b / rng.gamma(a);
}

double half_cauchy_logpdf(double kappa, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("half_cauchy_logpdf: gamma must be > 0");
  if (kappa < 0.0) throw std::invalid_argument("half_cauchy_logpdf: kappa must be >= 0");
  const double r = kappa / gamma;
  return std::log(2.0 / (std::numbers::pi * gamma)) - std::log1p(r * r);
}

}  // namespace dame
