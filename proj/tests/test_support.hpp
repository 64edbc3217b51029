#pragma once

// Independent reference computations for the tests. Everything here works
// from the model definition dyad by dyad and never calls the library's
// kernels or conditionals.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dame/generator.hpp"
#include "dame/model.hpp"

namespace oracle {

using dame::Matrix;
using dame::Vector;

inline double predictor(const dame::Model& m, const dame::ParameterState& s, int t, int i, int j) {
  double eta = 0.0;
  for (int p = 0; p < m.P(); ++p) eta += s.beta(p, t) * m.data().covariates.at(t, p)(i, j);
  if (m.config().has_theta()) eta += s.theta(i, t) + s.theta(j, t);
  const Vector d = dame::effective_d(s, m.config(), t);
  for (int r = 0; r < m.R(); ++r) eta += s.u[t](i, r) * d[r] * s.u[t](j, r);
  return eta;
}

/// y^t_ij on an available dyad: the observed value or the current imputation.
inline double response(const dame::Model& m, const dame::ParameterState& s, int t, int i, int j) {
  if (i < j) std::swap(i, j);
  if (m.data().network.is_observed(t, i, j)) return m.data().network.values[t](i, j);
  const auto& miss = m.random_missing();
  for (std::size_t k = 0; k < miss.size(); ++k) {
    if (miss[k].t == t && miss[k].i == i && miss[k].j == j) return s.imputed[static_cast<Eigen::Index>(k)];
  }
  throw std::logic_error("response requested at a structural position");
}

struct Dyad {
  int t, i, j;
};

inline std::vector<Dyad> available_dyads(const dame::Model& m) {
  std::vector<Dyad> out;
  for (int t = 0; t < m.T(); ++t)
    for (int i = 0; i < m.N(); ++i)
      for (int j = 0; j < i; ++j)
        if (m.data().availability.dyad(t, i, j)) out.push_back({t, i, j});
  return out;
}

inline double residual(const dame::Model& m, const dame::ParameterState& s, const Dyad& d) {
  return response(m, s, d.t, d.i, d.j) - predictor(m, s, d.t, d.i, d.j);
}

/// Linear-Gaussian posterior of a coefficient vector b from the stacked
/// regression e = Z b + noise, noise ~ N(0, sigma2 I), prior b ~ N(0, prior_cov).
struct Posterior {
  Vector mean;
  Matrix cov;
};

inline Posterior regression_posterior(const Matrix& Z, const Vector& e, double sigma2, const Matrix& prior_cov) {
  const Matrix prec = prior_cov.inverse() + Z.transpose() * Z / sigma2;
  Posterior post;
  post.cov = prec.inverse();
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  post.mean = post.cov * (Z.transpose() * e / sigma2);
  return post;
}

inline Matrix prior_cov(const dame::GpHyper& h, int T) {
  Matrix f(T, T);
  for (int a = 0; a < T; ++a)
    for (int b = 0; b < T; ++b) f(a, b) = h.kappa == 0.0 ? (a == b ? 1.0 : 0.0) : std::exp(-std::abs(a - b) / h.kappa);
  return h.tau * f;
}

// Dense oracles for each Gibbs block: stack every available dyad as one
// regression row whose response is the residual with the block's own
// contribution added back.

inline Posterior beta_block(const dame::Model& m, const dame::ParameterState& s, int p) {
  const auto dyads = available_dyads(m);
  Matrix Z = Matrix::Zero(static_cast<Eigen::Index>(dyads.size()), m.T());
  Vector e(static_cast<Eigen::Index>(dyads.size()));
  for (std::size_t k = 0; k < dyads.size(); ++k) {
    const auto& d = dyads[k];
    const double x = m.data().covariates.at(d.t, p)(d.i, d.j);
    Z(static_cast<Eigen::Index>(k), d.t) = x;
    e[static_cast<Eigen::Index>(k)] = residual(m, s, d) + s.beta(p, d.t) * x;
  }
  return regression_posterior(Z, e, s.sigma2, prior_cov(s.hyper_beta[p], m.T()));
}

inline Posterior theta_block(const dame::Model& m, const dame::ParameterState& s, int node) {
  std::vector<Dyad> rows;
  for (const auto& d : available_dyads(m))
    if (d.i == node || d.j == node) rows.push_back(d);
  Matrix Z = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), m.T());
  Vector e(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& d = rows[k];
    Z(static_cast<Eigen::Index>(k), d.t) = 1.0;
    e[static_cast<Eigen::Index>(k)] = residual(m, s, d) + s.theta(node, d.t);
  }
  return regression_posterior(Z, e, s.sigma2, prior_cov(s.hyper_theta, m.T()));
}

inline Posterior d_block(const dame::Model& m, const dame::ParameterState& s, int r) {
  const auto dyads = available_dyads(m);
  Matrix Z = Matrix::Zero(static_cast<Eigen::Index>(dyads.size()), m.T());
  Vector e(static_cast<Eigen::Index>(dyads.size()));
  for (std::size_t k = 0; k < dyads.size(); ++k) {
    const auto& d = dyads[k];
    const double z = s.u[d.t](d.i, r) * s.u[d.t](d.j, r);
    Z(static_cast<Eigen::Index>(k), d.t) = z;
    e[static_cast<Eigen::Index>(k)] = residual(m, s, d) + s.d(r, d.t) * z;
  }
  return regression_posterior(Z, e, s.sigma2, prior_cov(s.hyper_d[r], m.T()));
}

inline Posterior u_block(const dame::Model& m, const dame::ParameterState& s, int t, int node) {
  const int R = m.R();
  const Vector dv = dame::effective_d(s, m.config(), t);
  std::vector<int> partners;
  for (int j = 0; j < m.N(); ++j)
    if (m.data().availability.dyad(t, node, j)) partners.push_back(j);
  Matrix Z(static_cast<Eigen::Index>(partners.size()), R);
  Vector e(static_cast<Eigen::Index>(partners.size()));
  for (std::size_t k = 0; k < partners.size(); ++k) {
    const int j = partners[k];
    double own = 0.0;
    for (int r = 0; r < R; ++r) {
      Z(static_cast<Eigen::Index>(k), r) = dv[r] * s.u[t](j, r);
      own += s.u[t](node, r) * dv[r] * s.u[t](j, r);
    }
    e[static_cast<Eigen::Index>(k)] = residual(m, s, {t, node, j}) + own;
  }
  Matrix prior = Matrix::Zero(R, R);
  for (int r = 0; r < R; ++r) prior(r, r) = s.tau_u(r, t);
  return regression_posterior(Z, e, s.sigma2, prior);
}

// ---------------------------------------------------------------------------
// Small datasets

inline dame::SimulatedData small_sim(int N, int T, int P, int R, std::uint64_t seed, double holdout = 0.0) {
  dame::SimConfig sc;
  sc.N = N;
  sc.T = T;
  sc.P = P;
  sc.R = R;
  sc.kappa_beta = sc.kappa_theta = sc.kappa_d = 2.0;
  sc.holdout_fraction = holdout;
  sc.seed = seed;
  return dame::simulate_dataset(sc);
}

/// Marks node `node` unavailable at timepoints [from, to) and clears its
/// observations there.
inline void make_absent(dame::Dataset& data, int node, int from, int to) {
  for (int t = from; t < to; ++t) {
    data.availability.available(node, t) = 0;
    for (int j = 0; j < data.network.num_nodes(); ++j)
      if (j != node) data.network.set_missing(t, node, j);
  }
}

/// A state with every block randomized, for conditional checks.
inline dame::ParameterState random_state(const dame::Model& m, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  auto s = dame::ParameterState::zeros(m.P(), m.N(), m.R(), m.T(), m.random_missing().size());
  for (int p = 0; p < m.P(); ++p) {
    for (int t = 0; t < m.T(); ++t) s.beta(p, t) = z(g);
    s.hyper_beta[p] = {unif(g), unif(g)};
  }
  for (int i = 0; i < m.N(); ++i)
    for (int t = 0; t < m.T(); ++t) s.theta(i, t) = m.config().has_theta() ? z(g) : 0.0;
  s.hyper_theta = {unif(g), unif(g)};
  for (int r = 0; r < m.R(); ++r) {
    for (int t = 0; t < m.T(); ++t) {
      s.d(r, t) = m.config().form == dame::MultiplicativeForm::kInner ? 1.0 : z(g);
      s.tau_u(r, t) = unif(g);
    }
    s.hyper_d[r] = {unif(g), unif(g)};
  }
  for (auto& ut : s.u)
    for (Eigen::Index k = 0; k < ut.size(); ++k) ut.data()[k] = z(g);
  for (Eigen::Index k = 0; k < s.imputed.size(); ++k) s.imputed[k] = z(g);
  s.sigma2 = unif(g);
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dame_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data(), [](double x, double y) {
           return std::memcmp(&x, &y, sizeof x) == 0;
         });
}

inline bool bit_equal(const dame::ParameterState& a, const dame::ParameterState& b) {
  auto same = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
  if (!bit_equal(a.beta, b.beta) || !bit_equal(a.theta, b.theta) || !bit_equal(a.d, b.d) ||
      !bit_equal(a.tau_u, b.tau_u) || !bit_equal(a.imputed, b.imputed) || !same(a.sigma2, b.sigma2))
    return false;
  for (std::size_t t = 0; t < a.u.size(); ++t)
    if (!bit_equal(a.u[t], b.u[t])) return false;
  for (std::size_t p = 0; p < a.hyper_beta.size(); ++p)
    if (!same(a.hyper_beta[p].tau, b.hyper_beta[p].tau) || !same(a.hyper_beta[p].kappa, b.hyper_beta[p].kappa))
      return false;
  for (std::size_t r = 0; r < a.hyper_d.size(); ++r)
    if (!same(a.hyper_d[r].tau, b.hyper_d[r].tau) || !same(a.hyper_d[r].kappa, b.hyper_d[r].kappa)) return false;
  return same(a.hyper_theta.tau, b.hyper_theta.tau) && same(a.hyper_theta.kappa, b.hyper_theta.kappa);
}

}  // namespace oracle
