#include "kernels_detail.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dame/rng.hpp"

namespace dame::kernels {
namespace detail {

void predictor_slice(const Model& model, const ParameterState& s, int t, Matrix& eta) {
  const int N = model.N();
  eta.setZero(N, N);
  for (int p = 0; p < model.P(); ++p) eta.noalias() += s.beta(p, t) * model.data().covariates.at(t, p);
  if (model.config().has_theta()) {
    eta.colwise() += s.theta.col(t);
    eta.rowwise() += s.theta.col(t).transpose();
  }
  if (model.R() > 0) {
    const Vector dvec = effective_d(s, model.config(), t);
    const Matrix& u = s.u[t];
    eta.noalias() += u * dvec.asDiagonal() * u.transpose();
  }
  eta.diagonal().setZero();
}

void residual_slice(const Model& model, const ParameterState& s, int t, Matrix& e) {
  predictor_slice(model, s, t, e);
  e = (model.weight(t).array() != 0.0).select(model.response(t) - e, 0.0);
}

void fill_imputed(const Model& model, const ParameterState& s, ResidualTensor& out) {
  // E = (Y - eta) W was computed with Y = 0 at random-missing slots; add the imputed values.
  const auto& missing = model.random_missing();
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const auto& m = missing[k];
    out[m.t](m.i, m.j) += s.imputed[static_cast<Eigen::Index>(k)];
    out[m.t](m.j, m.i) = out[m.t](m.i, m.j);
  }
}

Network replicate_one(const Model& model, const ParameterState& draw, std::uint64_t seed) {
  const int T = model.T();
  const int N = model.N();
  Rng rng(seed);
  const double sd = std::sqrt(draw.sigma2);
  Network net(T);
  for (int t = 0; t < T; ++t) {
    Matrix& y = net[t];
    predictor_slice(model, draw, t, y);
    const Matrix& w = model.weight(t);
    for (int i = 0; i < N; ++i) {
      y(i, i) = std::numeric_limits<double>::quiet_NaN();
      for (int j = 0; j < i; ++j) {
        if (w(i, j) != 0.0) {
          y(i, j) += sd * rng.normal();
          y(j, i) = y(i, j);
        } else {
          y(i, j) = y(j, i) = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  }
  return net;
}

DegreeMoments replicate_degrees_one(const Model& model, const ParameterState& draw, std::uint64_t seed) {
  const Network net = replicate_one(model, draw, seed);
  DegreeMoments out;
  for (int m = 1; m <= 3; ++m) {
    out[m - 1].resize(model.N(), model.T());
    for (int t = 0; t < model.T(); ++t) out[m - 1].col(t) = degree_slice(net[t], m);
  }
  return out;
}

}  // namespace detail

Matrix degree_slice(const Matrix& y, int moment) {
  if (moment < 1 || moment > 3) throw std::invalid_argument("degree moment must be 1, 2 or 3");
  Matrix clean = y.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
  clean.diagonal().setZero();
  Vector deg = clean.rowwise().sum();
  for (int k = 1; k < moment; ++k) deg = clean * deg;
  return deg;
}

namespace serial {

void linear_predictor(const Model& model, const ParameterState& state, Network& out) {
  out.resize(model.T());
  for (int t = 0; t < model.T(); ++t) detail::predictor_slice(model, state, t, out[t]);
}

void residuals(const Model& model, const ParameterState& state, ResidualTensor& out) {
  out.resize(model.T());
  for (int t = 0; t < model.T(); ++t) detail::residual_slice(model, state, t, out[t]);
  detail::fill_imputed(model, state, out);
}

Matrix degree_stats(const Network& net, int moment) {
  if (moment < 1 || moment > 3) throw std::invalid_argument("degree moment must be 1, 2 or 3");
  const int T = static_cast<int>(net.size());
  Matrix out(T > 0 ? net[0].rows() : 0, T);
  for (int t = 0; t < T; ++t) out.col(t) = degree_slice(net[t], moment);
  return out;
}

Network replicate(const Model& model, const ParameterState& draw, std::uint64_t seed) {
  return detail::replicate_one(model, draw, seed);
}

std::vector<DegreeMoments> replicate_degrees(const Model& model, std::span<const ParameterState* const> draws,
                                             std::span<const std::uint64_t> seeds) {
  if (draws.size() != seeds.size()) throw std::invalid_argument("replicate_degrees: draws/seeds size mismatch");
  std::vector<DegreeMoments> out(draws.size());
  for (std::size_t k = 0; k < draws.size(); ++k) out[k] = detail::replicate_degrees_one(model, *draws[k], seeds[k]);
  return out;
}

}  // namespace serial
}  // namespace dame::kernels
