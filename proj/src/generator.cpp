#include "dame/generator.hpp"

#include <cmath>

#include "dame/errors.hpp"
#include "dame/rng.hpp"

namespace dame {

TransitivityPattern parse_pattern(const std::string& s) {
  if (s == "positive") return TransitivityPattern::kPositive;
  if (s == "mixed") return TransitivityPattern::kMixed;
  if (s == "negative") return TransitivityPattern::kNegative;
  throw ConfigError("transitivity pattern must be positive, mixed or negative (got '" + s + "')");
}

std::string to_string(TransitivityPattern p) {
  switch (p) {
    case TransitivityPattern::kPositive: return "positive";
    case TransitivityPattern::kMixed: return "mixed";
    case TransitivityPattern::kNegative: return "negative";
  }
  return "?";
}

void SimConfig::validate() const {
  if (N < 2 || T < 1 || P < 0 || R < 0) throw ConfigError("simulate: need N >= 2, T >= 1, P >= 0, R >= 0");
  for (double k : {kappa_beta, kappa_theta, kappa_d}) {
    if (!(k >= 0.0)) throw ConfigError("simulate: kappa values must be >= 0");
  }
  if (!(a > 0 && b > 0 && a_sigma > 0 && b_sigma > 0)) throw ConfigError("simulate: prior parameters must be > 0");
  if (fixed_d && (fixed_d->rows() != R || fixed_d->cols() != T)) {
    throw ConfigError("simulate: fixed d pattern must be R x T");
  }
  if (covariates && (static_cast<int>(covariates->values.size()) != T || covariates->num_covariates() != P)) {
    throw ConfigError("simulate: supplied covariates must have T timepoints and P covariates");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("simulate: holdout_fraction must lie in [0, 1)");
  }
}

Matrix transitivity_d(TransitivityPattern pattern, int T) {
  Matrix d(2, T);
  switch (pattern) {
    case TransitivityPattern::kPositive: d.row(0).setConstant(2.0); d.row(1).setConstant(2.0); break;
    case TransitivityPattern::kMixed: d.row(0).setConstant(-2.0); d.row(1).setConstant(2.0); break;
    case TransitivityPattern::kNegative: d.row(0).setConstant(-2.0); d.row(1).setConstant(-2.0); break;
  }
  return d;
}

SimulatedData simulate_dataset(const SimConfig& config) {
  config.validate();
  const int N = config.N;
  const int T = config.T;
  const int P = config.P;
  const int R = config.R;
  Rng rng(config.seed);
  const auto times = unit_times(T);

  std::vector<std::string> nodes;
  for (int n = 1; n <= N; ++n) nodes.push_back(std::to_string(n));

  SimulatedData sim;
  ParameterState& s = sim.truth;
  s = ParameterState::zeros(P, N, R, T, 0);

  auto gp_path = [&](double kappa, GpHyper& h) {
    h = {ig_sample(rng, config.a, config.b), kappa};
    const auto cov = scaled_covariance(h, times, config.kernel);
    return mvn_sample(rng, Vector::Zero(T), cov);
  };

  for (int p = 0; p < P; ++p) s.beta.row(p) = gp_path(config.kappa_beta, s.hyper_beta[p]).transpose();
  {
    s.hyper_theta = {ig_sample(rng, config.a, config.b), config.kappa_theta};
    const auto cov = scaled_covariance(s.hyper_theta, times, config.kernel);
    for (int i = 0; i < N; ++i) s.theta.row(i) = mvn_sample(rng, Vector::Zero(T), cov).transpose();
  }
  for (int r = 0; r < R; ++r) {
    if (config.fixed_d) {
      s.hyper_d[r] = {0.0, 0.0};
      s.d.row(r) = config.fixed_d->row(r);
    } else {
      s.d.row(r) = gp_path(config.kappa_d, s.hyper_d[r]).transpose();
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int r = 0; r < R; ++r) {
      s.tau_u(r, t) = ig_sample(rng, config.a, config.b);
      const double sd = std::sqrt(s.tau_u(r, t));
      for (int i = 0; i < N; ++i) s.u[t](i, r) = sd * rng.normal();
    }
  }
  s.sigma2 = ig_sample(rng, config.a_sigma, config.b_sigma);

  CovariateTensor cov;
  if (config.covariates) {
    cov = *config.covariates;
  } else {
    cov = CovariateTensor::empty(T);
    for (int p = 0; p < P; ++p) cov.names.push_back("x" + std::to_string(p + 1));
    for (int t = 0; t < T; ++t) {
      for (int p = 0; p < P; ++p) {
        Matrix x = Matrix::Zero(N, N);
        for (int i = 0; i < N; ++i) {
          for (int j = 0; j < i; ++j) x(i, j) = x(j, i) = rng.normal();
        }
        cov.values[t].push_back(std::move(x));
      }
    }
  }

  auto net = DynamicNetwork::all_missing(T, nodes);
  sim.noise.assign(T, Matrix::Zero(N, N));
  const double sd = std::sqrt(s.sigma2);
  std::vector<double> hidden;
  for (int t = 0; t < T; ++t) {
    const Matrix uu = s.u[t] * s.d.col(t).asDiagonal() * s.u[t].transpose();
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < i; ++j) {
        double mean = s.theta(i, t) + s.theta(j, t) + uu(i, j);
        for (int p = 0; p < P; ++p) mean += s.beta(p, t) * cov.at(t, p)(i, j);
        const double eps = sd * rng.normal();
        sim.noise[t](i, j) = sim.noise[t](j, i) = eps;
        const double y = mean + eps;
        if (config.holdout_fraction > 0.0 && rng.uniform() < config.holdout_fraction) {
          hidden.push_back(y);
        } else {
          net.set(t, i, j, y);
        }
      }
    }
  }
  // Model::random_missing() enumerates (t, i > j) in this same order.
  s.imputed = Eigen::Map<const Vector>(hidden.data(), static_cast<Eigen::Index>(hidden.size()));

  sim.data.network = std::move(net);
  sim.data.covariates = std::move(cov);
  sim.data.availability = AvailabilityMatrix::all_available(N, T);
  return sim;
}

SimulatedData simulate_transitivity_dataset(SimConfig config, TransitivityPattern pattern) {
  if (config.R != 2) throw ConfigError("transitivity simulation requires R = 2");
  config.fixed_d = transitivity_d(pattern, config.T);
  return simulate_dataset(config);
}

}  // namespace dame
