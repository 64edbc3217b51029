#include "dame/model.hpp"

#include <cmath>

#include "dame/errors.hpp"

namespace dame {

Variant parse_variant(const std::string& s) {
  if (s == "DAME") return Variant::kDame;
  if (s == "ME") return Variant::kMe;
  if (s == "AE") return Variant::kAe;
  if (s == "NO") return Variant::kNo;
  throw ConfigError("model.variant must be one of DAME, ME, AE, NO (got '" + s + "')");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kDame: return "DAME";
    case Variant::kMe: return "ME";
    case Variant::kAe: return "AE";
    case Variant::kNo: return "NO";
  }
  return "?";
}

MultiplicativeForm parse_form(const std::string& s) {
  if (s == "eigen") return MultiplicativeForm::kEigen;
  if (s == "inner") return MultiplicativeForm::kInner;
  throw ConfigError("model.form must be 'eigen' or 'inner' (got '" + s + "')");
}

std::string to_string(MultiplicativeForm f) { return f == MultiplicativeForm::kEigen ? "eigen" : "inner"; }

void ModelConfig::validate() const {
  priors.validate();
  if (R < 0) throw ConfigError("model.R must be >= 0");
  if (chain.thin < 1) throw ConfigError("chain.thin must be >= 1");
  if (chain.burn_in < 0) throw ConfigError("chain.burn_in must be >= 0");
  if (chain.iterations < chain.burn_in) throw ConfigError("chain.iterations must be >= chain.burn_in");
  for (double k : {kappa_beta, kappa_theta, kappa_d}) {
    if (!(k >= 0.0) || k > priors.kappa_max) {
      throw ConfigError("model.kappa values must lie in [0, priors.kappa_max]");
    }
    if (estimate_kappa && k == 0.0) {
      throw ConfigError("model.kappa starting values must be > 0 when kappa is estimated");
    }
  }
  if (fixed_d) {
    if (form == MultiplicativeForm::kInner) throw ConfigError("model.fixed_d requires the eigen form");
    if (static_cast<int>(fixed_d->size()) != R) throw ConfigError("model.fixed_d must have R entries");
  }
  if (!(mh.step_log_tau > 0.0) || !(mh.step_log_kappa > 0.0)) throw ConfigError("mh step sizes must be > 0");
  if (!(mh.target_accept > 0.0 && mh.target_accept < 1.0)) throw ConfigError("mh.target_accept must be in (0,1)");
}

Model::Model(Dataset data, ModelConfig config)
    : data_(std::move(data)),
      config_(std::move(config)),
      missingness_(data_.network.num_times(), data_.network.num_nodes()) {
  config_.validate();
  data_.network.validate();
  const int T = this->T();
  const int N = this->N();
  const int P = this->P();
  data_.covariates.validate(T, N);
  missingness_ = classify_missingness(data_.network, data_.availability);

  weights_.assign(T, Matrix::Zero(N, N));
  response_.assign(T, Matrix::Zero(N, N));
  masked_x_.resize(T);
  available_nodes_.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    for (int n = 0; n < N; ++n) available_nodes_[t] += data_.availability(n, t) ? 1 : 0;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < i; ++j) {
        if (!data_.availability.dyad(t, i, j)) continue;
        weights_[t](i, j) = weights_[t](j, i) = 1.0;
        ++num_available_dyads_;
        if (data_.network.is_observed(t, i, j)) {
          response_[t](i, j) = response_[t](j, i) = data_.network.values[t](i, j);
        } else {
          random_missing_.push_back({t, i, j});
        }
      }
    }
    for (int p = 0; p < P; ++p) {
      masked_x_[t].push_back((weights_[t].array() != 0.0).select(data_.covariates.at(t, p), 0.0));
    }
  }
}

ParameterState ParameterState::zeros(int P, int N, int R, int T, std::size_t num_missing) {
  ParameterState s;
  s.beta = Matrix::Zero(P, T);
  s.theta = Matrix::Zero(N, T);
  s.d = Matrix::Zero(R, T);
  s.u.assign(T, Matrix::Zero(N, R));
  s.hyper_beta.assign(P, GpHyper{});
  s.hyper_d.assign(R, GpHyper{});
  s.tau_u = Matrix::Ones(R, T);
  s.imputed = Vector::Zero(static_cast<Eigen::Index>(num_missing));
  return s;
}

Vector effective_d(const ParameterState& s, const ModelConfig& config, int t) {
  const int R = config.latent_dim();
  if (config.form == MultiplicativeForm::kInner) return Vector::Ones(R);
  return s.d.col(t).head(R);
}

}  // namespace dame
