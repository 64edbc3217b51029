#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dame/gp_kernel.hpp"
#include "dame/net_data.hpp"

namespace dame {

enum class Variant { kDame, kMe, kAe, kNo };
enum class MultiplicativeForm { kEigen, kInner };

Variant parse_variant(const std::string& s);
std::string to_string(Variant v);
MultiplicativeForm parse_form(const std::string& s);
std::string to_string(MultiplicativeForm f);

struct MhSettings {
  double step_log_tau = 0.5;
  double step_log_kappa = 0.5;
  double target_accept = 0.3;
  bool adapt = true;  // adaptation only ever runs during burn-in
};

struct ChainSettings {
  int iterations = 6000;
  int burn_in = 1000;
  int thin = 10;
  std::uint64_t seed = 1;

  int retained() const { return iterations > burn_in ? (iterations - burn_in) / thin : 0; }
};

struct ModelConfig {
  int R = 2;
  Variant variant = Variant::kDame;
  MultiplicativeForm form = MultiplicativeForm::kEigen;
  KernelShape kernel = KernelShape::kExponential;

  /// When false every kappa stays at its fixed value below and only tau is
  /// updated (by its conjugate inverse-Gamma draw).
  bool estimate_kappa = true;
  double kappa_beta = 1.0;
  double kappa_theta = 1.0;
  double kappa_d = 1.0;

  /// Holds d^t_r at fixed_d[r] for all t; the d block becomes a no-op.
  std::optional<std::vector<double>> fixed_d;
  /// Keeps theta at zero even for variants with additive effects.
  bool zero_theta = false;

  PriorConfig priors;
  MhSettings mh;
  ChainSettings chain;

  bool has_theta() const { return (variant == Variant::kDame || variant == Variant::kAe) && !zero_theta; }
  bool has_multiplicative() const {
    return (variant == Variant::kDame || variant == Variant::kMe) && R > 0;
  }
  int latent_dim() const { return has_multiplicative() ? R : 0; }
  bool estimates_d() const { return has_multiplicative() && form == MultiplicativeForm::kEigen && !fixed_d; }

  void validate() const;  // throws ConfigError
};

/// Position of a dyad; always stored with i > j.
struct DyadIndex {
  int t;
  int i;
  int j;
};

/// Dataset prepared for sampling: availability weights, random-missing
/// positions, and the working response with structural positions zeroed.
/// Immutable and safe to share across chains.
class Model {
 public:
  Model(Dataset data, ModelConfig config);

  const Dataset& data() const { return data_; }
  const ModelConfig& config() const { return config_; }

  int T() const { return data_.network.num_times(); }
  int N() const { return data_.network.num_nodes(); }
  int P() const { return data_.covariates.num_covariates(); }
  int R() const { return config_.latent_dim(); }
  std::span<const double> times() const { return data_.network.times; }

  /// W^t: 1 on available off-diagonal dyads, 0 elsewhere.
  const Matrix& weight(int t) const { return weights_[t]; }
  /// X^t_p multiplied elementwise by W^t.
  const Matrix& masked_covariate(int t, int p) const { return masked_x_[t][p]; }
  /// Observed responses on available dyads, 0 elsewhere (random-missing slots
  /// are filled from ParameterState::imputed).
  const Matrix& response(int t) const { return response_[t]; }

  const std::vector<DyadIndex>& random_missing() const { return random_missing_; }
  std::size_t num_available_dyads() const { return num_available_dyads_; }
  int available_nodes(int t) const { return available_nodes_[t]; }
  const MissingnessClassification& missingness() const { return missingness_; }

 private:
  Dataset data_;
  ModelConfig config_;
  std::vector<Matrix> weights_;
  std::vector<std::vector<Matrix>> masked_x_;
  std::vector<Matrix> response_;
  std::vector<DyadIndex> random_missing_;
  std::size_t num_available_dyads_ = 0;
  std::vector<int> available_nodes_;
  MissingnessClassification missingness_;
};

/// One full draw of every model parameter.
struct ParameterState {
  Matrix beta;                    // P x T
  Matrix theta;                   // N x T
  Matrix d;                       // R x T
  std::vector<Matrix> u;          // T slices of N x R
  double sigma2 = 1.0;
  std::vector<GpHyper> hyper_beta;  // P
  GpHyper hyper_theta;
  std::vector<GpHyper> hyper_d;   // R
  Matrix tau_u;                   // R x T
  Vector imputed;                 // aligned with Model::random_missing()

  static ParameterState zeros(int P, int N, int R, int T, std::size_t num_missing);
};

/// Effective D^t diagonal: d^t for the eigen form, ones for the inner form.
Vector effective_d(const ParameterState& s, const ModelConfig& config, int t);

/// E^t = Y^t - linear predictor on available dyads; zero on structural
/// positions and the diagonal.
using ResidualTensor = std::vector<Matrix>;

}  // namespace dame
