#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dame/gp_kernel.hpp"
#include "dame/model.hpp"
#include "dame/rng.hpp"

namespace dame {

// ---------------------------------------------------------------------------
// GP hyperparameter updates

/// Log target of (log tau, log kappa): sum of N_T(0, tau f(kappa)) log-densities
/// over the rows of `vectors`, the IG(a, b) and half-Cauchy(gamma) priors, and
/// the log-Jacobian log tau + log kappa. Returns -inf when kappa leaves
/// (0, kappa_max] or f(kappa) cannot be factored.
double gp_hyper_log_target(const Matrix& vectors, const GpHyper& h, const PriorConfig& prior,
                           std::span<const double> times, KernelShape shape);

struct MhResult {
  GpHyper hyper;
  bool accepted = false;
  bool jittered = false;
};

/// One joint random-walk Metropolis step on (log tau, log kappa). Each row of
/// `vectors` is one T-vector sharing the covariance tau f(kappa).
MhResult mh_update_gp_hyper(Rng& rng, const Matrix& vectors, const GpHyper& current, const PriorConfig& prior,
                            double step_log_tau, double step_log_kappa, std::span<const double> times,
                            KernelShape shape);

/// Exact inverse-Gamma draw of tau with kappa held fixed.
GpHyper conjugate_tau_update(Rng& rng, const Matrix& vectors, const GpHyper& current, const PriorConfig& prior,
                             std::span<const double> times, KernelShape shape);

/// Step-size adaptation toward a target acceptance rate. Only called during burn-in.
struct MhTuner {
  double scale = 1.0;
  long proposals = 0;
  long accepts = 0;
  long adapt_steps = 0;

  void record(bool accepted) {
    ++proposals;
    accepts += accepted ? 1 : 0;
  }
  void adapt(bool accepted, double target);
  double rate() const { return proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0; }
};

// ---------------------------------------------------------------------------
// Full conditionals (information form). `E` must be current with respect to
// every parameter; the block's own contribution is added back internally.

GaussianConditional beta_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int p,
                                     const Matrix& prior_precision);
GaussianConditional theta_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int i,
                                      const Matrix& prior_precision);
GaussianConditional d_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int r,
                                  const Matrix& prior_precision);
GaussianConditional u_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int t,
                                  int i);

/// (tau f(kappa))^{-1}.
Matrix gp_prior_precision(const GpHyper& h, std::span<const double> times, KernelShape shape);

/// Shape and scale of the sigma^2 full conditional.
struct InverseGammaParams {
  double shape;
  double scale;
};
InverseGammaParams sigma2_conditional(const ResidualTensor& E, const PriorConfig& prior, const Model& model);
double sample_sigma2(Rng& rng, const ResidualTensor& E, const PriorConfig& prior, const Model& model);

/// Conditional of tau^u_rt: sums run over nodes available at t.
InverseGammaParams tau_u_conditional(const Model& model, const ParameterState& s, int r, int t);

ResidualTensor compute_residuals(const Model& model, const ParameterState& state);

// ---------------------------------------------------------------------------
// Chain

struct BlockAcceptance {
  std::string block;  // e.g. "beta[0]", "theta", "d[1]"
  long proposals = 0;
  long accepts = 0;
  double final_scale = 1.0;
};

struct ChainResult {
  std::vector<ParameterState> draws;
  std::vector<BlockAcceptance> acceptance;
  long jitter_events = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Mutable state of one running chain. Each block update keeps `E` in sync
/// with `state` incrementally.
struct SamplerContext {
  SamplerContext(const Model& model, ParameterState initial, std::uint64_t seed);

  const Model* model;
  Rng rng;
  ParameterState state;
  ResidualTensor E;
  std::vector<MhTuner> tuner_beta;
  MhTuner tuner_theta;
  std::vector<MhTuner> tuner_d;
  long jitter_events = 0;
  bool adapting = false;

  void refresh_residuals() { E = compute_residuals(*model, state); }
};

/// Least-squares beta, zero random effects, prior-mean variances.
ParameterState initial_state(const Model& model);

void impute_missing(SamplerContext& ctx);
void update_sigma2(SamplerContext& ctx);
void update_beta_block(SamplerContext& ctx);
void update_theta_block(SamplerContext& ctx);
void update_d_block(SamplerContext& ctx);
void update_u_block(SamplerContext& ctx);

/// Single-block draws with hyperparameters held fixed; E is updated.
void draw_beta(SamplerContext& ctx, int p, const Matrix& prior_precision);
void draw_theta(SamplerContext& ctx, int i, const Matrix& prior_precision);
void draw_d(SamplerContext& ctx, int r, const Matrix& prior_precision);
void draw_u(SamplerContext& ctx, int t, int i);
void draw_tau_u(SamplerContext& ctx);

/// One full Gibbs sweep: residual refresh, imputation, sigma^2, beta, theta, d, u.
void sweep(SamplerContext& ctx);

ChainResult run_chain(const Model& model, std::optional<ParameterState> init = std::nullopt);

}  // namespace dame
