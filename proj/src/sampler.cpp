#include "dame/sampler.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "dame/errors.hpp"
#include "dame/kernels.hpp"

namespace dame {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double prior_mean_or_scale(double a, double b) { return a > 1.0 ? b / (a - 1.0) : b; }

// Sum of N_T(0, cov) log-densities over the rows of `vectors`.
double rows_loglik(const Matrix& vectors, const CovarianceMatrix& cov) {
  const double n = static_cast<double>(vectors.rows());
  const double quad = cov.lower().triangularView<Eigen::Lower>().solve(vectors.transpose()).squaredNorm();
  return -0.5 * (n * cov.dim() * kLog2Pi + n * cov.log_det() + quad);
}

Matrix row_matrix(const Matrix& m, int row) { return m.row(row); }

// Hyper update shared by the beta, theta and d blocks.
GpHyper update_hyper(SamplerContext& ctx, const Matrix& vectors, const GpHyper& current, MhTuner& tuner) {
  const Model& model = *ctx.model;
  const auto& cfg = model.config();
  if (!cfg.estimate_kappa) {
    return conjugate_tau_update(ctx.rng, vectors, current, cfg.priors, model.times(), cfg.kernel);
  }
  const auto res = mh_update_gp_hyper(ctx.rng, vectors, current, cfg.priors, cfg.mh.step_log_tau * tuner.scale,
                                      cfg.mh.step_log_kappa * tuner.scale, model.times(), cfg.kernel);
  tuner.record(res.accepted);
  if (res.jittered) ++ctx.jitter_events;
  if (ctx.adapting) tuner.adapt(res.accepted, cfg.mh.target_accept);
  return res.hyper;
}

Matrix checked_prior_precision(SamplerContext& ctx, const GpHyper& h) {
  const auto& cfg = ctx.model->config();
  const auto cov = scaled_covariance(h, ctx.model->times(), cfg.kernel);
  if (cov.jitter() > 0.0) ++ctx.jitter_events;
  return cov.inverse();
}

}  // namespace

// ---------------------------------------------------------------------------

double gp_hyper_log_target(const Matrix& vectors, const GpHyper& h, const PriorConfig& prior,
                           std::span<const double> times, KernelShape shape) {
  if (!(h.tau > 0.0) || !(h.kappa > 0.0) || h.kappa > prior.kappa_max) return kNegInf;
  try {
    const auto cov = scaled_covariance(h, times, shape);
    return rows_loglik(vectors, cov) + ig_logpdf(h.tau, prior.a, prior.b) + half_cauchy_logpdf(h.kappa, prior.gamma) +
           std::log(h.tau) + std::log(h.kappa);
  } catch (const NumericalError&) {
    return kNegInf;
  }
}

MhResult mh_update_gp_hyper(Rng& rng, const Matrix& vectors, const GpHyper& current, const PriorConfig& prior,
                            double step_log_tau, double step_log_kappa, std::span<const double> times,
                            KernelShape shape) {
  const double z_tau = rng.normal();
  const double z_kappa = rng.normal();
  const double log_u = std::log(rng.uniform());
  GpHyper proposal{current.tau * std::exp(step_log_tau * z_tau), current.kappa * std::exp(step_log_kappa * z_kappa)};

  MhResult out{current, false, false};
  const double target_new = gp_hyper_log_target(vectors, proposal, prior, times, shape);
  if (target_new == kNegInf) return out;
  const double target_old = gp_hyper_log_target(vectors, current, prior, times, shape);
  if (log_u < target_new - target_old || target_old == kNegInf) {
    out.hyper = proposal;
    out.accepted = true;
  }
  return out;
}

GpHyper conjugate_tau_update(Rng& rng, const Matrix& vectors, const GpHyper& current, const PriorConfig& prior,
                             std::span<const double> times, KernelShape shape) {
  const auto corr = CovarianceMatrix::from_correlation(exp_covariance(current.kappa, times, shape), 1.0);
  const double quad = corr.lower().triangularView<Eigen::Lower>().solve(vectors.transpose()).squaredNorm();
  const double shape_post = prior.a + 0.5 * static_cast<double>(vectors.size());
  const double scale_post = prior.b + 0.5 * quad;
  return GpHyper{ig_sample(rng, shape_post, scale_post), current.kappa};
}

void MhTuner::adapt(bool accepted, double target) {
  ++adapt_steps;
  const double gain = 0.5 / std::pow(static_cast<double>(adapt_steps), 0.6);
  scale *= std::exp(gain * ((accepted ? 1.0 : 0.0) - target));
}

Matrix gp_prior_precision(const GpHyper& h, std::span<const double> times, KernelShape shape) {
  return scaled_covariance(h, times, shape).inverse();
}

// ---------------------------------------------------------------------------

GaussianConditional beta_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int p,
                                     const Matrix& prior_precision) {
  const int T = model.T();
  GaussianConditional c{prior_precision, Vector::Zero(T)};
  for (int t = 0; t < T; ++t) {
    const Matrix& xw = model.masked_covariate(t, p);
    const double sum_x2 = 0.5 * xw.squaredNorm();
    const double sum_ex = 0.5 * E[t].cwiseProduct(xw).sum() + s.beta(p, t) * sum_x2;
    c.precision(t, t) += sum_x2 / s.sigma2;
    c.linear[t] = sum_ex / s.sigma2;
  }
  return c;
}

GaussianConditional theta_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int i,
                                      const Matrix& prior_precision) {
  const int T = model.T();
  GaussianConditional c{prior_precision, Vector::Zero(T)};
  for (int t = 0; t < T; ++t) {
    const double partners = model.weight(t).row(i).sum();
    c.precision(t, t) += partners / s.sigma2;
    c.linear[t] = (E[t].row(i).sum() + s.theta(i, t) * partners) / s.sigma2;
  }
  return c;
}

GaussianConditional d_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int r,
                                  const Matrix& prior_precision) {
  const int T = model.T();
  GaussianConditional c{prior_precision, Vector::Zero(T)};
  for (int t = 0; t < T; ++t) {
    const Vector ur = s.u[t].col(r);
    const Matrix prod = (ur * ur.transpose()).cwiseProduct(model.weight(t));
    const double sum_p2 = 0.5 * prod.squaredNorm();
    const double sum_ep = 0.5 * E[t].cwiseProduct(prod).sum() + s.d(r, t) * sum_p2;
    c.precision(t, t) += sum_p2 / s.sigma2;
    c.linear[t] = sum_ep / s.sigma2;
  }
  return c;
}

GaussianConditional u_conditional(const Model& model, const ParameterState& s, const ResidualTensor& E, int t,
                                  int i) {
  const int R = model.R();
  const Vector dvec = effective_d(s, model.config(), t);
  const Matrix v = s.u[t] * dvec.asDiagonal();  // row j holds D u_j
  const Vector w = model.weight(t).row(i).transpose();
  const Vector ui = s.u[t].row(i).transpose();
  GaussianConditional c;
  c.precision = s.tau_u.col(t).head(R).cwiseInverse().asDiagonal();
  c.precision += v.transpose() * w.asDiagonal() * v / s.sigma2;
  const Vector partial = w.cwiseProduct(E[t].row(i).transpose() + v * ui);
  c.linear = v.transpose() * partial / s.sigma2;
  return c;
}

InverseGammaParams sigma2_conditional(const ResidualTensor& E, const PriorConfig& prior, const Model& model) {
  double sse = 0.0;
  for (const auto& e : E) sse += e.squaredNorm();
  // Each available dyad appears twice in the symmetric slices.
  return {0.5 * static_cast<double>(model.num_available_dyads()) + prior.a_sigma, 0.25 * sse + prior.b_sigma};
}

double sample_sigma2(Rng& rng, const ResidualTensor& E, const PriorConfig& prior, const Model& model) {
  const auto ig = sigma2_conditional(E, prior, model);
  return ig_sample(rng, ig.shape, ig.scale);
}

InverseGammaParams tau_u_conditional(const Model& model, const ParameterState& s, int r, int t) {
  const auto& prior = model.config().priors;
  const auto& avail = model.data().availability;
  double ss = 0.0;
  for (int i = 0; i < model.N(); ++i) {
    if (avail(i, t)) ss += s.u[t](i, r) * s.u[t](i, r);
  }
  return {0.5 * model.available_nodes(t) + prior.a_u, 0.5 * ss + prior.b_u};
}

ResidualTensor compute_residuals(const Model& model, const ParameterState& state) {
  ResidualTensor E;
  kernels::omp::residuals(model, state, E);
  return E;
}

// ---------------------------------------------------------------------------

SamplerContext::SamplerContext(const Model& m, ParameterState initial, std::uint64_t seed)
    : model(&m), rng(seed), state(std::move(initial)) {
  tuner_beta.assign(m.P(), MhTuner{});
  tuner_d.assign(m.R(), MhTuner{});
  refresh_residuals();
}

ParameterState initial_state(const Model& model) {
  const int T = model.T();
  const int N = model.N();
  const int P = model.P();
  const int R = model.R();
  const auto& cfg = model.config();
  const auto& net = model.data().network;
  auto s = ParameterState::zeros(P, N, R, T, model.random_missing().size());

  double sse = 0.0;
  long count = 0;
  for (int t = 0; t < T; ++t) {
    std::vector<std::pair<int, int>> obs;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < i; ++j) {
        if (model.weight(t)(i, j) != 0.0 && net.is_observed(t, i, j)) obs.emplace_back(i, j);
      }
    }
    const int n = static_cast<int>(obs.size());
    Vector y(n);
    Matrix x(n, P);
    for (int k = 0; k < n; ++k) {
      const auto [i, j] = obs[k];
      y[k] = model.response(t)(i, j);
      for (int p = 0; p < P; ++p) x(k, p) = model.data().covariates.at(t, p)(i, j);
    }
    if (P > 0 && n > 0) s.beta.col(t) = x.colPivHouseholderQr().solve(y);
    const Vector resid = P > 0 ? Vector(y - x * s.beta.col(t)) : y;
    sse += resid.squaredNorm();
    count += n;
  }
  const double var = count > 1 ? sse / static_cast<double>(count - 1) : 1.0;
  s.sigma2 = var > 1e-8 ? var : 1e-8;

  const auto& missing = model.random_missing();
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const auto& m = missing[k];
    double fit = 0.0;
    for (int p = 0; p < P; ++p) fit += s.beta(p, m.t) * model.data().covariates.at(m.t, p)(m.i, m.j);
    s.imputed[static_cast<Eigen::Index>(k)] = fit;
  }

  const double tau0 = prior_mean_or_scale(cfg.priors.a, cfg.priors.b);
  for (auto& h : s.hyper_beta) h = {tau0, cfg.kappa_beta};
  s.hyper_theta = {tau0, cfg.kappa_theta};
  for (auto& h : s.hyper_d) h = {tau0, cfg.kappa_d};
  s.tau_u.setConstant(prior_mean_or_scale(cfg.priors.a_u, cfg.priors.b_u));
  if (cfg.form == MultiplicativeForm::kInner) {
    s.d.setOnes();
  } else if (cfg.fixed_d) {
    for (int r = 0; r < R; ++r) s.d.row(r).setConstant((*cfg.fixed_d)[r]);
  }
  return s;
}

// ---------------------------------------------------------------------------

void impute_missing(SamplerContext& ctx) {
  const auto& missing = ctx.model->random_missing();
  const double sd = std::sqrt(ctx.state.sigma2);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const auto& m = missing[k];
    const auto idx = static_cast<Eigen::Index>(k);
    Matrix& e = ctx.E[m.t];
    const double mean = ctx.state.imputed[idx] - e(m.i, m.j);
    const double noise = sd * ctx.rng.normal();
    ctx.state.imputed[idx] = mean + noise;
    e(m.i, m.j) = e(m.j, m.i) = noise;
  }
}

void update_sigma2(SamplerContext& ctx) {
  ctx.state.sigma2 = sample_sigma2(ctx.rng, ctx.E, ctx.model->config().priors, *ctx.model);
}

void draw_beta(SamplerContext& ctx, int p, const Matrix& prior_precision) {
  const Model& model = *ctx.model;
  const Vector draw = beta_conditional(model, ctx.state, ctx.E, p, prior_precision).sample(ctx.rng);
  for (int t = 0; t < model.T(); ++t) {
    const double delta = draw[t] - ctx.state.beta(p, t);
    ctx.E[t].noalias() -= delta * model.masked_covariate(t, p);
  }
  ctx.state.beta.row(p) = draw.transpose();
}

void draw_theta(SamplerContext& ctx, int i, const Matrix& prior_precision) {
  const Model& model = *ctx.model;
  const Vector draw = theta_conditional(model, ctx.state, ctx.E, i, prior_precision).sample(ctx.rng);
  for (int t = 0; t < model.T(); ++t) {
    const double delta = draw[t] - ctx.state.theta(i, t);
    ctx.E[t].row(i) -= delta * model.weight(t).row(i);
    ctx.E[t].col(i) -= delta * model.weight(t).col(i);
  }
  ctx.state.theta.row(i) = draw.transpose();
}

void draw_d(SamplerContext& ctx, int r, const Matrix& prior_precision) {
  const Model& model = *ctx.model;
  const Vector draw = d_conditional(model, ctx.state, ctx.E, r, prior_precision).sample(ctx.rng);
  for (int t = 0; t < model.T(); ++t) {
    const double delta = draw[t] - ctx.state.d(r, t);
    const Vector ur = ctx.state.u[t].col(r);
    ctx.E[t].noalias() -= delta * (ur * ur.transpose()).cwiseProduct(model.weight(t));
  }
  ctx.state.d.row(r) = draw.transpose();
}

void draw_u(SamplerContext& ctx, int t, int i) {
  const Model& model = *ctx.model;
  const Vector draw = u_conditional(model, ctx.state, ctx.E, t, i).sample(ctx.rng);
  const Vector delta = draw - ctx.state.u[t].row(i).transpose();
  const Vector dvec = effective_d(ctx.state, model.config(), t);
  const Vector change = (ctx.state.u[t] * dvec.asDiagonal() * delta).cwiseProduct(model.weight(t).col(i));
  ctx.E[t].row(i) -= change.transpose();
  ctx.E[t].col(i) -= change;
  ctx.state.u[t].row(i) = draw.transpose();
}

void draw_tau_u(SamplerContext& ctx) {
  const Model& model = *ctx.model;
  for (int t = 0; t < model.T(); ++t) {
    for (int r = 0; r < model.R(); ++r) {
      const auto ig = tau_u_conditional(model, ctx.state, r, t);
      ctx.state.tau_u(r, t) = ig_sample(ctx.rng, ig.shape, ig.scale);
    }
  }
}

void update_beta_block(SamplerContext& ctx) {
  const Model& model = *ctx.model;
  std::vector<int> order(model.P());
  std::iota(order.begin(), order.end(), 0);
  ctx.rng.shuffle(order.begin(), order.end());
  for (int p : order) {
    auto& hyper = ctx.state.hyper_beta[p];
    hyper = update_hyper(ctx, row_matrix(ctx.state.beta, p), hyper, ctx.tuner_beta[p]);
    draw_beta(ctx, p, checked_prior_precision(ctx, hyper));
  }
}

void update_theta_block(SamplerContext& ctx) {
  const Model& model = *ctx.model;
  if (!model.config().has_theta()) return;
  auto& hyper = ctx.state.hyper_theta;
  hyper = update_hyper(ctx, ctx.state.theta, hyper, ctx.tuner_theta);
  const Matrix prior_precision = checked_prior_precision(ctx, hyper);
  std::vector<int> order(model.N());
  std::iota(order.begin(), order.end(), 0);
  ctx.rng.shuffle(order.begin(), order.end());
  for (int i : order) draw_theta(ctx, i, prior_precision);
}

void update_d_block(SamplerContext& ctx) {
  const Model& model = *ctx.model;
  if (!model.config().estimates_d()) return;
  std::vector<int> order(model.R());
  std::iota(order.begin(), order.end(), 0);
  ctx.rng.shuffle(order.begin(), order.end());
  for (int r : order) {
    auto& hyper = ctx.state.hyper_d[r];
    hyper = update_hyper(ctx, row_matrix(ctx.state.d, r), hyper, ctx.tuner_d[r]);
    draw_d(ctx, r, checked_prior_precision(ctx, hyper));
  }
}

void update_u_block(SamplerContext& ctx) {
  const Model& model = *ctx.model;
  const int R = model.R();
  if (R == 0) return;
  draw_tau_u(ctx);
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<std::size_t>(model.T()) * model.N());
  for (int t = 0; t < model.T(); ++t) {
    for (int i = 0; i < model.N(); ++i) order.emplace_back(t, i);
  }
  ctx.rng.shuffle(order.begin(), order.end());
  for (const auto& [t, i] : order) draw_u(ctx, t, i);
}

void sweep(SamplerContext& ctx) {
  ctx.refresh_residuals();
  impute_missing(ctx);
  update_sigma2(ctx);
  update_beta_block(ctx);
  update_theta_block(ctx);
  update_d_block(ctx);
  update_u_block(ctx);
}

ChainResult run_chain(const Model& model, std::optional<ParameterState> init) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = model.config();
  SamplerContext ctx(model, init ? std::move(*init) : initial_state(model), cfg.chain.seed);

  ChainResult result;
  if (cfg.chain.iterations == cfg.chain.burn_in) {
    result.warnings.push_back("iterations equal burn-in: no draws retained");
  }
  result.draws.reserve(static_cast<std::size_t>(cfg.chain.retained()));

  for (int iter = 0; iter < cfg.chain.iterations; ++iter) {
    ctx.adapting = cfg.mh.adapt && iter < cfg.chain.burn_in;
    try {
      sweep(ctx);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iter + 1) + ": " + e.what());
    }
    if (!std::isfinite(ctx.state.sigma2)) {
      throw NumericalError("iteration " + std::to_string(iter + 1) + ": non-finite sigma2");
    }
    for (const auto& e : ctx.E) {
      if (!e.allFinite()) throw NumericalError("iteration " + std::to_string(iter + 1) + ": non-finite residual");
    }
    if (iter >= cfg.chain.burn_in && (iter - cfg.chain.burn_in + 1) % cfg.chain.thin == 0) {
      result.draws.push_back(ctx.state);
    }
  }

  for (int p = 0; p < model.P(); ++p) {
    const auto& tn = ctx.tuner_beta[p];
    result.acceptance.push_back({"beta[" + std::to_string(p) + "]", tn.proposals, tn.accepts, tn.scale});
  }
  if (cfg.has_theta()) {
    const auto& tn = ctx.tuner_theta;
    result.acceptance.push_back({"theta", tn.proposals, tn.accepts, tn.scale});
  }
  if (cfg.estimates_d()) {
    for (int r = 0; r < model.R(); ++r) {
      const auto& tn = ctx.tuner_d[r];
      result.acceptance.push_back({"d[" + std::to_string(r) + "]", tn.proposals, tn.accepts, tn.scale});
    }
  }
  result.jitter_events = ctx.jitter_events;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace dame
