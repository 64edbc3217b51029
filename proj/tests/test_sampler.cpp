#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dame/errors.hpp"
#include "dame/sampler.hpp"
#include "test_support.hpp"

using namespace dame;

namespace {

ModelConfig config_for(Variant v, int R = 2) {
  ModelConfig mc;
  mc.variant = v;
  mc.R = R;
  return mc;
}

void check_close(const Vector& a, const Vector& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(tol).scale(1.0));
}

void check_close(const Matrix& a, const Matrix& b, double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (Eigen::Index k = 0; k < a.size(); ++k)
    CHECK(a.data()[k] == doctest::Approx(b.data()[k]).epsilon(tol).scale(1.0));
}

// Sample mean within 4 SE; covariance entries within 5% of sqrt(S_ii S_jj).
void check_moments(const std::vector<Vector>& xs, const oracle::Posterior& post) {
  const auto n = static_cast<double>(xs.size());
  const Eigen::Index d = post.mean.size();
  Vector mean = Vector::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= n;
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= n - 1.0;
  for (Eigen::Index a = 0; a < d; ++a) {
    const double se = std::sqrt(post.cov(a, a) / n);
    CHECK(std::abs(mean[a] - post.mean[a]) < 4.0 * se);
    for (Eigen::Index b = 0; b < d; ++b)
      CHECK(std::abs(cov(a, b) - post.cov(a, b)) <= 0.05 * std::sqrt(post.cov(a, a) * post.cov(b, b)));
  }
}

Dataset absent_sim(int N, int T, std::uint64_t seed, double holdout = 0.1) {
  auto sim = oracle::small_sim(N, T, 2, 1, seed, holdout);
  oracle::make_absent(sim.data, 1, 0, 1);
  return sim.data;
}

}  // namespace

// ---------------------------------------------------------------------------
// Residuals and sigma^2

TEST_CASE("residuals: zero state gives Y on observed entries") {
  const auto sim = oracle::small_sim(6, 3, 1, 1, 1);
  const Model m(sim.data, config_for(Variant::kDame, 1));
  const auto s = ParameterState::zeros(m.P(), m.N(), m.R(), m.T(), m.random_missing().size());
  const auto E = compute_residuals(m, s);
  for (int t = 0; t < m.T(); ++t)
    for (int i = 0; i < m.N(); ++i)
      for (int j = 0; j < i; ++j) CHECK(E[t](i, j) == sim.data.network.values[t](i, j));
}

TEST_CASE("residuals: exact linear fit gives zero") {
  auto sim = oracle::small_sim(7, 3, 2, 0, 2);
  auto& net = sim.data.network;
  for (int t = 0; t < 3; ++t)
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < i; ++j)
        net.set(t, i, j, 0.7 * sim.data.covariates.at(t, 0)(i, j) - 1.3 * sim.data.covariates.at(t, 1)(i, j));
  const Model m(sim.data, config_for(Variant::kNo, 0));
  auto s = ParameterState::zeros(2, 7, 0, 3, 0);
  s.beta.row(0).setConstant(0.7);
  s.beta.row(1).setConstant(-1.3);
  for (const auto& e : compute_residuals(m, s)) CHECK(e.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ground truth recovers the simulated noise") {
  const auto sim = oracle::small_sim(12, 5, 2, 2, 3, 0.2);
  const Model m(sim.data, config_for(Variant::kDame));
  const auto E = compute_residuals(m, sim.truth);
  for (int t = 0; t < m.T(); ++t) CHECK((E[t] - sim.noise[t]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sigma^2 conditional counts available dyads") {
  dame::SimConfig sc;
  sc.N = 20;
  sc.T = 10;
  auto sim = dame::simulate_dataset(sc);
  ModelConfig mc;
  mc.priors.a_sigma = 2.0;
  mc.priors.b_sigma = 1.0;
  const Model full(sim.data, mc);
  ResidualTensor zero(10, Matrix::Zero(20, 20));
  const auto ig = sigma2_conditional(zero, mc.priors, full);
  CHECK(ig.shape == 952.0);
  CHECK(ig.scale == 1.0);

  oracle::make_absent(sim.data, 4, 6, 7);
  const Model missing(sim.data, mc);
  CHECK(sigma2_conditional(zero, mc.priors, missing).shape == 952.0 - 19.0 / 2.0);

  // Scale: half the sum of squares over i > j.
  const auto E = compute_residuals(full, sim.truth);
  double ss = 0.0;
  for (int t = 0; t < 10; ++t)
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < i; ++j) ss += E[t](i, j) * E[t](i, j);
  CHECK(sigma2_conditional(E, mc.priors, full).scale == doctest::Approx(0.5 * ss + 1.0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Conditionals against the dense oracles

TEST_CASE("block conditionals equal the dense regression oracles") {
  const Dataset data = absent_sim(7, 3, 21);
  for (auto form : {MultiplicativeForm::kEigen, MultiplicativeForm::kInner}) {
    auto mc = config_for(Variant::kDame, 2);
    mc.form = form;
    const Model m(data, mc);
    const auto s = oracle::random_state(m, 5);
    const auto E = compute_residuals(m, s);
    const auto times = m.times();
    for (int p = 0; p < m.P(); ++p) {
      const auto c = beta_conditional(m, s, E, p, gp_prior_precision(s.hyper_beta[p], times, mc.kernel));
      const auto o = oracle::beta_block(m, s, p);
      check_close(c.mean(), o.mean, 1e-9);
      check_close(c.covariance(), o.cov, 1e-9);
    }
    for (int i = 0; i < m.N(); ++i) {
      const auto c = theta_conditional(m, s, E, i, gp_prior_precision(s.hyper_theta, times, mc.kernel));
      const auto o = oracle::theta_block(m, s, i);
      check_close(c.mean(), o.mean, 1e-9);
      check_close(c.covariance(), o.cov, 1e-9);
    }
    if (form == MultiplicativeForm::kEigen) {
      for (int r = 0; r < m.R(); ++r) {
        const auto c = d_conditional(m, s, E, r, gp_prior_precision(s.hyper_d[r], times, mc.kernel));
        const auto o = oracle::d_block(m, s, r);
        check_close(c.mean(), o.mean, 1e-9);
        check_close(c.covariance(), o.cov, 1e-9);
      }
    }
    for (int t = 0; t < m.T(); ++t)
      for (int i = 0; i < m.N(); ++i) {
        const auto c = u_conditional(m, s, E, t, i);
        const auto o = oracle::u_block(m, s, t, i);
        check_close(c.mean(), o.mean, 1e-9);
        check_close(c.covariance(), o.cov, 1e-9);
      }
  }
}

TEST_CASE("theta conditional for two nodes at one timepoint") {
  auto sim = oracle::small_sim(2, 1, 1, 0, 4);
  const Model m(sim.data, config_for(Variant::kAe, 0));
  auto s = oracle::random_state(m, 1);
  s.sigma2 = 0.4;
  const double tau = 2.5;
  Matrix prior(1, 1);
  prior(0, 0) = 1.0 / tau;
  const auto c = theta_conditional(m, s, compute_residuals(m, s), 0, prior);
  CHECK(c.precision(0, 0) == doctest::Approx(1.0 / tau + 1.0 / 0.4));
}

TEST_CASE("absent nodes and empty likelihoods fall back to the prior") {
  auto data = absent_sim(6, 2, 8);
  oracle::make_absent(data, 3, 0, 2);
  const Model m(data, config_for(Variant::kDame, 2));
  auto s = oracle::random_state(m, 3);
  const auto E = compute_residuals(m, s);
  const Matrix prior_theta = gp_prior_precision(s.hyper_theta, m.times(), m.config().kernel);
  const auto ct = theta_conditional(m, s, E, 3, prior_theta);
  check_close(ct.precision, prior_theta, 1e-14);
  CHECK(ct.mean().cwiseAbs().maxCoeff() < 1e-14);

  const auto cu = u_conditional(m, s, E, 1, 3);
  CHECK(cu.mean().cwiseAbs().maxCoeff() < 1e-14);
  for (int r = 0; r < 2; ++r) CHECK(cu.covariance()(r, r) == doctest::Approx(s.tau_u(r, 1)));

  // u = 0 leaves d with no likelihood contribution.
  for (auto& ut : s.u) ut.setZero();
  const auto E0 = compute_residuals(m, s);
  const Matrix prior_d = gp_prior_precision(s.hyper_d[0], m.times(), m.config().kernel);
  const auto cd = d_conditional(m, s, E0, 0, prior_d);
  check_close(cd.precision, prior_d, 1e-14);
  CHECK(cd.mean().cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("beta conditional with a zero covariate equals the prior") {
  auto sim = oracle::small_sim(5, 3, 1, 0, 6);
  for (auto& slice : sim.data.covariates.values) slice[0].setZero();
  const Model m(sim.data, config_for(Variant::kNo, 0));
  const auto s = oracle::random_state(m, 2);
  const Matrix prior = gp_prior_precision(s.hyper_beta[0], m.times(), m.config().kernel);
  const auto c = beta_conditional(m, s, compute_residuals(m, s), 0, prior);
  check_close(c.precision, prior, 1e-14);
  CHECK(c.mean().cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("beta conditional at one timepoint matches conjugate regression") {
  const auto sim = oracle::small_sim(6, 1, 1, 0, 9);
  const Model m(sim.data, config_for(Variant::kNo, 0));
  auto s = oracle::random_state(m, 4);
  const double tau = s.hyper_beta[0].tau;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < i; ++j) {
      const double x = sim.data.covariates.at(0, 0)(i, j);
      sxx += x * x;
      sxy += x * sim.data.network.values[0](i, j);
    }
  const double prec = 1.0 / tau + sxx / s.sigma2;
  Matrix prior(1, 1);
  prior(0, 0) = 1.0 / tau;
  const auto c = beta_conditional(m, s, compute_residuals(m, s), 0, prior);
  CHECK(c.mean()[0] == doctest::Approx(sxy / s.sigma2 / prec).epsilon(1e-12));
  CHECK(c.covariance()(0, 0) == doctest::Approx(1.0 / prec).epsilon(1e-12));
}

TEST_CASE("beta recovers the generating path with noiseless data") {
  auto sim = oracle::small_sim(10, 4, 1, 0, 13);
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < i; ++j) sim.data.network.set(t, i, j, sim.truth.beta(0, t) * sim.data.covariates.at(t, 0)(i, j));
  const Model m(sim.data, config_for(Variant::kNo, 0));
  auto s = ParameterState::zeros(1, 10, 0, 4, 0);
  s.hyper_beta[0] = {1.0, 2.0};
  s.sigma2 = 1e-8;
  const auto c = beta_conditional(m, s, compute_residuals(m, s), 0,
                                  gp_prior_precision(s.hyper_beta[0], m.times(), m.config().kernel));
  CHECK((c.mean() - sim.truth.beta.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("u conditional for one latent dimension matches the scalar oracle") {
  const auto sim = oracle::small_sim(3, 1, 1, 1, 10);
  const Model m(sim.data, config_for(Variant::kMe, 1));
  auto s = oracle::random_state(m, 8);
  const auto E = compute_residuals(m, s);
  const int i = 1;
  const double d = s.d(0, 0);
  double prec = 1.0 / s.tau_u(0, 0);
  double lin = 0.0;
  for (int j = 0; j < 3; ++j) {
    if (j == i) continue;
    const double z = d * s.u[0](j, 0);
    prec += z * z / s.sigma2;
    lin += z * oracle::residual(m, s, {0, std::max(i, j), std::min(i, j)}) / s.sigma2 +
           z * z * s.u[0](i, 0) / s.sigma2;
  }
  const auto c = u_conditional(m, s, E, 0, i);
  CHECK(c.precision(0, 0) == doctest::Approx(prec).epsilon(1e-12));
  CHECK(c.mean()[0] == doctest::Approx(lin / prec).epsilon(1e-12));
}

TEST_CASE("repeated block draws reproduce the oracle moments") {
  const Dataset data = absent_sim(4, 2, 31);
  const Model m(data, config_for(Variant::kDame, 1));
  const auto s0 = oracle::random_state(m, 6);
  const auto times = m.times();
  const int n = 10000;

  SUBCASE("beta") {
    SamplerContext ctx(m, s0, 1);
    const Matrix prior = gp_prior_precision(s0.hyper_beta[1], times, m.config().kernel);
    std::vector<Vector> xs;
    for (int k = 0; k < n; ++k) {
      draw_beta(ctx, 1, prior);
      xs.push_back(ctx.state.beta.row(1).transpose());
    }
    check_moments(xs, oracle::beta_block(m, s0, 1));
  }
  SUBCASE("theta") {
    SamplerContext ctx(m, s0, 2);
    const Matrix prior = gp_prior_precision(s0.hyper_theta, times, m.config().kernel);
    std::vector<Vector> xs;
    for (int k = 0; k < n; ++k) {
      draw_theta(ctx, 2, prior);
      xs.push_back(ctx.state.theta.row(2).transpose());
    }
    check_moments(xs, oracle::theta_block(m, s0, 2));
  }
  SUBCASE("d") {
    SamplerContext ctx(m, s0, 3);
    const Matrix prior = gp_prior_precision(s0.hyper_d[0], times, m.config().kernel);
    std::vector<Vector> xs;
    for (int k = 0; k < n; ++k) {
      draw_d(ctx, 0, prior);
      xs.push_back(ctx.state.d.row(0).transpose());
    }
    check_moments(xs, oracle::d_block(m, s0, 0));
  }
  SUBCASE("u") {
    SamplerContext ctx(m, s0, 4);
    std::vector<Vector> xs;
    for (int k = 0; k < n; ++k) {
      draw_u(ctx, 1, 3);
      xs.push_back(ctx.state.u[1].row(3).transpose());
    }
    check_moments(xs, oracle::u_block(m, s0, 1, 3));
  }
  SUBCASE("sigma^2 and tau^u") {
    SamplerContext ctx(m, s0, 5);
    const auto E = compute_residuals(m, s0);
    double ss = 0.0;
    for (const auto& d : oracle::available_dyads(m)) ss += std::pow(oracle::residual(m, s0, d), 2);
    const double shape = 0.5 * static_cast<double>(oracle::available_dyads(m).size()) + m.config().priors.a_sigma;
    const double scale = 0.5 * ss + m.config().priors.b_sigma;
    double sum = 0.0, sum_u = 0.0;
    for (int k = 0; k < n; ++k) {
      update_sigma2(ctx);
      sum += ctx.state.sigma2;
      draw_tau_u(ctx);
      sum_u += ctx.state.tau_u(0, 0);
    }
    const double mean = scale / (shape - 1.0);
    const double sd = mean / std::sqrt(shape - 2.0);
    CHECK(std::abs(sum / n - mean) < 4.0 * sd / std::sqrt(n));

    // Node 1 is absent at t = 0, so three nodes enter the tau^u sum.
    double su = 0.0;
    for (int i = 0; i < 4; ++i)
      if (i != 1) su += s0.u[0](i, 0) * s0.u[0](i, 0);
    const double shape_u = 1.5 + m.config().priors.a_u;
    const double scale_u = 0.5 * su + m.config().priors.b_u;
    const auto ig = tau_u_conditional(m, s0, 0, 0);
    CHECK(ig.shape == doctest::Approx(shape_u));
    CHECK(ig.scale == doctest::Approx(scale_u));
    const double mean_u = scale_u / (shape_u - 1.0);
    const double sd_u = mean_u / std::sqrt(shape_u - 2.0);
    CHECK(std::abs(sum_u / n - mean_u) < 4.0 * sd_u / std::sqrt(n));
  }
}

// ---------------------------------------------------------------------------
// MH

TEST_CASE("a zero-step proposal is always accepted") {
  Rng rng(1);
  Matrix v(2, 5);
  v.setRandom();
  const GpHyper h{1.3, 2.0};
  PriorConfig prior;
  const auto times = unit_times(5);
  for (int k = 0; k < 200; ++k) {
    const auto res = mh_update_gp_hyper(rng, v, h, prior, 0.0, 0.0, times, KernelShape::kExponential);
    CHECK(res.accepted);
    CHECK(res.hyper.tau == h.tau);
    CHECK(res.hyper.kappa == h.kappa);
  }
}

TEST_CASE("proposals outside the kappa range are rejected") {
  PriorConfig prior;
  prior.kappa_max = 5.0;
  const auto times = unit_times(3);
  CHECK(gp_hyper_log_target(Matrix::Zero(1, 3), {1.0, 6.0}, prior, times, KernelShape::kExponential) ==
        -std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(gp_hyper_log_target(Matrix::Zero(1, 3), {1.0, 4.0}, prior, times, KernelShape::kExponential)));
}

TEST_CASE("MH on zero vectors at one timepoint targets the conjugate posterior") {
  // With T = 1 kappa drops out and tau | v ~ IG(a + n/2, b + 0).
  PriorConfig prior;
  prior.a = 3.0;
  prior.b = 2.0;
  const Matrix v = Matrix::Zero(3, 1);
  const auto times = unit_times(1);
  Rng rng(5);
  GpHyper h{1.0, 1.0};
  const int burn = 5000, n = 400000;
  double sum = 0.0, sum_conj = 0.0;
  for (int k = 0; k < burn + n; ++k) {
    h = mh_update_gp_hyper(rng, v, h, prior, 1.0, 1.0, times, KernelShape::kExponential).hyper;
    if (k >= burn) {
      sum += h.tau;
      sum_conj += conjugate_tau_update(rng, v, h, prior, times, KernelShape::kExponential).tau;
    }
  }
  const double mean = prior.b / (prior.a + 1.5 - 1.0);
  CHECK(sum / n == doctest::Approx(mean).epsilon(0.03));
  CHECK(sum_conj / n == doctest::Approx(mean).epsilon(0.01));
}

TEST_CASE("MH marginals match a grid-evaluated target") {
  const int T = 8;
  const auto times = unit_times(T);
  Rng gen(77);
  const auto cov = scaled_covariance({2.0, 3.0}, times);
  Matrix v(2, T);
  for (int r = 0; r < 2; ++r) v.row(r) = mvn_sample(gen, Vector::Zero(T), cov).transpose();
  PriorConfig prior;

  // Grid over (log tau, log kappa); the target already carries the Jacobian.
  const int G = 50;
  const double lt0 = -4.0, lt1 = 4.0, lk0 = -5.0, lk1 = 6.9;
  Matrix logp(G, G);
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b) {
      const double lt = lt0 + (lt1 - lt0) * (a + 0.5) / G;
      const double lk = lk0 + (lk1 - lk0) * (b + 0.5) / G;
      logp(a, b) = gp_hyper_log_target(v, {std::exp(lt), std::exp(lk)}, prior, times, KernelShape::kExponential);
    }
  const Matrix p = (logp.array() - logp.maxCoeff()).exp().matrix();
  const Vector marg_tau = p.rowwise().sum() / p.sum();
  const Vector marg_kappa = p.colwise().sum().transpose() / p.sum();

  Rng rng(3);
  GpHyper h{1.0, 1.0};
  std::vector<double> lts, lks;
  for (int k = 0; k < 300000; ++k) {
    h = mh_update_gp_hyper(rng, v, h, prior, 0.8, 1.2, times, KernelShape::kExponential).hyper;
    if (k >= 5000) {
      lts.push_back(std::log(h.tau));
      lks.push_back(std::log(h.kappa));
    }
  }
  // 1-Wasserstein distance between the empirical and grid marginals.
  auto w1 = [&](std::vector<double> xs, const Vector& marg, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double cell = (hi - lo) / G;
    double dist = 0.0, cdf = 0.0;
    std::size_t idx = 0;
    for (int a = 0; a < G; ++a) {
      cdf += marg[a];
      const double edge = lo + cell * (a + 1);
      while (idx < xs.size() && xs[idx] <= edge) ++idx;
      dist += std::abs(cdf - static_cast<double>(idx) / static_cast<double>(xs.size())) * cell;
    }
    return dist;
  };
  CHECK(w1(lts, marg_tau, lt0, lt1) < 0.1);
  CHECK(w1(lks, marg_kappa, lk0, lk1) < 0.1);
}

TEST_CASE("tuner adapts toward the target rate") {
  MhTuner up, down;
  for (int k = 0; k < 50; ++k) {
    up.adapt(true, 0.3);
    down.adapt(false, 0.3);
  }
  CHECK(up.scale > 1.0);
  CHECK(down.scale < 1.0);
  CHECK(up.adapt_steps == 50);
}

// ---------------------------------------------------------------------------
// Chain-level properties

TEST_CASE("initial state") {
  const auto sim = oracle::small_sim(8, 3, 2, 2, 41);
  auto mc = config_for(Variant::kDame);
  mc.kappa_beta = 2.5;
  const Model m(sim.data, mc);
  const auto s = initial_state(m);
  for (int t = 0; t < 3; ++t) {
    Matrix x(28, 2);
    Vector y(28);
    int k = 0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < i; ++j, ++k) {
        y[k] = sim.data.network.values[t](i, j);
        for (int p = 0; p < 2; ++p) x(k, p) = sim.data.covariates.at(t, p)(i, j);
      }
    const Vector ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    check_close(Vector(s.beta.col(t)), ols, 1e-9);
  }
  CHECK(s.theta.isZero());
  CHECK(s.d.isZero());
  for (const auto& ut : s.u) CHECK(ut.isZero());
  CHECK(s.hyper_beta[0].tau == 1.0);
  CHECK(s.hyper_beta[0].kappa == 2.5);
  CHECK(s.hyper_theta.kappa == 1.0);
  CHECK(s.sigma2 > 0.0);

  mc.priors.a = 0.5;
  mc.priors.b = 3.0;
  CHECK(initial_state(Model(sim.data, mc)).hyper_beta[1].tau == 3.0);
}

TEST_CASE("retention count follows burn-in and thinning") {
  ChainSettings paper31{6000, 1000, 10, 1};
  CHECK(paper31.retained() == 500);
  ChainSettings paper43{30000, 5000, 50, 1};
  CHECK(paper43.retained() == 500);

  const auto sim = oracle::small_sim(5, 2, 1, 1, 2);
  for (auto [iters, burn, thin] : {std::tuple{23, 5, 4}, std::tuple{10, 0, 1}, std::tuple{12, 3, 5}}) {
    auto mc = config_for(Variant::kDame, 1);
    mc.chain = {iters, burn, thin, 7};
    const auto res = run_chain(Model(sim.data, mc));
    CHECK(res.draws.size() == static_cast<std::size_t>((iters - burn) / thin));
  }
}

TEST_CASE("iterations equal to burn-in retain nothing and warn") {
  const auto sim = oracle::small_sim(5, 2, 1, 1, 2);
  auto mc = config_for(Variant::kDame, 1);
  mc.chain = {5, 5, 1, 1};
  const auto res = run_chain(Model(sim.data, mc));
  CHECK(res.draws.empty());
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("no draws retained") != std::string::npos);
}

TEST_CASE("chains are reproducible for a fixed seed") {
  const auto sim = oracle::small_sim(7, 3, 1, 2, 17, 0.1);
  auto mc = config_for(Variant::kDame);
  mc.chain = {30, 10, 2, 99};
  const auto a = run_chain(Model(sim.data, mc));
  const auto b = run_chain(Model(sim.data, mc));
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t k = 0; k < a.draws.size(); ++k) CHECK(oracle::bit_equal(a.draws[k], b.draws[k]));
  mc.chain.seed = 100;
  const auto c = run_chain(Model(sim.data, mc));
  CHECK_FALSE(oracle::bit_equal(a.draws.back(), c.draws.back()));
}

TEST_CASE("incremental residuals match a fresh computation after a sweep") {
  const Dataset data = absent_sim(9, 4, 50, 0.15);
  for (auto form : {MultiplicativeForm::kEigen, MultiplicativeForm::kInner}) {
    auto mc = config_for(Variant::kDame);
    mc.form = form;
    const Model m(data, mc);
    SamplerContext ctx(m, initial_state(m), 3);
    for (int k = 0; k < 5; ++k) {
      sweep(ctx);
      const auto fresh = compute_residuals(m, ctx.state);
      for (int t = 0; t < m.T(); ++t) CHECK((ctx.E[t] - fresh[t]).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("NO, ME with R = 0 and AE with theta fixed at zero coincide") {
  const Dataset data = absent_sim(8, 3, 60, 0.1);
  auto no = config_for(Variant::kNo, 0);
  auto me = config_for(Variant::kMe, 0);
  auto ae = config_for(Variant::kAe, 0);
  ae.zero_theta = true;
  for (auto* mc : {&no, &me, &ae}) mc->chain = {40, 10, 3, 5};
  const auto a = run_chain(Model(data, no));
  const auto b = run_chain(Model(data, me));
  const auto c = run_chain(Model(data, ae));
  REQUIRE(a.draws.size() == b.draws.size());
  REQUIRE(a.draws.size() == c.draws.size());
  for (std::size_t k = 0; k < a.draws.size(); ++k) {
    CHECK(oracle::bit_equal(a.draws[k], b.draws[k]));
    CHECK(oracle::bit_equal(a.draws[k], c.draws[k]));
  }
}

TEST_CASE("values at structural positions never reach the sampler") {
  const auto sim = oracle::small_sim(8, 6, 1, 2, 70, 0.1);
  Dataset clean = sim.data;
  oracle::make_absent(clean, 2, 0, 3);
  Dataset dirty = clean;
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 8; ++j) {
      if (j == 2) continue;
      dirty.network.values[t](2, j) = dirty.network.values[t](j, 2) = 1e6 + j;
      dirty.covariates.values[t][0](2, j) = dirty.covariates.values[t][0](j, 2) = -7.0 * j;
    }
  auto mc = config_for(Variant::kDame);
  mc.chain = {30, 10, 2, 4};
  const auto a = run_chain(Model(clean, mc));
  const auto b = run_chain(Model(dirty, mc));
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t k = 0; k < a.draws.size(); ++k) CHECK(oracle::bit_equal(a.draws[k], b.draws[k]));
}

TEST_CASE("fixed d stays fixed and the inner form keeps d at one") {
  const auto sim = oracle::small_sim(6, 3, 1, 2, 80);
  auto mc = config_for(Variant::kDame);
  mc.estimate_kappa = false;
  mc.kappa_beta = mc.kappa_theta = 0.0;
  mc.fixed_d = std::vector<double>{-2.0, 2.0};
  mc.chain = {20, 5, 1, 2};
  for (const auto& s : run_chain(Model(sim.data, mc)).draws) {
    CHECK((s.d.row(0).array() == -2.0).all());
    CHECK((s.d.row(1).array() == 2.0).all());
    CHECK(s.hyper_beta[0].kappa == 0.0);
  }
  mc.fixed_d.reset();
  mc.form = MultiplicativeForm::kInner;
  for (const auto& s : run_chain(Model(sim.data, mc)).draws) CHECK(s.d.isOnes());
}

TEST_CASE("imputation draws from the predictive distribution") {
  SUBCASE("zero parameters give standard normals") {
    const auto sim = oracle::small_sim(10, 2, 1, 1, 90, 0.3);
    const Model m(sim.data, config_for(Variant::kDame, 1));
    REQUIRE(m.random_missing().size() > 5);
    auto s = ParameterState::zeros(m.P(), m.N(), m.R(), m.T(), m.random_missing().size());
    s.sigma2 = 1.0;
    SamplerContext ctx(m, s, 1);
    double sum = 0.0, sq = 0.0;
    long n = 0;
    for (int k = 0; k < 5000; ++k) {
      impute_missing(ctx);
      for (Eigen::Index q = 0; q < ctx.state.imputed.size(); ++q) {
        sum += ctx.state.imputed[q];
        sq += ctx.state.imputed[q] * ctx.state.imputed[q];
        ++n;
      }
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
    const auto fresh = compute_residuals(m, ctx.state);
    for (int t = 0; t < m.T(); ++t) CHECK((ctx.E[t] - fresh[t]).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("no missing entries is a no-op") {
    const auto sim = oracle::small_sim(6, 2, 1, 1, 91);
    const Model m(sim.data, config_for(Variant::kDame, 1));
    SamplerContext a(m, initial_state(m), 1), b(m, initial_state(m), 1);
    impute_missing(a);
    CHECK(a.state.imputed.size() == 0);
    CHECK(a.rng.next_u64() == b.rng.next_u64());
  }
  SUBCASE("all but one entry missing") {
    auto sim = oracle::small_sim(6, 2, 1, 1, 92);
    for (int t = 0; t < 2; ++t)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < i; ++j)
          if (t != 0 || i != 1 || j != 0) sim.data.network.set_missing(t, i, j);
    auto mc = config_for(Variant::kDame, 1);
    mc.chain = {4000, 500, 1, 3};
    const Model m(sim.data, mc);
    CHECK(m.random_missing().size() == 29);
    const auto res = run_chain(m);
    REQUIRE(res.draws.size() == 3500);
    // One observation barely moves sigma^2 away from its IG(2, 1) prior, whose median is 0.596.
    std::vector<double> s2;
    for (const auto& s : res.draws) {
      CHECK(s.imputed.allFinite());
      s2.push_back(s.sigma2);
    }
    std::nth_element(s2.begin(), s2.begin() + s2.size() / 2, s2.end());
    const double median = s2[s2.size() / 2];
    CHECK(median > 0.596 / 3.0);
    CHECK(median < 0.596 * 3.0);
  }
}
