#include "dame/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dame/errors.hpp"

namespace dame {
namespace {

// chi-square(2) 0.95 quantile, -2 log(0.05).
constexpr double kChi2Two95 = 5.991464547107979;

void require_draws(const PosteriorDraws& draws) {
  if (!draws.model) throw std::invalid_argument("posterior draws carry no model");
  if (draws.draws.empty()) throw std::invalid_argument("posterior draws are empty");
}

EigenCoordinates coordinates_from_eigen(const Vector& values, const Matrix& vectors, int R) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(values[a]) > std::abs(values[b]); });
  const double top = n > 0 ? std::abs(values[order[0]]) : 0.0;
  const double tol = 1e-10 * std::max(top, 1e-300);

  EigenCoordinates out;
  out.coords = Matrix::Zero(vectors.rows(), R);
  out.signs = Vector::Ones(R);
  out.eigenvalues = Vector::Zero(R);
  for (int r = 0; r < R; ++r) {
    if (r >= n || std::abs(values[order[r]]) <= tol) {
      out.rank_deficient = true;
      continue;
    }
    const double lambda = values[order[r]];
    out.eigenvalues[r] = lambda;
    out.signs[r] = lambda < 0.0 ? -1.0 : 1.0;
    out.coords.col(r) = std::sqrt(std::abs(lambda)) * vectors.col(order[r]);
  }
  return out;
}

// Aligns `c` to `ref` within same-sign column blocks. Returns false (and
// leaves `c` untouched) when the sign multisets differ.
bool align_blockwise(Matrix& c, Vector& signs, const Matrix& ref, const Vector& ref_signs) {
  const int R = static_cast<int>(signs.size());
  Matrix out = Matrix::Zero(c.rows(), R);
  for (double sign : {1.0, -1.0}) {
    std::vector<int> src, dst;
    for (int r = 0; r < R; ++r) {
      if (signs[r] == sign) src.push_back(r);
      if (ref_signs[r] == sign) dst.push_back(r);
    }
    if (src.size() != dst.size()) return false;
    if (src.empty()) continue;
    Matrix a(c.rows(), static_cast<Eigen::Index>(src.size()));
    Matrix b(c.rows(), static_cast<Eigen::Index>(dst.size()));
    for (std::size_t k = 0; k < src.size(); ++k) {
      a.col(static_cast<Eigen::Index>(k)) = c.col(src[k]);
      b.col(static_cast<Eigen::Index>(k)) = ref.col(dst[k]);
    }
    const Matrix aligned = a * procrustes_rotation(a, b);
    for (std::size_t k = 0; k < dst.size(); ++k) out.col(dst[k]) = aligned.col(static_cast<Eigen::Index>(k));
  }
  c = out;
  signs = ref_signs;
  return true;
}

}  // namespace

std::vector<std::size_t> select_draws(Rng& rng, std::size_t available, std::size_t count) {
  if (available == 0) throw std::invalid_argument("no posterior draws to select from");
  std::vector<std::size_t> idx;
  if (count <= available) {
    idx.resize(available);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(count);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, available - 1);
    for (std::size_t k = 0; k < count; ++k) idx.push_back(pick(rng.engine()));
  }
  return idx;
}

std::vector<Network> ppc_sample(Rng& rng, const PosteriorDraws& draws, int count) {
  require_draws(draws);
  const auto idx = select_draws(rng, draws.draws.size(), static_cast<std::size_t>(count));
  std::vector<Network> out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back(kernels::serial::replicate(*draws.model, draws.draws[k], rng.next_u64()));
  return out;
}

std::vector<DegreeMoments> ppc_degrees(Rng& rng, const PosteriorDraws& draws, int count) {
  require_draws(draws);
  const auto idx = select_draws(rng, draws.draws.size(), static_cast<std::size_t>(count));
  std::vector<const ParameterState*> picked;
  std::vector<std::uint64_t> seeds;
  for (std::size_t k : idx) {
    picked.push_back(&draws.draws[k]);
    seeds.push_back(rng.next_u64());
  }
  return kernels::omp::replicate_degrees(*draws.model, picked, seeds);
}

Matrix degree_stats(const Network& net, int moment) { return kernels::omp::degree_stats(net, moment); }

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> lagged_degree_correlation(const Matrix& degrees, int lag, const AvailabilityMatrix* avail) {
  const int N = static_cast<int>(degrees.rows());
  const int T = static_cast<int>(degrees.cols());
  if (lag < 1 || lag > T - 1) throw std::invalid_argument("lag must lie in [1, T-1]");
  std::vector<double> v1, v2;
  for (int t = 0; t + lag < T; ++t) {
    for (int i = 0; i < N; ++i) {
      if (avail && (!(*avail)(i, t) || !(*avail)(i, t + lag))) continue;
      v1.push_back(degrees(i, t));
      v2.push_back(degrees(i, t + lag));
    }
  }
  return pearson(v1, v2);
}

std::optional<double> lagged_degree_correlation(const Network& net, int lag, const AvailabilityMatrix* avail) {
  return lagged_degree_correlation(degree_stats(net, 1), lag, avail);
}

// ---------------------------------------------------------------------------

EigenCoordinates eigen_coordinates(const Matrix& m, int R) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  return coordinates_from_eigen(es.eigenvalues(), es.eigenvectors(), R);
}

EigenCoordinates eigen_coordinates_factored(const Matrix& u, const Vector& d, int R) {
  const int N = static_cast<int>(u.rows());
  const int k = static_cast<int>(u.cols());
  if (k > N) return eigen_coordinates(u * d.asDiagonal() * u.transpose(), R);
  Eigen::HouseholderQR<Matrix> qr(u);
  const Matrix q = qr.householderQ() * Matrix::Identity(N, k);
  const Matrix rt = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Matrix small = rt * d.asDiagonal() * rt.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (small + small.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  return coordinates_from_eigen(es.eigenvalues(), q * es.eigenvectors(), R);
}

Matrix procrustes_rotation(const Matrix& source, const Matrix& target) {
  Eigen::JacobiSVD<Matrix> svd(source.transpose() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

LatentPositions identify_latent(const PosteriorDraws& draws, int R) {
  require_draws(draws);
  const Model& model = *draws.model;
  if (!model.config().has_multiplicative()) {
    throw DataError("latent positions need a multiplicative-effects fit (variant DAME or ME with R >= 1)");
  }
  if (R < 1) throw std::invalid_argument("identify_latent: R must be >= 1");
  const int T = model.T();
  const long D = static_cast<long>(draws.draws.size());

  LatentPositions out;
  out.R = R;
  out.coords.assign(D, std::vector<Matrix>(T));
  out.signs.assign(D, std::vector<Vector>(T));
  std::vector<std::vector<Matrix>> raw(D, std::vector<Matrix>(T));
  std::vector<std::vector<Vector>> raw_signs(D, std::vector<Vector>(T));
  long deficient = 0;

#pragma omp parallel for schedule(dynamic) reduction(+ : deficient)
  for (long k = 0; k < D; ++k) {
    const auto& s = draws.draws[k];
    for (int t = 0; t < T; ++t) {
      auto ec = eigen_coordinates_factored(s.u[t], effective_d(s, model.config(), t), R);
      raw[k][t] = std::move(ec.coords);
      raw_signs[k][t] = std::move(ec.signs);
      deficient += ec.rank_deficient ? 1 : 0;
    }
  }
  out.rank_deficient = deficient;

  out.reference.resize(T);
  out.reference_signs.resize(T);
  for (int t = 0; t < T; ++t) {
    out.reference[t] = raw[0][t];
    out.reference_signs[t] = raw_signs[0][t];
  }
  for (int pass = 0; pass < 2; ++pass) {
    long mismatches = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : mismatches)
    for (long k = 0; k < D; ++k) {
      for (int t = 0; t < T; ++t) {
        out.coords[k][t] = raw[k][t];
        out.signs[k][t] = raw_signs[k][t];
        if (!align_blockwise(out.coords[k][t], out.signs[k][t], out.reference[t], out.reference_signs[t])) {
          ++mismatches;
        }
      }
    }
    out.sign_mismatches = mismatches;
    if (pass == 0) {
      for (int t = 0; t < T; ++t) {
        Matrix mean = Matrix::Zero(out.reference[t].rows(), R);
        long used = 0;
        for (long k = 0; k < D; ++k) {
          if (out.signs[k][t] == out.reference_signs[t]) {
            mean += out.coords[k][t];
            ++used;
          }
        }
        out.reference[t] = mean / static_cast<double>(std::max(used, 1L));
      }
    }
  }
  return out;
}

std::vector<LatentNodeSummary> summarize_latent(const LatentPositions& latent) {
  std::vector<LatentNodeSummary> out;
  if (latent.coords.empty()) return out;
  const long D = static_cast<long>(latent.coords.size());
  const int T = static_cast<int>(latent.coords[0].size());
  const int N = static_cast<int>(latent.coords[0][0].rows());
  const int R = latent.R;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      Matrix cloud(D, R);
      for (long k = 0; k < D; ++k) cloud.row(k) = latent.coords[k][t].row(i);
      LatentNodeSummary s{t, i, cloud.colwise().mean().transpose(), Vector(R), Vector(R)};
      for (int r = 0; r < R; ++r) {
        std::vector<double> col(cloud.col(r).data(), cloud.col(r).data() + D);
        s.lo95[r] = quantile(col, 0.025);
        s.hi95[r] = quantile(std::move(col), 0.975);
      }
      if (R >= 2 && D >= 2) {
        const Matrix centered = cloud.leftCols(2).rowwise() - s.mean.head(2).transpose();
        const Matrix cov = centered.transpose() * centered / static_cast<double>(D - 1);
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
        const Vector ev = es.eigenvalues().cwiseMax(0.0);  // ascending
        s.semi_major = std::sqrt(kChi2Two95 * ev[1]);
        s.semi_minor = std::sqrt(kChi2Two95 * ev[0]);
        s.angle = std::atan2(es.eigenvectors()(1, 1), es.eigenvectors()(0, 1));
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::string> available_families(const ModelConfig& config) {
  std::vector<std::string> f{"beta", "sigma2", "tau_beta", "kappa_beta"};
  if (config.has_theta()) {
    f.insert(f.end(), {"theta", "tau_theta", "kappa_theta"});
  }
  if (config.has_multiplicative()) {
    f.insert(f.end(), {"u", "tau_u", "d"});
    if (config.estimates_d()) f.insert(f.end(), {"tau_d", "kappa_d"});
  }
  return f;
}

FamilySummary summarize(const PosteriorDraws& draws, const std::string& family) {
  require_draws(draws);
  const Model& model = *draws.model;
  const auto families = available_families(model.config());
  if (std::find(families.begin(), families.end(), family) == families.end()) {
    throw DataError("parameter family '" + family + "' is not part of this fit");
  }
  FamilySummary out{family, {}, {}};
  const auto& all = draws.draws;

  auto add = [&](std::vector<int> index, auto&& get) {
    std::vector<double> values;
    values.reserve(all.size());
    for (const auto& s : all) values.push_back(get(s));
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    const double lo = quantile(values, 0.025);
    const double hi = quantile(std::move(values), 0.975);
    out.rows.push_back({std::move(index), mean, lo, hi});
  };

  const int T = model.T();
  if (family == "beta") {
    out.index_names = {"p", "t"};
    for (int p = 0; p < model.P(); ++p)
      for (int t = 0; t < T; ++t) add({p + 1, t + 1}, [=](const ParameterState& s) { return s.beta(p, t); });
  } else if (family == "theta") {
    out.index_names = {"i", "t"};
    for (int i = 0; i < model.N(); ++i)
      for (int t = 0; t < T; ++t) add({i + 1, t + 1}, [=](const ParameterState& s) { return s.theta(i, t); });
  } else if (family == "d") {
    out.index_names = {"r", "t"};
    for (int r = 0; r < model.R(); ++r)
      for (int t = 0; t < T; ++t) {
        add({r + 1, t + 1}, [&, r, t](const ParameterState& s) { return effective_d(s, model.config(), t)[r]; });
      }
  } else if (family == "u") {
    out.index_names = {"t", "i", "r"};
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < model.N(); ++i)
        for (int r = 0; r < model.R(); ++r)
          add({t + 1, i + 1, r + 1}, [=](const ParameterState& s) { return s.u[t](i, r); });
  } else if (family == "sigma2") {
    add({}, [](const ParameterState& s) { return s.sigma2; });
  } else if (family == "tau_u") {
    out.index_names = {"r", "t"};
    for (int r = 0; r < model.R(); ++r)
      for (int t = 0; t < T; ++t) add({r + 1, t + 1}, [=](const ParameterState& s) { return s.tau_u(r, t); });
  } else if (family == "tau_beta" || family == "kappa_beta") {
    out.index_names = {"p"};
    const bool tau = family == "tau_beta";
    for (int p = 0; p < model.P(); ++p)
      add({p + 1}, [=](const ParameterState& s) { return tau ? s.hyper_beta[p].tau : s.hyper_beta[p].kappa; });
  } else if (family == "tau_theta" || family == "kappa_theta") {
    const bool tau = family == "tau_theta";
    add({}, [=](const ParameterState& s) { return tau ? s.hyper_theta.tau : s.hyper_theta.kappa; });
  } else if (family == "tau_d" || family == "kappa_d") {
    out.index_names = {"r"};
    const bool tau = family == "tau_d";
    for (int r = 0; r < model.R(); ++r)
      add({r + 1}, [=](const ParameterState& s) { return tau ? s.hyper_d[r].tau : s.hyper_d[r].kappa; });
  }
  return out;
}

}  // namespace dame
