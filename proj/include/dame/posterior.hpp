#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dame/kernels.hpp"
#include "dame/model.hpp"
#include "dame/rng.hpp"

namespace dame {

using kernels::DegreeMoments;
using kernels::Network;

/// Retained draws plus the model they were fitted to.
struct PosteriorDraws {
  std::shared_ptr<const Model> model;
  std::vector<ParameterState> draws;
};

/// Indices of `count` draws: without replacement when count <= available, otherwise with.
std::vector<std::size_t> select_draws(Rng& rng, std::size_t available, std::size_t count);

/// Posterior predictive networks, one per selected draw.
std::vector<Network> ppc_sample(Rng& rng, const PosteriorDraws& draws, int count);

/// Degree moments 1..3 of `count` posterior predictive replicates, without
/// keeping the replicate networks in memory.
std::vector<DegreeMoments> ppc_degrees(Rng& rng, const PosteriorDraws& draws, int count);

/// Row sums of (Y^t)^m per timepoint (N x T); missing entries count as 0.
Matrix degree_stats(const Network& net, int moment);

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson correlation between stacked degree vectors `lag` timepoints apart.
/// With `avail`, a (node, t) pair enters only when the node is available at
/// both t and t + lag. Returns nullopt when either stacked vector is constant.
std::optional<double> lagged_degree_correlation(const Matrix& degrees, int lag,
                                                const AvailabilityMatrix* avail = nullptr);
std::optional<double> lagged_degree_correlation(const Network& net, int lag,
                                                const AvailabilityMatrix* avail = nullptr);

// ---------------------------------------------------------------------------
// Latent positions

/// Coordinates c_r = sqrt(|lambda_r|) v_r for the R eigenpairs of largest
/// |lambda|, columns in descending |lambda|. M is reconstructed by
/// sum_r sign_r c_r c_r'.
struct EigenCoordinates {
  Matrix coords;        // N x R
  Vector signs;         // +1 / -1
  Vector eigenvalues;   // signed, length R
  bool rank_deficient = false;
};

EigenCoordinates eigen_coordinates(const Matrix& m, int R);
/// Same result for M = U diag(d) U' without forming the N x N matrix.
EigenCoordinates eigen_coordinates_factored(const Matrix& u, const Vector& d, int R);

/// Orthogonal Q minimizing ||source Q - target||_F (reflections allowed).
Matrix procrustes_rotation(const Matrix& source, const Matrix& target);

struct LatentPositions {
  int R = 0;
  std::vector<std::vector<Matrix>> coords;  // [draw][t], N x R, aligned
  std::vector<std::vector<Vector>> signs;   // [draw][t]
  std::vector<Matrix> reference;            // [t]
  std::vector<Vector> reference_signs;      // [t]
  long sign_mismatches = 0;  // draws left unaligned because their sign pattern differs from the reference
  long rank_deficient = 0;
};

/// Eigendecomposition of u' D u for every draw and t, followed by blockwise
/// (same eigenvalue sign) Procrustes alignment: first to the first draw, then
/// once more to the mean of the aligned draws.
LatentPositions identify_latent(const PosteriorDraws& draws, int R);

struct LatentNodeSummary {
  int t;
  int node;
  Vector mean;         // length R
  Vector lo95, hi95;   // per-dimension central intervals
  // 95% coverage ellipse of the first two dimensions (R >= 2).
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // radians, major axis against dimension 1
};

std::vector<LatentNodeSummary> summarize_latent(const LatentPositions& latent);

// ---------------------------------------------------------------------------
// Summaries

/// Empirical quantile with linear interpolation between order statistics:
/// position h = (n - 1) q on the sorted sample.
double quantile(std::vector<double> values, double q);

struct SummaryRow {
  std::vector<int> index;  // 1-based, matching the draw files
  double mean;
  double lo95;
  double hi95;
};

struct FamilySummary {
  std::string family;
  std::vector<std::string> index_names;
  std::vector<SummaryRow> rows;
};

/// Families: beta (p,t), theta (i,t), d (r,t), u (t,i,r), sigma2, tau_u (r,t),
/// tau_beta / kappa_beta (p), tau_theta / kappa_theta, tau_d / kappa_d (r).
FamilySummary summarize(const PosteriorDraws& draws, const std::string& family);
std::vector<std::string> available_families(const ModelConfig& config);

}  // namespace dame
