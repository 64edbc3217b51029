#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dame/model.hpp"

// Data-parallel kernels. Every routine exists twice: `serial` is the reference
// implementation kept for testing, `omp` parallelizes the outer loop with
// OpenMP. The two produce bit-identical results because each output element
// is computed by the same arithmetic in both versions.
namespace dame::kernels {

/// T slices of N x N values. Missing entries are NaN.
using Network = std::vector<Matrix>;

/// Degrees for moments 1..3, each N x T.
using DegreeMoments = std::array<Matrix, 3>;

/// Row sums of (Y^t)^m with the diagonal and missing entries taken as 0.
Matrix degree_slice(const Matrix& y, int moment);

namespace serial {

/// eta^t_ij = sum_p beta^t_p X^t_ijp + theta^t_i + theta^t_j + u^t_i' D^t u^t_j (diagonal zero).
void linear_predictor(const Model& model, const ParameterState& state, Network& out);

/// E^t = (Y^t - eta^t) on available dyads, 0 elsewhere. Random-missing slots
/// of Y use state.imputed.
void residuals(const Model& model, const ParameterState& state, ResidualTensor& out);

/// Degree statistics (N x T) of one network for moment m in {1,2,3}.
Matrix degree_stats(const Network& net, int moment);

/// One posterior predictive replicate per (draw, seed) pair: eta + N(0, sigma2)
/// noise on available dyads, NaN on structural positions and the diagonal.
Network replicate(const Model& model, const ParameterState& draw, std::uint64_t seed);

/// Degree moments of replicates generated from draws[k] with seeds[k]. The
/// replicate networks are not retained.
std::vector<DegreeMoments> replicate_degrees(const Model& model, std::span<const ParameterState* const> draws,
                                             std::span<const std::uint64_t> seeds);

}  // namespace serial

namespace omp {

void linear_predictor(const Model& model, const ParameterState& state, Network& out);
void residuals(const Model& model, const ParameterState& state, ResidualTensor& out);
Matrix degree_stats(const Network& net, int moment);
std::vector<DegreeMoments> replicate_degrees(const Model& model, std::span<const ParameterState* const> draws,
                                             std::span<const std::uint64_t> seeds);

}  // namespace omp

}  // namespace dame::kernels
