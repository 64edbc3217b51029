#include <stdexcept>

#include "kernels_detail.hpp"

namespace dame::kernels {

namespace omp {
namespace {
// Below this many dyad-times the thread fork costs more than the loop.
constexpr long kParallelThreshold = 20000;

bool worth_parallel(const Model& model) {
  return static_cast<long>(model.T()) * model.N() * model.N() >= kParallelThreshold;
}
}  // namespace

void linear_predictor(const Model& model, const ParameterState& state, Network& out) {
  const int T = model.T();
  out.resize(T);
#pragma omp parallel for schedule(static) if (worth_parallel(model))
  for (int t = 0; t < T; ++t) detail::predictor_slice(model, state, t, out[t]);
}

void residuals(const Model& model, const ParameterState& state, ResidualTensor& out) {
  const int T = model.T();
  out.resize(T);
#pragma omp parallel for schedule(static) if (worth_parallel(model))
  for (int t = 0; t < T; ++t) detail::residual_slice(model, state, t, out[t]);
  detail::fill_imputed(model, state, out);
}

Matrix degree_stats(const Network& net, int moment) {
  if (moment < 1 || moment > 3) throw std::invalid_argument("degree moment must be 1, 2 or 3");
  const int T = static_cast<int>(net.size());
  Matrix out(T > 0 ? net[0].rows() : 0, T);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) out.col(t) = degree_slice(net[t], moment);
  return out;
}

std::vector<DegreeMoments> replicate_degrees(const Model& model, std::span<const ParameterState* const> draws,
                                             std::span<const std::uint64_t> seeds) {
  if (draws.size() != seeds.size()) throw std::invalid_argument("replicate_degrees: draws/seeds size mismatch");
  const long count = static_cast<long>(draws.size());
  std::vector<DegreeMoments> out(draws.size());
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < count; ++k) out[k] = detail::replicate_degrees_one(model, *draws[k], seeds[k]);
  return out;
}

}  // namespace omp
}  // namespace dame::kernels
