#pragma once

#include <cstdint>

#include "dame/kernels.hpp"

// Per-timepoint / per-replicate bodies shared by the serial and OpenMP drivers.
namespace dame::kernels::detail {

void predictor_slice(const Model& model, const ParameterState& s, int t, Matrix& eta);
void residual_slice(const Model& model, const ParameterState& s, int t, Matrix& e);
void fill_imputed(const Model& model, const ParameterState& s, ResidualTensor& out);
Network replicate_one(const Model& model, const ParameterState& draw, std::uint64_t seed);
DegreeMoments replicate_degrees_one(const Model& model, const ParameterState& draw, std::uint64_t seed);

}  // namespace dame::kernels::detail
