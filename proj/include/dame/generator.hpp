#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dame/model.hpp"

namespace dame {

enum class TransitivityPattern { kPositive, kMixed, kNegative };

TransitivityPattern parse_pattern(const std::string& s);
std::string to_string(TransitivityPattern p);

struct SimConfig {
  int N = 20;
  int T = 10;
  int P = 1;
  int R = 2;
  double kappa_beta = 10.0;
  double kappa_theta = 10.0;
  double kappa_d = 10.0;
  double a = 2.0;
  double b = 1.0;
  double a_sigma = 2.0;
  double b_sigma = 1.0;
  KernelShape kernel = KernelShape::kExponential;
  /// When set, d^t_r is held at fixed_d(r, t) instead of drawn from its GP.
  std::optional<Matrix> fixed_d;
  /// User-supplied covariates replace the standard-normal default.
  std::optional<CovariateTensor> covariates;
  /// Fraction of available dyads hidden as random-missing.
  double holdout_fraction = 0.0;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

struct SimulatedData {
  Dataset data;
  ParameterState truth;  // imputed holds the hidden responses at random-missing positions
  ResidualTensor noise;  // epsilon on available dyads
};

SimulatedData simulate_dataset(const SimConfig& config);

/// R = 2 data with d fixed at +-2: (+,+), (-,+) or (-,-). beta and theta are
/// generated with the kappa values already in `config`.
SimulatedData simulate_transitivity_dataset(SimConfig config, TransitivityPattern pattern);

/// The +-2 sign pattern as an R x T matrix.
Matrix transitivity_d(TransitivityPattern pattern, int T);

}  // namespace dame
