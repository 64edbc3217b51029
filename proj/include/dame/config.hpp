#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dame/generator.hpp"
#include "dame/model.hpp"

namespace dame {

/// Simulation request from the `simulate` section.
struct SimulateSection {
  SimConfig sim;
  std::optional<TransitivityPattern> transitivity;
};

/// A run configuration: a JSON object with the sections data, model, priors,
/// mh, chain and simulate. Every key is optional except simulate.N and
/// simulate.T; unknown keys are rejected.
struct RunConfig {
  bool add_intercept = false;  // data.intercept
  ModelConfig model;
  std::optional<SimulateSection> simulate;
};

RunConfig parse_config(std::string_view json_text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Every effective setting, defaults included, as pretty-printed JSON.
std::string config_echo(const RunConfig& config);

}  // namespace dame
