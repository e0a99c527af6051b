#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/data/synth.hpp"
#include "flowcast/flow/flow_model.hpp"
#include "flowcast/training/divergence.hpp"
#include "flowcast/training/trainer.hpp"

namespace flowcast::cli {

struct DataConfig {
  std::filesystem::path path = "data/load.csv";
  /// Number of households summed into the modelled series.
  std::size_t households = 10;
  std::uint64_t selection_seed = 0;
  std::size_t history = 24;
  std::size_t horizon = 24;
  /// ISO dates. When empty, the last `test_days` days are the test period
  /// and training data ends where it begins.
  std::string train_end;
  std::string test_start;
  std::size_t test_days = 90;
  double validation_fraction = 0.1;
};

struct ForecastConfig {
  /// "flow" or "ar-noise".
  std::string method = "flow";
  std::size_t scenarios = 100;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint;
  std::size_t ar_order = 24;
};

struct EvalMethod {
  std::string name;
  std::filesystem::path scenarios;
};

struct EvalConfig {
  std::filesystem::path realized;
  std::vector<EvalMethod> methods;
  std::vector<double> coverage_grid;
  double width_coverage = 0.5;
};

struct ToyConfig {
  training::ToySpec spec;
  training::SigmaGrid grid;
  std::size_t quadrature_nodes = 20000;
};

/// Everything a command needs. Sections irrelevant to a command are ignored
/// but still validated.
struct RunConfig {
  std::filesystem::path out = "out";
  DataConfig data;
  data::SynthSpec synth;
  flow::FlowConfig model;
  training::TrainConfig train;
  ForecastConfig forecast;
  EvalConfig eval;
  ToyConfig toy;

  /// Copies data.history / data.horizon into the model dimensions.
  void resolve();
  void validate() const;
};

/// Unknown keys are rejected so typos fail loudly.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::string> variant;
  std::optional<std::size_t> blocks;
  std::optional<double> beta;
  std::optional<std::size_t> households;
  std::optional<std::size_t> scenarios;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::string> checkpoint;
  std::optional<std::string> method;
};

/// `--households` sets the generated count for `synth` and the aggregated
/// count otherwise; `--seed` sets every seed.
void apply_overrides(RunConfig& config, const std::string& command, const Overrides& overrides);

}  // namespace flowcast::cli
