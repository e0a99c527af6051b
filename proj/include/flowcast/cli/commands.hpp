#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "flowcast/cli/config.hpp"
#include "flowcast/data/windows.hpp"
#include "flowcast/evaluation/metrics.hpp"

namespace flowcast::cli {

/// The aggregated series, its windows and the chronological split.
struct PreparedData {
  data::LoadSeries series;
  data::DataSplits splits;
  data::HourStamp train_end;
  data::HourStamp test_start;

  /// Hours covered by the training windows, for fitting baselines.
  std::vector<double> train_series() const;
};

PreparedData prepare_data(const RunConfig& config);

/// Writes `<out>/config.json`.
void echo_config(const RunConfig& config);

/// Upper bound on worker threads: hardware concurrency, capped by the
/// FLOWCAST_THREADS environment variable when set.
std::size_t thread_cap();

/// Writes `<out>/load.csv`. Returns its path.
std::filesystem::path cmd_synth(const RunConfig& config);

struct TrainSummary {
  std::filesystem::path checkpoint;
  double initial_val_nll = 0.0;
  double best_val_nll = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// Writes `<out>/checkpoint/`, `<out>/loss.csv` and `<out>/summary.json`.
TrainSummary cmd_train(const RunConfig& config);

struct ForecastSummary {
  std::size_t windows = 0;
  std::size_t scenarios = 0;
  std::filesystem::path scenarios_csv;
  std::filesystem::path realized_csv;
};

/// Writes `<out>/scenarios.csv` and `<out>/realized.csv` for the test windows.
ForecastSummary cmd_forecast(const RunConfig& config);

struct EvalSummary {
  std::map<std::string, evaluation::CoverageCurve> curves;
  std::map<std::string, std::vector<double>> widths;
};

/// Writes `coverage_<name>.csv`, `width_<name>.csv`, `fan_<name>.svg` per
/// method plus `coverage.svg` and `width.svg` comparing all methods.
EvalSummary cmd_eval(const RunConfig& config);

struct ToySummary {
  training::ToyFit kl;
  training::ToyFit w1;
  /// Second moment of the mixture, the variance matching its moments.
  double moment_matched_sigma2 = 0.0;
};

/// Writes `toy_kl.csv`, `toy_w1.csv` (`sigma2,objective`), `toy_summary.json`
/// and `toy.svg`.
ToySummary cmd_toy(const RunConfig& config);

}  // namespace flowcast::cli
