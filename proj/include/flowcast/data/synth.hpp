#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowcast/data/load_series.hpp"

namespace flowcast::data {

/// Parameters of the synthetic residential load generator. Amplitudes are in
/// kW and are randomized per household around the given values.
struct SynthSpec {
  std::size_t households = 105;
  std::string start_date = "2013-01-01";
  std::size_t days = 1826;
  double base_level = 0.4;
  double morning_amplitude = 0.6;
  double morning_hour = 7.5;
  double evening_amplitude = 1.2;
  double evening_hour = 19.0;
  /// Relative weekend uplift; weekend mornings also peak later.
  double weekly_amplitude = 0.15;
  /// Scales every stochastic term. 0 yields exactly weekly-periodic series.
  double noise_scale = 1.0;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Households are named "1", "2", ... and share the same hourly range.
std::vector<LoadSeries> synth_generate(const SynthSpec& spec);

}  // namespace flowcast::data
