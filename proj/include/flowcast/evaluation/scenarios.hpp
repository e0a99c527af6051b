#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "flowcast/data/windows.hpp"
#include "flowcast/flow/flow_model.hpp"

namespace flowcast::evaluation {

using numerics::Array;

/// m sampled trajectories [m, k] in kW for one conditioning history.
struct ScenarioSet {
  Array values;
  std::vector<double> history;
  std::uint64_t seed = 0;

  std::size_t count() const { return values.rank() == 2 ? values.extent(0) : 0; }
  std::size_t horizon() const { return values.rank() == 2 ? values.extent(1) : 0; }
  /// Scenario values at one hour, sorted ascending.
  std::vector<double> sorted_hour(std::size_t hour) const;
};

/// Draws z ~ N(0, I) from `seed`, pushes it through the inverse flow
/// conditioned on the standardized history and maps the result back to kW.
/// The model must be in inference mode and the standardizer fitted.
ScenarioSet generate_scenarios(const flow::FlowModel& model, const data::Standardizer& standardizer,
                               const std::vector<double>& history, std::size_t m, std::uint64_t seed);

/// One scenario set per row of `past` [N, h] (kW). Window i uses the seed
/// derive_seed(seed, i), so results do not depend on `threads`.
std::vector<ScenarioSet> generate_for_windows(const flow::FlowModel& model,
                                              const data::Standardizer& standardizer,
                                              const Array& past, std::size_t m, std::uint64_t seed,
                                              std::size_t threads = 1);

/// `window_id,scenario_id,hour,kw`
void write_scenarios_csv(std::ostream& out, const std::vector<ScenarioSet>& sets);
void write_scenarios_csv(const std::filesystem::path& path, const std::vector<ScenarioSet>& sets);
/// Inverse of write_scenarios_csv. Histories and seeds are not stored.
std::vector<ScenarioSet> read_scenarios_csv(const std::filesystem::path& path);

/// `window_id,hour,kw`
void write_realized_csv(const std::filesystem::path& path, const Array& realized);
Array read_realized_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace flowcast::evaluation
