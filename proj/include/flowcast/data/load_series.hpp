#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowcast/data/timestamp.hpp"

namespace flowcast::data {

/// Hourly power readings (kW) of one household, starting at `start`.
struct LoadSeries {
  std::string household_id;
  HourStamp start;
  std::vector<double> kw;

  std::size_t size() const noexcept { return kw.size(); }
  HourStamp end() const { return start + static_cast<std::int64_t>(kw.size()); }
  HourStamp at(std::size_t i) const { return start + static_cast<std::int64_t>(i); }

  friend bool operator==(const LoadSeries&, const LoadSeries&) = default;
};

/// Reads `timestamp,household_id,kw` rows. Households are returned in order
/// of first appearance; rows of one household may be interleaved with others
/// but must form a gap-free hourly run once sorted.
std::vector<LoadSeries> parse_csv(std::istream& in);
std::vector<LoadSeries> parse_csv(const std::filesystem::path& path);

void write_csv(std::ostream& out, const std::vector<LoadSeries>& series);
void write_csv(const std::filesystem::path& path, const std::vector<LoadSeries>& series);

/// Picks n distinct indices out of `available`, sorted ascending.
std::vector<std::size_t> select_households(std::size_t available, std::size_t n, std::uint64_t seed);

/// Pointwise sum of the chosen series. All must cover the same hours.
LoadSeries aggregate(const std::vector<LoadSeries>& series, const std::vector<std::size_t>& chosen);
/// Seeded choice of n households followed by the pointwise sum.
LoadSeries aggregate(const std::vector<LoadSeries>& series, std::size_t n, std::uint64_t seed);

}  // namespace flowcast::data
