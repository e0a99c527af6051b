#pragma once

#include <string>
#include <vector>

#include "flowcast/data/load_series.hpp"
#include "flowcast/numerics/array.hpp"

namespace flowcast::data {

using numerics::Array;

enum class SplitTag { All, Train, Validation, Test };
std::string to_string(SplitTag tag);

/// (past, future) pairs: past [N, h] conditions the forecast of future [N, k].
/// `starts[i]` is the first hour of window i's future.
struct WindowDataset {
  std::size_t history = 24;
  std::size_t horizon = 24;
  Array past;
  Array future;
  std::vector<HourStamp> starts;
  SplitTag tag = SplitTag::All;

  std::size_t size() const noexcept { return starts.size(); }
  WindowDataset slice(std::size_t begin, std::size_t end, SplitTag new_tag) const;
};

/// Day-aligned windows advancing by k: the first past begins at the first
/// midnight of the series, so consecutive windows share one boundary block.
WindowDataset make_windows(const LoadSeries& series, std::size_t h = 24, std::size_t k = 24);

/// Per-position affine standardization, fitted separately for past and
/// future positions. Positions with zero spread get unit scale.
class Standardizer {
 public:
  Standardizer() = default;
  static Standardizer fit(const WindowDataset& train);

  bool fitted() const noexcept { return !past_mean_.empty(); }

  Array standardize_past(const Array& past) const;
  Array standardize_future(const Array& future) const;
  Array destandardize_future(const Array& future) const;
  Array destandardize_past(const Array& past) const;
  WindowDataset apply(const WindowDataset& ds) const;

  const std::vector<double>& past_mean() const noexcept { return past_mean_; }
  const std::vector<double>& past_std() const noexcept { return past_std_; }
  const std::vector<double>& future_mean() const noexcept { return future_mean_; }
  const std::vector<double>& future_std() const noexcept { return future_std_; }

  Standardizer(std::vector<double> past_mean, std::vector<double> past_std,
               std::vector<double> future_mean, std::vector<double> future_std);

 private:
  std::vector<double> past_mean_, past_std_, future_mean_, future_std_;
};

struct DataSplits {
  WindowDataset train, validation, test;  // kW
  WindowDataset train_std, validation_std, test_std;
  Standardizer standardizer;
};

/// Chronological split. Windows whose future ends before `train_end` form the
/// training pool; the last `validation_fraction` of that pool is held out
/// for validation. Test windows are those whose future starts at or after
/// `test_start`, which may not precede `train_end`. Statistics come from the
/// training part only.
DataSplits split_and_standardize(const WindowDataset& ds, HourStamp train_end, HourStamp test_start,
                                 double validation_fraction = 0.1);

}  // namespace flowcast::data
