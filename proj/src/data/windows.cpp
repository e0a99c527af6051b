#include "flowcast/data/windows.hpp"

#include <cmath>

#include "flowcast/error.hpp"

namespace flowcast::data {

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::All: return "all";
    case SplitTag::Train: return "train";
    case SplitTag::Validation: return "validation";
    case SplitTag::Test: return "test";
  }
  return "unknown";
}

WindowDataset WindowDataset::slice(std::size_t begin, std::size_t end, SplitTag new_tag) const {
  WindowDataset out{history, horizon, past.rows(begin, end), future.rows(begin, end),
                    {starts.begin() + static_cast<std::ptrdiff_t>(begin),
                     starts.begin() + static_cast<std::ptrdiff_t>(end)},
                    new_tag};
  return out;
}

WindowDataset make_windows(const LoadSeries& series, std::size_t h, std::size_t k) {
  if (h == 0 || k == 0) throw InputError("window lengths must be positive");
  const std::size_t offset = static_cast<std::size_t>((24 - series.start.hour_of_day()) % 24);
  const std::size_t usable = series.size() > offset ? series.size() - offset : 0;
  if (usable < h + k) {
    throw InputError("series of " + std::to_string(series.size()) + " hours (" +
                     std::to_string(usable) + " from the first midnight) is shorter than h + k = " +
                     std::to_string(h + k));
  }
  const std::size_t n = (usable - h - k) / k + 1;
  WindowDataset ds;
  ds.history = h;
  ds.horizon = k;
  ds.past = Array({n, h});
  ds.future = Array({n, k});
  ds.starts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p0 = offset + i * k;
    for (std::size_t j = 0; j < h; ++j) ds.past(i, j) = series.kw[p0 + j];
    for (std::size_t j = 0; j < k; ++j) ds.future(i, j) = series.kw[p0 + h + j];
    ds.starts.push_back(series.at(p0 + h));
  }
  return ds;
}

Standardizer::Standardizer(std::vector<double> past_mean, std::vector<double> past_std,
                           std::vector<double> future_mean, std::vector<double> future_std)
    : past_mean_(std::move(past_mean)),
      past_std_(std::move(past_std)),
      future_mean_(std::move(future_mean)),
      future_std_(std::move(future_std)) {}

namespace {

void column_stats(const Array& a, std::vector<double>& mean, std::vector<double>& sd) {
  const std::size_t n = a.extent(0);
  const std::size_t w = a.extent(1);
  mean.assign(w, 0.0);
  sd.assign(w, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < w; ++j) mean[j] += a(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < w; ++j) sd[j] += (a(i, j) - mean[j]) * (a(i, j) - mean[j]);
  }
  for (double& s : sd) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 1e-12)) s = 1.0;
  }
}

Array affine(const Array& a, const std::vector<double>& mean, const std::vector<double>& sd,
             bool forward, const char* what) {
  if (a.rank() != 2 || a.extent(1) != mean.size()) {
    throw DimensionError(std::string(what) + " has shape " + numerics::to_string(a.shape()) +
                         ", expected [N, " + std::to_string(mean.size()) + "]");
  }
  Array out = a;
  for (std::size_t i = 0; i < a.extent(0); ++i) {
    for (std::size_t j = 0; j < a.extent(1); ++j) {
      out(i, j) = forward ? (a(i, j) - mean[j]) / sd[j] : a(i, j) * sd[j] + mean[j];
    }
  }
  return out;
}

void require_fitted(const Standardizer& s) {
  if (!s.fitted()) throw InputError("standardizer has not been fitted");
}

}  // namespace

Standardizer Standardizer::fit(const WindowDataset& train) {
  if (train.size() == 0) throw InputError("cannot fit standardization on an empty training split");
  Standardizer s;
  column_stats(train.past, s.past_mean_, s.past_std_);
  column_stats(train.future, s.future_mean_, s.future_std_);
  return s;
}

Array Standardizer::standardize_past(const Array& past) const {
  require_fitted(*this);
  return affine(past, past_mean_, past_std_, true, "past");
}
Array Standardizer::standardize_future(const Array& future) const {
  require_fitted(*this);
  return affine(future, future_mean_, future_std_, true, "future");
}
Array Standardizer::destandardize_future(const Array& future) const {
  require_fitted(*this);
  return affine(future, future_mean_, future_std_, false, "future");
}
Array Standardizer::destandardize_past(const Array& past) const {
  require_fitted(*this);
  return affine(past, past_mean_, past_std_, false, "past");
}

WindowDataset Standardizer::apply(const WindowDataset& ds) const {
  WindowDataset out = ds;
  if (ds.size() == 0) return out;
  out.past = standardize_past(ds.past);
  out.future = standardize_future(ds.future);
  return out;
}

DataSplits split_and_standardize(const WindowDataset& ds, HourStamp train_end, HourStamp test_start,
                                 double validation_fraction) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InputError("validation fraction must lie in [0, 1)");
  }
  if (test_start < train_end) throw InputError("test start precedes the end of training data");
  if (ds.size() == 0) throw InputError("window dataset is empty");
  const auto k = static_cast<std::int64_t>(ds.horizon);
  if (train_end <= ds.starts.front() || test_start > ds.starts.back()) {
    throw InputError("split dates " + train_end.format() + " / " + test_start.format() +
                     " fall outside the data range " + ds.starts.front().format() + " to " +
                     (ds.starts.back() + k).format());
  }

  std::size_t pool = 0;
  while (pool < ds.size() && ds.starts[pool] + k <= train_end) ++pool;
  std::size_t first_test = pool;
  while (first_test < ds.size() && ds.starts[first_test] < test_start) ++first_test;

  const auto n_val =
      static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(pool)));
  const std::size_t n_train = pool - n_val;
  if (n_train == 0) throw InputError("training split is empty");
  if (first_test == ds.size()) throw InputError("test split is empty");

  DataSplits out;
  out.train = ds.slice(0, n_train, SplitTag::Train);
  out.validation = ds.slice(n_train, pool, SplitTag::Validation);
  out.test = ds.slice(first_test, ds.size(), SplitTag::Test);
  out.standardizer = Standardizer::fit(out.train);
  out.train_std = out.standardizer.apply(out.train);
  out.validation_std = out.standardizer.apply(out.validation);
  out.test_std = out.standardizer.apply(out.test);
  return out;
}

}  // namespace flowcast::data
