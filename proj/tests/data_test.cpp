#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "flowcast/data/load_series.hpp"
#include "flowcast/data/synth.hpp"
#include "flowcast/data/timestamp.hpp"
#include "flowcast/data/windows.hpp"
#include "flowcast/error.hpp"
#include "support.hpp"

namespace flowcast::data {
namespace {

LoadSeries ramp(std::size_t n, const std::string& start = "2020-03-02T00:00:00", double scale = 1.0) {
  LoadSeries s{"r", HourStamp::parse(start), {}};
  for (std::size_t i = 0; i < n; ++i) s.kw.push_back(scale * static_cast<double>(i));
  return s;
}

TEST(HourStamp, ParseAndFormat) {
  const HourStamp t = HourStamp::parse("2013-01-01T00:00:00");
  EXPECT_EQ(t.hours, 1356998400 / 3600);
  EXPECT_EQ(t.day_of_week(), 1);  // Tuesday
  EXPECT_EQ(HourStamp::parse("2012-02-29T23:00:00").format(), "2012-02-29T23:00:00");
  EXPECT_EQ((t + 30).format(), "2013-01-02T06:00:00");
  EXPECT_EQ((t + 30).hour_of_day(), 6);
  EXPECT_EQ(HourStamp::parse_date("2013-01-01"), t);
  EXPECT_EQ(HourStamp::parse("1969-12-31T23:00:00").hours, -1);
  EXPECT_EQ(HourStamp{-1}.hour_of_day(), 23);
  EXPECT_EQ(HourStamp{-1}.day_of_week(), 2);  // Wednesday
}

TEST(HourStamp, RejectsMalformed) {
  for (const char* bad : {"2013-01-01", "2013-01-01T00:30:00", "2013-02-30T00:00:00", "2013-01-01T24:00:00",
                          "2013-1-01T00:00:00", "x", "2013-01-01 00:00:00"}) {
    EXPECT_THROW(HourStamp::parse(bad), InputError) << bad;
  }
  EXPECT_THROW(HourStamp::parse_date("2013-13-01"), InputError);
}

TEST(Csv, RoundTrip) {
  std::vector<LoadSeries> series{ramp(30, "2020-03-02T05:00:00", 0.1), ramp(30, "2020-03-02T05:00:00", 0.7)};
  series[1].household_id = "b";
  std::ostringstream out;
  write_csv(out, series);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_csv(in), series);
}

TEST(Csv, InterleavedRowsAndFirstAppearanceOrder) {
  std::istringstream in(
      "timestamp,household_id,kw\n"
      "2020-01-01T01:00:00,b,2\n"
      "2020-01-01T01:00:00,a,5\n"
      "2020-01-01T00:00:00,b,1\n"
      "2020-01-01T00:00:00,a,4\n");
  const auto s = parse_csv(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].household_id, "b");
  EXPECT_EQ(s[0].kw, (std::vector<double>{1, 2}));
  EXPECT_EQ(s[1].kw, (std::vector<double>{4, 5}));
  EXPECT_EQ(s[1].start.format(), "2020-01-01T00:00:00");
}

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_csv(in);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

TEST(Csv, ErrorsNameTheProblem) {
  const std::string h = "timestamp,household_id,kw\n";
  EXPECT_NE(parse_error("time,id,kw\n").find("header"), std::string::npos);
  EXPECT_NE(parse_error(h + "2020-01-01T00:00:00,a,-1\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error(h + "2020-01-01T00:00:00,a\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error(h + "2020-01-01T00:00:00,a,1\n2020-01-01T00:00:00,a,2\n").find("line 3"),
            std::string::npos);
  EXPECT_NE(parse_error(h + "2020-01-01T00:00:00,a,1\n2020-01-01T00:30:00,a,2\n").find("line 3"),
            std::string::npos);
  const std::string gap = parse_error(h + "2020-01-01T00:00:00,a,1\n2020-01-01T02:00:00,a,2\n");
  EXPECT_NE(gap.find("missing timestamp 2020-01-01T01:00:00"), std::string::npos) << gap;
  EXPECT_NE(parse_error(h + "2020-01-01T00:00:00,a,abc\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error(h).find("no rows"), std::string::npos) << parse_error(h);
}

TEST(Households, SelectionIsSeededAndDistinct) {
  const auto a = select_households(105, 10, 3);
  EXPECT_EQ(a, select_households(105, 10, 3));
  EXPECT_NE(a, select_households(105, 10, 4));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_LT(a.back(), 105u);
  EXPECT_EQ(select_households(5, 5, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_THROW(select_households(5, 6, 1), InputError);
  EXPECT_THROW(select_households(5, 0, 1), InputError);
}

TEST(Households, AggregateSumsPointwise) {
  std::vector<LoadSeries> s{ramp(5, "2020-01-01T00:00:00", 1), ramp(5, "2020-01-01T00:00:00", 2),
                            ramp(5, "2020-01-01T00:00:00", 4)};
  const LoadSeries sum = aggregate(s, {0, 2});
  EXPECT_EQ(sum.kw, (std::vector<double>{0, 5, 10, 15, 20}));
  EXPECT_EQ(aggregate(s, 1, 9).kw.size(), 5u);
  std::vector<LoadSeries> bad{ramp(5), ramp(6)};
  EXPECT_THROW(aggregate(bad, {0, 1}), InputError);
}

TEST(Windows, CountAndAlignment) {
  // Series starts at 05:00; first midnight is 19 hours in.
  const LoadSeries s = ramp(19 + 24 * 10 + 7, "2020-03-02T05:00:00");
  const WindowDataset ds = make_windows(s);
  EXPECT_EQ(ds.size(), 9u);  // (240 + 7 - 48) / 24 + 1
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds.starts[i].hour_of_day(), 0);
    EXPECT_EQ(ds.past(i, 0), 19.0 + 24.0 * i);
    EXPECT_EQ(ds.past(i, 23) + 1, ds.future(i, 0));
    EXPECT_EQ(ds.future(i, 23), 19.0 + 24.0 * i + 47);
  }
  // Window i's future is window i + 1's past.
  EXPECT_EQ(ds.future(0, 5), ds.past(1, 5));
  EXPECT_THROW(make_windows(ramp(47, "2020-03-02T00:00:00")), InputError);
}

TEST(Windows, CustomLengths) {
  const WindowDataset ds = make_windows(ramp(24 * 6, "2020-03-02T00:00:00"), 48, 12);
  EXPECT_EQ(ds.past.extent(1), 48u);
  EXPECT_EQ(ds.future.extent(1), 12u);
  EXPECT_EQ(ds.size(), (144 - 60) / 12 + 1);
}

TEST(Standardizer, PerPositionPopulationStatistics) {
  const WindowDataset ds = make_windows(ramp(24 * 5, "2020-03-02T00:00:00"));
  const Standardizer st = Standardizer::fit(ds);
  // Position j of past holds j, j + 24, j + 48, j + 72.
  EXPECT_DOUBLE_EQ(st.past_mean()[3], 3 + 36.0);
  EXPECT_NEAR(st.past_std()[3], std::sqrt((36.0 * 36 + 12 * 12) * 2 / 4), 1e-12);
  const Array z = st.standardize_future(ds.future);
  EXPECT_LT(numerics::max_abs_difference(st.destandardize_future(z), ds.future), 1e-12);
  double col = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) col += z(i, 7);
  EXPECT_NEAR(col, 0.0, 1e-12);
}

TEST(Standardizer, ZeroSpreadGetsUnitScale) {
  LoadSeries s = ramp(24 * 4, "2020-03-02T00:00:00");
  for (double& v : s.kw) v = 2.0;
  const Standardizer st = Standardizer::fit(make_windows(s));
  EXPECT_EQ(st.past_std()[0], 1.0);
  EXPECT_EQ(st.standardize_past(Array({1, 24}, 2.0))(0, 0), 0.0);
  EXPECT_THROW(Standardizer().standardize_past(Array({1, 24})), InputError);
  EXPECT_THROW(st.standardize_past(Array({1, 23})), DimensionError);
}

TEST(Split, ChronologyAndLeakage) {
  const LoadSeries s = ramp(24 * 40, "2020-03-02T00:00:00");
  const WindowDataset ds = make_windows(s);  // futures start 2020-03-03 .. 2020-04-10
  const HourStamp train_end = HourStamp::parse_date("2020-03-23");
  const HourStamp test_start = HourStamp::parse_date("2020-04-01");
  const DataSplits sp = split_and_standardize(ds, train_end, test_start, 0.25);
  // Pool: futures 03-03 .. 03-22 (20 windows), last 5 for validation.
  EXPECT_EQ(sp.train.size() + sp.validation.size(), 20u);
  EXPECT_EQ(sp.validation.size(), 5u);
  EXPECT_EQ(sp.test.size(), 10u);
  EXPECT_LT(sp.train.starts.back(), sp.validation.starts.front());
  EXPECT_LE(sp.validation.starts.back() + 24, train_end);
  EXPECT_GE(sp.test.starts.front(), test_start);
  EXPECT_EQ(sp.test.tag, SplitTag::Test);
  // Statistics come from the training part alone.
  const Standardizer own = Standardizer::fit(sp.train);
  EXPECT_EQ(own.future_mean(), sp.standardizer.future_mean());
  EXPECT_EQ(sp.test_std.future(0, 0), (sp.test.future(0, 0) - own.future_mean()[0]) / own.future_std()[0]);

  EXPECT_THROW(split_and_standardize(ds, test_start, train_end), InputError);
  EXPECT_THROW(split_and_standardize(ds, HourStamp::parse_date("2020-03-01"), test_start), InputError);
  EXPECT_THROW(split_and_standardize(ds, train_end, HourStamp::parse_date("2021-01-01")), InputError);
}

TEST(Synth, DeterministicAndShaped) {
  SynthSpec spec;
  spec.households = 3;
  spec.days = 28;
  const auto a = synth_generate(spec);
  EXPECT_EQ(a, synth_generate(spec));
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].household_id, "1");
  EXPECT_EQ(a[0].size(), 28u * 24);
  EXPECT_EQ(a[0].start.format(), "2013-01-01T00:00:00");
  for (const auto& s : a) {
    for (double v : s.kw) EXPECT_GE(v, 0.0);
  }
  spec.seed = 8;
  EXPECT_NE(a, synth_generate(spec));
}

TEST(Synth, NoiselessIsWeeklyPeriodicWithEveningPeak) {
  SynthSpec spec;
  spec.households = 2;
  spec.days = 21;
  spec.noise_scale = 0.0;
  for (const auto& s : synth_generate(spec)) {
    for (std::size_t i = 0; i + 168 < s.size(); ++i) EXPECT_NEAR(s.kw[i], s.kw[i + 168], 1e-12);
    // Weekday (Wednesday 2013-01-02): evening above the small hours.
    EXPECT_GT(s.kw[24 + 19], s.kw[24 + 3]);
  }
}

TEST(Synth, Validation) {
  SynthSpec spec;
  spec.households = 0;
  EXPECT_THROW(spec.validate(), InputError);
  spec = {};
  spec.noise_scale = -1;
  EXPECT_THROW(spec.validate(), InputError);
  spec = {};
  spec.start_date = "2013-02-30";
  EXPECT_THROW(spec.validate(), InputError);
}

}  // namespace
}  // namespace flowcast::data
