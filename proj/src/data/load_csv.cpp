#include "flowcast/data/load_series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "flowcast/error.hpp"

namespace flowcast::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

struct Reading {
  HourStamp stamp;
  double kw;
  std::size_t line;
};

}  // namespace

std::vector<LoadSeries> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "timestamp,household_id,kw") {
    throw InputError("line 1: expected header 'timestamp,household_id,kw'");
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<Reading>> readings;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      throw InputError(line_error(line_no, "expected 3 comma-separated fields"));
    }
    HourStamp stamp;
    try {
      stamp = HourStamp::parse(trim(row.substr(0, c1)));
    } catch (const InputError& e) {
      throw InputError(line_error(line_no, e.what()));
    }
    const std::string id(trim(row.substr(c1 + 1, c2 - c1 - 1)));
    if (id.empty()) throw InputError(line_error(line_no, "empty household_id"));
    const std::string_view value = trim(row.substr(c2 + 1));
    double kw = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), kw);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(kw)) {
      throw InputError(line_error(line_no, "malformed kw value '" + std::string(value) + "'"));
    }
    if (kw < 0.0) throw InputError(line_error(line_no, "negative power " + std::string(value)));
    auto [it, inserted] = readings.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back({stamp, kw, line_no});
  }

  if (order.empty()) throw InputError("load CSV has no rows");
  std::vector<LoadSeries> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    auto& rows = readings[id];
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Reading& a, const Reading& b) { return a.stamp < b.stamp; });
    LoadSeries s{id, rows.front().stamp, {}};
    s.kw.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0) {
        const auto step = rows[i].stamp - rows[i - 1].stamp;
        if (step == 0) {
          throw InputError(line_error(rows[i].line, "duplicate timestamp " + rows[i].stamp.format() +
                                                        " for household " + id));
        }
        if (step > 1) {
          throw InputError("household " + id + ": missing timestamp " +
                           (rows[i - 1].stamp + 1).format());
        }
      }
      s.kw.push_back(rows[i].kw);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LoadSeries> parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_csv(in);
}

void write_csv(std::ostream& out, const std::vector<LoadSeries>& series) {
  out << "timestamp,household_id,kw\n";
  char buf[64];
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.kw.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof buf, s.kw[i]);
      out << s.at(i).format() << ',' << s.household_id << ',' << std::string_view(buf, res.ptr - buf)
          << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<LoadSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_csv(out, series);
  if (!out) throw InputError("failed writing " + path.string());
}

std::vector<std::size_t> select_households(std::size_t available, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InputError("at least one household must be selected");
  if (n > available) {
    throw InputError("requested " + std::to_string(n) + " households but only " +
                     std::to_string(available) + " are available");
  }
  std::vector<std::size_t> idx(available);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with explicit draws so the choice is portable.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (available - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

LoadSeries aggregate(const std::vector<LoadSeries>& series, const std::vector<std::size_t>& chosen) {
  if (chosen.empty()) throw InputError("nothing to aggregate");
  for (auto i : chosen) {
    if (i >= series.size()) throw InputError("household index out of range");
  }
  const LoadSeries& first = series[chosen.front()];
  if (chosen.size() == 1) return first;
  LoadSeries out{"aggregate_" + std::to_string(chosen.size()), first.start,
                 std::vector<double>(first.size(), 0.0)};
  for (auto i : chosen) {
    const LoadSeries& s = series[i];
    if (s.start != first.start || s.size() != first.size()) {
      throw InputError("household " + s.household_id + " covers " + s.start.format() + " to " +
                       s.end().format() + ", expected " + first.start.format() + " to " +
                       first.end().format());
    }
    for (std::size_t t = 0; t < s.size(); ++t) out.kw[t] += s.kw[t];
  }
  return out;
}

LoadSeries aggregate(const std::vector<LoadSeries>& series, std::size_t n, std::uint64_t seed) {
  return aggregate(series, select_households(series.size(), n, seed));
}

}  // namespace flowcast::data
