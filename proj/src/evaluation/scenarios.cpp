#include "flowcast/evaluation/scenarios.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "flowcast/error.hpp"
#include "flowcast/numerics/random.hpp"

namespace flowcast::evaluation {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> ScenarioSet::sorted_hour(std::size_t hour) const {
  std::vector<double> col(count());
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = values(i, hour);
  std::sort(col.begin(), col.end());
  return col;
}

ScenarioSet generate_scenarios(const flow::FlowModel& model, const data::Standardizer& standardizer,
                               const std::vector<double>& history, std::size_t m, std::uint64_t seed) {
  if (!standardizer.fitted()) {
    throw InputError("scenario generation needs the standardization fitted during training");
  }
  if (model.training()) throw InputError("scenario generation needs a model in inference mode");
  if (m == 0) throw InputError("scenario count must be positive");
  if (history.size() != model.cond_dim()) {
    throw DimensionError("history has " + std::to_string(history.size()) +
                         " values but the model conditions on " + std::to_string(model.cond_dim()));
  }
  const Array hist_row({1, history.size()}, history);
  const Array c_std = standardizer.standardize_past(hist_row);
  Array c({m, history.size()});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(c_std.values().begin(), c_std.values().end(), c.values().begin() + i * history.size());
  }
  numerics::Rng rng(seed);
  const Array z = rng.normal_array({m, model.dim()});
  ScenarioSet out;
  out.values = standardizer.destandardize_future(model.sample(c, z));
  out.history = history;
  out.seed = seed;
  return out;
}

std::vector<ScenarioSet> generate_for_windows(const flow::FlowModel& model,
                                              const data::Standardizer& standardizer,
                                              const Array& past, std::size_t m, std::uint64_t seed,
                                              std::size_t threads) {
  if (past.rank() != 2) throw DimensionError("conditioning windows must be [N, h]");
  const std::size_t n = past.extent(0);
  std::vector<ScenarioSet> out(n);
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < n; i += step) {
      out[i] = generate_scenarios(model, standardizer, past.row(i), m, numerics::derive_seed(seed, i));
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        work(t, threads);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_scenarios_csv(std::ostream& out, const std::vector<ScenarioSet>& sets) {
  out << "window_id,scenario_id,hour,kw\n";
  for (std::size_t w = 0; w < sets.size(); ++w) {
    const ScenarioSet& s = sets[w];
    for (std::size_t i = 0; i < s.count(); ++i) {
      for (std::size_t h = 0; h < s.horizon(); ++h) {
        out << w << ',' << i << ',' << h << ',' << format_double(s.values(i, h)) << '\n';
      }
    }
  }
}

void write_scenarios_csv(const std::filesystem::path& path, const std::vector<ScenarioSet>& sets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_scenarios_csv(out, sets);
}

namespace {

// Reads rows of unsigned indices followed by one double, checking the header.
template <std::size_t NIdx, typename Fn>
void read_indexed_csv(const std::filesystem::path& path, const std::string& header, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || (line != header && line != header + "\r")) {
    throw InputError(path.string() + ": expected header '" + header + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::size_t, NIdx> idx{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    bool ok = true;
    for (auto& v : idx) {
      const auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc{} || r.ptr == end || *r.ptr != ',') {
        ok = false;
        break;
      }
      p = r.ptr + 1;
    }
    double value = 0.0;
    if (ok) {
      const auto r = std::from_chars(p, end, value);
      ok = r.ec == std::errc{} && r.ptr == end;
    }
    if (!ok) throw InputError(path.string() + ": malformed row at line " + std::to_string(line_no));
    fn(idx, value, line_no);
  }
}

}  // namespace

std::vector<ScenarioSet> read_scenarios_csv(const std::filesystem::path& path) {
  struct Cell {
    std::size_t w, i, h;
    double v;
  };
  std::vector<Cell> cells;
  std::size_t nw = 0, ni = 0, nh = 0;
  read_indexed_csv<3>(path, "window_id,scenario_id,hour,kw",
                      [&](const std::array<std::size_t, 3>& idx, double v, std::size_t) {
                        cells.push_back({idx[0], idx[1], idx[2], v});
                        nw = std::max(nw, idx[0] + 1);
                        ni = std::max(ni, idx[1] + 1);
                        nh = std::max(nh, idx[2] + 1);
                      });
  if (cells.size() != nw * ni * nh) {
    throw InputError(path.string() + ": scenario table is not a complete window x scenario x hour grid");
  }
  std::vector<ScenarioSet> sets(nw);
  std::vector<std::vector<char>> seen(nw, std::vector<char>(ni * nh, 0));
  for (auto& s : sets) s.values = Array({ni, nh});
  for (const Cell& c : cells) {
    char& flag = seen[c.w][c.i * nh + c.h];
    if (flag) throw InputError(path.string() + ": duplicate scenario entry");
    flag = 1;
    sets[c.w].values(c.i, c.h) = c.v;
  }
  return sets;
}

void write_realized_csv(const std::filesystem::path& path, const Array& realized) {
  if (realized.rank() != 2) throw DimensionError("realized values must be [windows, hours]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "window_id,hour,kw\n";
  for (std::size_t w = 0; w < realized.extent(0); ++w) {
    for (std::size_t h = 0; h < realized.extent(1); ++h) {
      out << w << ',' << h << ',' << format_double(realized(w, h)) << '\n';
    }
  }
}

Array read_realized_csv(const std::filesystem::path& path) {
  std::vector<std::array<std::size_t, 2>> keys;
  std::vector<double> vals;
  std::size_t nw = 0, nh = 0;
  read_indexed_csv<2>(path, "window_id,hour,kw",
                      [&](const std::array<std::size_t, 2>& idx, double v, std::size_t) {
                        keys.push_back(idx);
                        vals.push_back(v);
                        nw = std::max(nw, idx[0] + 1);
                        nh = std::max(nh, idx[1] + 1);
                      });
  if (keys.size() != nw * nh) throw InputError(path.string() + ": realized table is incomplete");
  Array out({nw, nh});
  std::vector<char> seen(nw * nh, 0);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    char& flag = seen[keys[r][0] * nh + keys[r][1]];
    if (flag) throw InputError(path.string() + ": duplicate realized entry");
    flag = 1;
    out(keys[r][0], keys[r][1]) = vals[r];
  }
  return out;
}

}  // namespace flowcast::evaluation
