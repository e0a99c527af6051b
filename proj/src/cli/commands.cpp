#include "flowcast/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <thread>

#include "flowcast/data/synth.hpp"
#include "flowcast/error.hpp"
#include "flowcast/evaluation/ar_baseline.hpp"
#include "flowcast/evaluation/svg.hpp"
#include "flowcast/flow/checkpoint.hpp"
#include "flowcast/numerics/random.hpp"

namespace flowcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using numerics::Array;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

json standardizer_to_json(const data::Standardizer& s) {
  return json{{"past_mean", s.past_mean()},
              {"past_std", s.past_std()},
              {"future_mean", s.future_mean()},
              {"future_std", s.future_std()}};
}

data::Standardizer standardizer_from_json(const json& j) {
  try {
    return data::Standardizer(j.at("past_mean").get<std::vector<double>>(),
                              j.at("past_std").get<std::vector<double>>(),
                              j.at("future_mean").get<std::vector<double>>(),
                              j.at("future_std").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint lacks standardization statistics: ") + e.what());
  }
}

fs::path checkpoint_path(const RunConfig& c) {
  return c.forecast.checkpoint.empty() ? c.out / "checkpoint" : c.forecast.checkpoint;
}

}  // namespace

std::vector<double> PreparedData::train_series() const {
  const auto& train = splits.train;
  const auto end = static_cast<std::size_t>((train.starts.back() - series.start) +
                                            static_cast<std::int64_t>(train.horizon));
  return {series.kw.begin(), series.kw.begin() + static_cast<std::ptrdiff_t>(end)};
}

PreparedData prepare_data(const RunConfig& c) {
  if (!fs::exists(c.data.path)) throw InputError("dataset not found: " + c.data.path.string());
  const std::vector<data::LoadSeries> all = data::parse_csv(c.data.path);
  if (all.empty()) throw InputError("dataset " + c.data.path.string() + " has no rows");
  PreparedData p;
  p.series = data::aggregate(all, c.data.households, c.data.selection_seed);
  const data::WindowDataset windows = data::make_windows(p.series, c.data.history, c.data.horizon);
  if (c.data.train_end.empty()) {
    const auto test_hours = static_cast<std::int64_t>(c.data.test_days * 24);
    const data::HourStamp last_end = windows.starts.back() + static_cast<std::int64_t>(c.data.horizon);
    data::HourStamp start = last_end + (-test_hours);
    start = start + static_cast<std::int64_t>((24 - start.hour_of_day()) % 24);
    p.test_start = start;
    p.train_end = start;
  } else {
    p.train_end = data::HourStamp::parse_date(c.data.train_end);
    p.test_start = data::HourStamp::parse_date(c.data.test_start);
  }
  p.splits = data::split_and_standardize(windows, p.train_end, p.test_start, c.data.validation_fraction);
  return p;
}

void echo_config(const RunConfig& c) {
  ensure_dir(c.out);
  write_text(c.out / "config.json", config_to_json(c).dump(2) + "\n");
}

std::size_t thread_cap() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLOWCAST_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw InputError("FLOWCAST_THREADS must be a positive integer");
    n = std::min(n, static_cast<std::size_t>(v));
  }
  return n;
}

fs::path cmd_synth(const RunConfig& c) {
  c.validate();
  echo_config(c);
  const fs::path path = c.out / "load.csv";
  data::write_csv(path, data::synth_generate(c.synth));
  return path;
}

TrainSummary cmd_train(const RunConfig& c) {
  c.validate();
  const PreparedData p = prepare_data(c);
  echo_config(c);

  const training::ConditionalData train{p.splits.train_std.future, p.splits.train_std.past};
  const training::ConditionalData val{p.splits.validation_std.future, p.splits.validation_std.past};
  const training::TrainResult result = c.train.beta > 0.0 ? training::train_wflow(c.model, train, val, c.train)
                                                          : training::train_mle(c.model, train, val, c.train);

  TrainSummary summary;
  summary.checkpoint = c.out / "checkpoint";
  summary.initial_val_nll = result.history.front().val_nll;
  summary.best_val_nll = result.best_val_nll;
  summary.best_epoch = result.best_epoch;
  summary.epochs_run = result.history.size() - 1;

  const json metadata{{"standardizer", standardizer_to_json(p.splits.standardizer)},
                      {"data",
                       {{"households", c.data.households},
                        {"selection_seed", c.data.selection_seed},
                        {"history", c.data.history},
                        {"horizon", c.data.horizon},
                        {"train_end", p.train_end.format()},
                        {"test_start", p.test_start.format()}}},
                      {"training",
                       {{"beta", c.train.beta},
                        {"best_epoch", summary.best_epoch},
                        {"epochs_run", summary.epochs_run},
                        {"best_val_nll", summary.best_val_nll}}}};
  flow::save_checkpoint(result.model, summary.checkpoint, metadata);
  training::write_loss_csv(c.out / "loss.csv", result.history);
  write_text(c.out / "summary.json", json{{"initial_val_nll", summary.initial_val_nll},
                                          {"best_val_nll", summary.best_val_nll},
                                          {"best_epoch", summary.best_epoch},
                                          {"epochs_run", summary.epochs_run}}
                                             .dump(2) +
                                         "\n");
  return summary;
}

ForecastSummary cmd_forecast(const RunConfig& c) {
  c.validate();
  const std::size_t m = c.forecast.scenarios;
  std::vector<evaluation::ScenarioSet> sets;
  PreparedData p;

  if (c.forecast.method == "flow") {
    const fs::path ckpt = checkpoint_path(c);
    if (!fs::exists(ckpt)) throw InputError("checkpoint not found: " + ckpt.string());
    flow::LoadedCheckpoint loaded = flow::load_checkpoint(ckpt);
    if (loaded.model.dim() != c.data.horizon || loaded.model.cond_dim() != c.data.history) {
      throw InputError("checkpoint models " + std::to_string(loaded.model.cond_dim()) + " -> " +
                       std::to_string(loaded.model.dim()) + " hours but the config asks for " +
                       std::to_string(c.data.history) + " -> " + std::to_string(c.data.horizon));
    }
    const data::Standardizer standardizer = standardizer_from_json(loaded.metadata.value("standardizer", json{}));
    p = prepare_data(c);
    echo_config(c);
    loaded.model.set_training(false);
    sets = evaluation::generate_for_windows(loaded.model, standardizer, p.splits.test.past, m,
                                            c.forecast.seed, thread_cap());
  } else {
    p = prepare_data(c);
    echo_config(c);
    const evaluation::ARBaseline ar = evaluation::ar_fit(p.train_series(), c.forecast.ar_order);
    if (ar.ridge_fallback) {
      std::fprintf(stderr, "warning: AR normal equations are singular; fitted with a ridge term\n");
    }
    const Array& past = p.splits.test.past;
    for (std::size_t i = 0; i < past.extent(0); ++i) {
      const std::vector<double> hist = past.row(i);
      sets.push_back(evaluation::ar_scenarios(ar, hist, c.data.horizon, m,
                                              numerics::derive_seed(c.forecast.seed, i)));
    }
  }

  ForecastSummary summary{sets.size(), m, c.out / "scenarios.csv", c.out / "realized.csv"};
  evaluation::write_scenarios_csv(summary.scenarios_csv, sets);
  evaluation::write_realized_csv(summary.realized_csv, p.splits.test.future);
  return summary;
}

EvalSummary cmd_eval(const RunConfig& c) {
  c.validate();
  if (c.eval.methods.empty()) throw InputError("eval needs at least one method in eval.methods");
  if (c.eval.realized.empty()) throw InputError("eval needs eval.realized");
  const Array realized = evaluation::read_realized_csv(c.eval.realized);
  std::map<std::string, std::vector<evaluation::ScenarioSet>> loaded;
  for (const auto& m : c.eval.methods) {
    auto sets = evaluation::read_scenarios_csv(m.scenarios);
    if (sets.size() != realized.extent(0) || (!sets.empty() && sets.front().horizon() != realized.extent(1))) {
      throw InputError("scenarios of '" + m.name + "' cover " + std::to_string(sets.size()) +
                       " windows, realized data covers " + std::to_string(realized.extent(0)));
    }
    loaded.emplace(m.name, std::move(sets));
  }
  echo_config(c);

  EvalSummary summary;
  evaluation::SvgChart coverage_chart("Deviation vs coverage", "coverage size", "mean deviation (kW)");
  evaluation::SvgChart width_chart("50% PI width by hour", "hour", "width (kW)");
  std::vector<double> hours(realized.extent(1));
  for (std::size_t h = 0; h < hours.size(); ++h) hours[h] = static_cast<double>(h);

  for (const auto& m : c.eval.methods) {
    const auto& sets = loaded.at(m.name);
    const evaluation::CoverageCurve curve = evaluation::deviation_coverage(sets, realized, c.eval.coverage_grid);
    const auto bands = evaluation::quantile_bands(sets, c.eval.width_coverage);
    const std::vector<double> width = evaluation::pi_width_profile(bands);
    evaluation::write_coverage_csv(c.out / ("coverage_" + m.name + ".csv"), curve);
    evaluation::write_width_csv(c.out / ("width_" + m.name + ".csv"), width);
    coverage_chart.add_line(m.name, curve.coverage, curve.deviation);
    width_chart.add_line(m.name, hours, width);

    // Fan chart over the first week of test windows, floored at 0 kW for display.
    const std::size_t days = std::min<std::size_t>(7, sets.size());
    std::vector<double> xs, lo, med, hi, real;
    for (std::size_t w = 0; w < days; ++w) {
      for (std::size_t h = 0; h < hours.size(); ++h) {
        xs.push_back(static_cast<double>(w * hours.size() + h));
        lo.push_back(std::max(0.0, bands[w].lower[h]));
        hi.push_back(std::max(0.0, bands[w].upper[h]));
        const auto band = evaluation::quantile_band(sets[w], 0.0);
        med.push_back(std::max(0.0, band.median[h]));
        real.push_back(realized(w, h));
      }
    }
    evaluation::SvgChart fan(m.name + ": median and 50% band", "hour", "load (kW)");
    fan.add_band("50% band", xs, lo, hi, "#1f77b4");
    fan.add_line("median", xs, med, "#1f77b4", true);
    fan.add_line("realized", xs, real, "#222222");
    fan.write(c.out / ("fan_" + m.name + ".svg"));

    summary.curves.emplace(m.name, curve);
    summary.widths.emplace(m.name, width);
  }
  coverage_chart.write(c.out / "coverage.svg");
  width_chart.write(c.out / "width.svg");
  return summary;
}

ToySummary cmd_toy(const RunConfig& c) {
  c.validate();
  echo_config(c);
  ToySummary s;
  s.kl = training::toy_fit(c.toy.spec, training::ToyMetric::KL, c.toy.grid, c.toy.quadrature_nodes);
  s.w1 = training::toy_fit(c.toy.spec, training::ToyMetric::W1, c.toy.grid, c.toy.quadrature_nodes);
  const auto& t = c.toy.spec;
  s.moment_matched_sigma2 = t.weight1 * t.mu1 * t.mu1 + (1.0 - t.weight1) * t.mu2 * t.mu2 +
                            t.component_variance;

  for (const auto* fit : {&s.kl, &s.w1}) {
    std::ofstream out(c.out / (fit == &s.kl ? "toy_kl.csv" : "toy_w1.csv"), std::ios::binary);
    if (!out) throw InputError("cannot write toy curves to " + c.out.string());
    out << "sigma2,objective\n";
    for (std::size_t i = 0; i < fit->sigma2.size(); ++i) {
      out << evaluation::format_double(fit->sigma2[i]) << ',' << evaluation::format_double(fit->objective[i])
          << '\n';
    }
  }
  write_text(c.out / "toy_summary.json",
             json{{"kl_argmin_sigma2", s.kl.argmin_sigma2},
                  {"kl_min", s.kl.min_objective},
                  {"w1_argmin_sigma2", s.w1.argmin_sigma2},
                  {"w1_min", s.w1.min_objective},
                  {"moment_matched_sigma2", s.moment_matched_sigma2},
                  {"reference_kl_sigma2", 1.05},
                  {"reference_w1_sigma2", 0.0},
                  {"grid_points", s.kl.sigma2.size()}}
                     .dump(2) +
                 "\n");

  std::vector<double> xs, mix, kl_fit, w1_fit;
  auto normal_pdf = [](double x, double v) {
    return std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * std::numbers::pi * v);
  };
  for (int i = 0; i <= 600; ++i) {
    const double x = -3.0 + 0.01 * i;
    xs.push_back(x);
    mix.push_back(t.density(x));
    kl_fit.push_back(normal_pdf(x, s.kl.argmin_sigma2));
    w1_fit.push_back(normal_pdf(x, s.w1.argmin_sigma2));
  }
  evaluation::SvgChart chart("Gaussian fits to a two-component mixture", "x", "density");
  chart.add_line("mixture", xs, mix, "#222222");
  chart.add_line("KL fit", xs, kl_fit, "#1f77b4");
  chart.add_line("W1 fit", xs, w1_fit, "#d62728", true);
  chart.write(c.out / "toy.svg");
  return s;
}

}  // namespace flowcast::cli
