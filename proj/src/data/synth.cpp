#include "flowcast/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flowcast/error.hpp"
#include "flowcast/numerics/random.hpp"

namespace flowcast::data {

void SynthSpec::validate() const {
  if (households == 0) throw InputError("synth: households must be at least 1");
  if (days == 0) throw InputError("synth: days must be at least 1");
  HourStamp::parse_date(start_date);
  if (!(base_level >= 0.0) || !(morning_amplitude >= 0.0) || !(evening_amplitude >= 0.0)) {
    throw InputError("synth: levels and amplitudes must be nonnegative");
  }
  if (!(morning_hour >= 0.0 && morning_hour < 24.0) || !(evening_hour >= 0.0 && evening_hour < 24.0)) {
    throw InputError("synth: peak hours must lie in [0, 24)");
  }
  if (!(weekly_amplitude > -1.0) || !std::isfinite(weekly_amplitude)) {
    throw InputError("synth: weekly amplitude must exceed -1");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw InputError("synth: noise scale must be nonnegative");
  }
}

namespace {

struct Household {
  double base;
  double morning_amp, morning_hour, morning_width;
  double evening_amp, evening_hour, evening_width;
  double daily_phi, daily_sd;
  double hourly_sd;
  double spike_mean;
};

// Circular Gaussian bump over the 24-hour clock.
double bump(double hour, double centre, double width) {
  double d = std::fmod(std::abs(hour - centre), 24.0);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * d * d / (width * width));
}

}  // namespace

std::vector<LoadSeries> synth_generate(const SynthSpec& spec) {
  spec.validate();
  const HourStamp start = HourStamp::parse_date(spec.start_date);
  const std::size_t hours = spec.days * 24;
  const double ns = spec.noise_scale;

  numerics::Rng shape_rng(numerics::derive_seed(spec.seed, 0));
  std::vector<Household> homes(spec.households);
  for (auto& h : homes) {
    h.base = spec.base_level * shape_rng.uniform(0.6, 1.4);
    h.morning_amp = spec.morning_amplitude * shape_rng.uniform(0.5, 1.5);
    h.morning_hour = spec.morning_hour + shape_rng.uniform(-1.0, 1.0);
    h.morning_width = shape_rng.uniform(1.0, 1.8);
    h.evening_amp = spec.evening_amplitude * shape_rng.uniform(0.6, 1.4);
    h.evening_hour = spec.evening_hour + shape_rng.uniform(-1.5, 1.5);
    h.evening_width = shape_rng.uniform(1.8, 3.0);
    h.daily_phi = shape_rng.uniform(0.4, 0.8);
    h.daily_sd = shape_rng.uniform(0.10, 0.25);
    h.hourly_sd = shape_rng.uniform(0.08, 0.2);
    h.spike_mean = 0.5 * h.evening_amp;
  }

  // Shared day-level factor, e.g. weather, as an AR(1) in log space.
  numerics::Rng weather_rng(numerics::derive_seed(spec.seed, 1));
  std::vector<double> weather(spec.days);
  double w = 0.0;
  for (double& v : weather) {
    w = 0.85 * w + 0.12 * weather_rng.normal();
    v = w;
  }

  std::vector<LoadSeries> out;
  out.reserve(spec.households);
  for (std::size_t i = 0; i < spec.households; ++i) {
    const Household& h = homes[i];
    numerics::Rng rng(numerics::derive_seed(spec.seed, 100 + i));
    std::exponential_distribution<double> spike_size(1.0);
    LoadSeries s{std::to_string(i + 1), start, std::vector<double>(hours)};
    double own = 0.0;
    double hourly = 0.0;
    for (std::size_t d = 0; d < spec.days; ++d) {
      own = h.daily_phi * own + h.daily_sd * rng.normal();
      const double level = std::exp(ns * (weather[d] + own));
      const int dow = (start + static_cast<std::int64_t>(d * 24)).day_of_week();
      const bool weekend = dow >= 5;
      const double weekly = weekend ? 1.0 + spec.weekly_amplitude : 1.0;
      const double morning_shift = weekend ? 1.5 : 0.0;
      for (std::size_t t = 0; t < 24; ++t) {
        const double hour = static_cast<double>(t);
        const double evening = bump(hour, h.evening_hour, h.evening_width);
        const double profile =
            h.base + weekly * (h.morning_amp * bump(hour, h.morning_hour + morning_shift, h.morning_width) +
                               h.evening_amp * evening);
        hourly = 0.7 * hourly + std::sqrt(1.0 - 0.49) * rng.normal();
        const double spike_p = 0.02 + 0.12 * evening;
        const double u = rng.uniform(0.0, 1.0);
        const double spike = u < spike_p ? h.spike_mean * spike_size(rng.engine()) : 0.0;
        const double value = profile * level * (1.0 + ns * h.hourly_sd * hourly) + ns * spike;
        s.kw[d * 24 + t] = std::max(0.0, value);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace flowcast::data
