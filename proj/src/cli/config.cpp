#include "flowcast/cli/config.hpp"

#include <fstream>
#include <set>

#include "flowcast/error.hpp"

namespace flowcast::cli {

using nlohmann::json;

namespace {

// Reads optional keys of one JSON object, rejecting any it was not asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InputError("config: '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw InputError("config: unknown key '" + name_ + "." + key + "'");
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  template <typename T>
  void get(const std::string& key, T& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InputError("config: '" + name_ + "." + key + "' has the wrong type");
    }
  }

  void get_path(const std::string& key, std::filesystem::path& target) {
    std::string s = target.string();
    get(key, s);
    target = s;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("config: " + what);
}

}  // namespace

void RunConfig::resolve() {
  model.dim = data.horizon;
  model.cond_dim = data.history;
}

void RunConfig::validate() const {
  require(!out.empty(), "out must not be empty");
  require(data.households >= 1, "data.households must be at least 1");
  require(data.history >= 1 && data.horizon >= 1, "data.history and data.horizon must be positive");
  require(data.test_days >= 1, "data.test_days must be positive");
  require(data.validation_fraction >= 0.0 && data.validation_fraction < 1.0,
          "data.validation_fraction must lie in [0, 1)");
  require(data.train_end.empty() == data.test_start.empty(),
          "data.train_end and data.test_start must be given together");
  if (!data.train_end.empty()) {
    data::HourStamp::parse_date(data.train_end);
    data::HourStamp::parse_date(data.test_start);
  }
  synth.validate();
  require(model.blocks >= 1, "model.blocks must be at least 1");
  require(model.nets.conv_channels >= 1 && model.nets.dense_hidden >= 1, "model widths must be positive");
  require(model.nets.kernel % 2 == 1, "model.kernel must be odd");
  train.validate();
  require(forecast.method == "flow" || forecast.method == "ar-noise",
          "forecast.method must be 'flow' or 'ar-noise'");
  require(forecast.scenarios >= 2, "forecast.scenarios must be at least 2");
  require(forecast.ar_order >= 1, "forecast.ar_order must be positive");
  for (double g : eval.coverage_grid) require(g >= 0.0 && g <= 1.0, "eval coverage grid values must lie in [0, 1]");
  require(eval.width_coverage >= 0.0 && eval.width_coverage <= 1.0, "eval.width_coverage must lie in [0, 1]");
  std::set<std::string> names;
  for (const auto& m : eval.methods) {
    require(!m.name.empty(), "eval method names must be nonempty");
    require(m.name.find_first_of("/\\") == std::string::npos, "eval method names may not contain slashes");
    require(names.insert(m.name).second, "duplicate eval method '" + m.name + "'");
  }
  toy.spec.validate();
  toy.grid.values();
  require(toy.quadrature_nodes >= 100, "toy.quadrature_nodes must be at least 100");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "config");
  root.get_path("out", c.out);

  if (const json* d = root.child("data")) {
    Section s(*d, "data");
    s.get_path("path", c.data.path);
    s.get("households", c.data.households);
    s.get("selection_seed", c.data.selection_seed);
    s.get("history", c.data.history);
    s.get("horizon", c.data.horizon);
    s.get("train_end", c.data.train_end);
    s.get("test_start", c.data.test_start);
    s.get("test_days", c.data.test_days);
    s.get("validation_fraction", c.data.validation_fraction);
  }
  if (const json* d = root.child("synth")) {
    Section s(*d, "synth");
    s.get("households", c.synth.households);
    s.get("start_date", c.synth.start_date);
    s.get("days", c.synth.days);
    s.get("base_level", c.synth.base_level);
    s.get("morning_amplitude", c.synth.morning_amplitude);
    s.get("morning_hour", c.synth.morning_hour);
    s.get("evening_amplitude", c.synth.evening_amplitude);
    s.get("evening_hour", c.synth.evening_hour);
    s.get("weekly_amplitude", c.synth.weekly_amplitude);
    s.get("noise_scale", c.synth.noise_scale);
    s.get("seed", c.synth.seed);
  }
  if (const json* d = root.child("model")) {
    Section s(*d, "model");
    std::string variant(flow::to_string(c.model.variant));
    s.get("variant", variant);
    c.model.variant = flow::parse_variant(variant);
    s.get("blocks", c.model.blocks);
    s.get("conv_channels", c.model.nets.conv_channels);
    s.get("kernel", c.model.nets.kernel);
    s.get("dense_hidden", c.model.nets.dense_hidden);
    s.get("seed", c.model.seed);
  }
  if (const json* d = root.child("train")) {
    Section s(*d, "train");
    s.get("learning_rate", c.train.learning_rate);
    s.get("batch_size", c.train.batch_size);
    s.get("epochs", c.train.epochs);
    s.get("beta", c.train.beta);
    s.get("critic_clamp", c.train.critic_clamp);
    s.get("critic_steps", c.train.critic_steps);
    s.get("critic_hidden", c.train.critic_hidden);
    s.get("critic_learning_rate", c.train.critic_learning_rate);
    s.get("seed", c.train.seed);
    s.get("patience", c.train.patience);
    s.get("divergence_threshold", c.train.divergence_threshold);
  }
  if (const json* d = root.child("forecast")) {
    Section s(*d, "forecast");
    s.get("method", c.forecast.method);
    s.get("scenarios", c.forecast.scenarios);
    s.get("seed", c.forecast.seed);
    s.get_path("checkpoint", c.forecast.checkpoint);
    s.get("ar_order", c.forecast.ar_order);
  }
  if (const json* d = root.child("eval")) {
    Section s(*d, "eval");
    s.get_path("realized", c.eval.realized);
    s.get("coverage_grid", c.eval.coverage_grid);
    s.get("width_coverage", c.eval.width_coverage);
    if (const json* methods = s.child("methods")) {
      if (!methods->is_array()) throw InputError("config: 'eval.methods' must be an array");
      for (const json& m : *methods) {
        Section ms(m, "eval.methods[]");
        EvalMethod em;
        ms.get("name", em.name);
        ms.get_path("scenarios", em.scenarios);
        c.eval.methods.push_back(std::move(em));
      }
    }
  }
  if (const json* d = root.child("toy")) {
    Section s(*d, "toy");
    s.get("mu1", c.toy.spec.mu1);
    s.get("mu2", c.toy.spec.mu2);
    s.get("component_variance", c.toy.spec.component_variance);
    s.get("weight1", c.toy.spec.weight1);
    s.get("sigma2_min", c.toy.grid.min);
    s.get("sigma2_max", c.toy.grid.max);
    s.get("sigma2_step", c.toy.grid.step);
    s.get("quadrature_nodes", c.toy.quadrature_nodes);
  }
  if (c.eval.coverage_grid.empty()) c.eval.coverage_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  c.resolve();
  return c;
}

json config_to_json(const RunConfig& c) {
  json methods = json::array();
  for (const auto& m : c.eval.methods) methods.push_back({{"name", m.name}, {"scenarios", m.scenarios.string()}});
  return json{
      {"out", c.out.string()},
      {"data",
       {{"path", c.data.path.string()},
        {"households", c.data.households},
        {"selection_seed", c.data.selection_seed},
        {"history", c.data.history},
        {"horizon", c.data.horizon},
        {"train_end", c.data.train_end},
        {"test_start", c.data.test_start},
        {"test_days", c.data.test_days},
        {"validation_fraction", c.data.validation_fraction}}},
      {"synth",
       {{"households", c.synth.households},
        {"start_date", c.synth.start_date},
        {"days", c.synth.days},
        {"base_level", c.synth.base_level},
        {"morning_amplitude", c.synth.morning_amplitude},
        {"morning_hour", c.synth.morning_hour},
        {"evening_amplitude", c.synth.evening_amplitude},
        {"evening_hour", c.synth.evening_hour},
        {"weekly_amplitude", c.synth.weekly_amplitude},
        {"noise_scale", c.synth.noise_scale},
        {"seed", c.synth.seed}}},
      {"model",
       {{"variant", std::string(flow::to_string(c.model.variant))},
        {"blocks", c.model.blocks},
        {"conv_channels", c.model.nets.conv_channels},
        {"kernel", c.model.nets.kernel},
        {"dense_hidden", c.model.nets.dense_hidden},
        {"seed", c.model.seed}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"beta", c.train.beta},
        {"critic_clamp", c.train.critic_clamp},
        {"critic_steps", c.train.critic_steps},
        {"critic_hidden", c.train.critic_hidden},
        {"critic_learning_rate", c.train.critic_learning_rate},
        {"seed", c.train.seed},
        {"patience", c.train.patience},
        {"divergence_threshold", c.train.divergence_threshold}}},
      {"forecast",
       {{"method", c.forecast.method},
        {"scenarios", c.forecast.scenarios},
        {"seed", c.forecast.seed},
        {"checkpoint", c.forecast.checkpoint.string()},
        {"ar_order", c.forecast.ar_order}}},
      {"eval",
       {{"realized", c.eval.realized.string()},
        {"methods", methods},
        {"coverage_grid", c.eval.coverage_grid},
        {"width_coverage", c.eval.width_coverage}}},
      {"toy",
       {{"mu1", c.toy.spec.mu1},
        {"mu2", c.toy.spec.mu2},
        {"component_variance", c.toy.spec.component_variance},
        {"weight1", c.toy.spec.weight1},
        {"sigma2_min", c.toy.grid.min},
        {"sigma2_max", c.toy.grid.max},
        {"sigma2_step", c.toy.grid.step},
        {"quadrature_nodes", c.toy.quadrature_nodes}}}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void apply_overrides(RunConfig& c, const std::string& command, const Overrides& o) {
  if (o.variant) c.model.variant = flow::parse_variant(*o.variant);
  if (o.blocks) c.model.blocks = *o.blocks;
  if (o.beta) c.train.beta = *o.beta;
  if (o.households) (command == "synth" ? c.synth.households : c.data.households) = *o.households;
  if (o.scenarios) c.forecast.scenarios = *o.scenarios;
  if (o.seed) {
    c.synth.seed = *o.seed;
    c.model.seed = *o.seed;
    c.train.seed = *o.seed;
    c.forecast.seed = *o.seed;
    c.data.selection_seed = *o.seed;
  }
  if (o.out) c.out = *o.out;
  if (o.data) c.data.path = *o.data;
  if (o.checkpoint) c.forecast.checkpoint = *o.checkpoint;
  if (o.method) c.forecast.method = *o.method;
  c.resolve();
}

}  // namespace flowcast::cli
