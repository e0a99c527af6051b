#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <json.hpp>

#include "flowcast/cli/commands.hpp"
#include "flowcast/error.hpp"

namespace {

using flowcast::cli::Overrides;
using flowcast::cli::RunConfig;

int run(const std::string& command, const std::string& config_path, const Overrides& overrides) {
  RunConfig config = config_path.empty() ? flowcast::cli::config_from_json(nlohmann::json::object())
                                         : flowcast::cli::load_config(config_path);
  flowcast::cli::apply_overrides(config, command, overrides);
  config.validate();

  if (command == "synth") {
    const auto path = flowcast::cli::cmd_synth(config);
    std::printf("wrote %s\n", path.string().c_str());
  } else if (command == "train") {
    const auto s = flowcast::cli::cmd_train(config);
    std::printf("val nll %.6f -> %.6f (best epoch %zu of %zu); checkpoint %s\n", s.initial_val_nll,
                s.best_val_nll, s.best_epoch, s.epochs_run, s.checkpoint.string().c_str());
  } else if (command == "forecast") {
    const auto s = flowcast::cli::cmd_forecast(config);
    std::printf("%zu windows x %zu scenarios -> %s\n", s.windows, s.scenarios, s.scenarios_csv.string().c_str());
  } else if (command == "eval") {
    const auto s = flowcast::cli::cmd_eval(config);
    for (const auto& [name, curve] : s.curves) {
      std::printf("%s:", name.c_str());
      for (double d : curve.deviation) std::printf(" %.4f", d);
      std::printf("\n");
    }
  } else if (command == "toy") {
    const auto s = flowcast::cli::cmd_toy(config);
    std::printf("KL argmin sigma^2 = %.3f (moment matching %.3f); W1 argmin sigma^2 = %.3f\n",
                s.kl.argmin_sigma2, s.moment_matched_sigma2, s.w1.argmin_sigma2);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional normalizing-flow scenario forecasting for hourly load"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  std::string variant, out, data, checkpoint, method;
  std::size_t blocks = 0, households = 0, scenarios = 0;
  double beta = 0.0;
  std::uint64_t seed = 0;

  for (const char* name : {"synth", "train", "forecast", "eval", "toy"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed for every random stream");
    if (std::string(name) != "toy") sub->add_option("--households", households, "household count");
    if (std::string(name) == "train" || std::string(name) == "forecast" || std::string(name) == "eval") {
      sub->add_option("--data", data, "load CSV path");
    }
    if (std::string(name) == "train") {
      sub->add_option("--variant", variant, "vanilla or reinforced")
          ->check(CLI::IsMember({"vanilla", "reinforced"}));
      sub->add_option("--blocks", blocks, "number of coupling blocks")->check(CLI::PositiveNumber);
      sub->add_option("--beta", beta, "Wasserstein weight")->check(CLI::NonNegativeNumber);
    }
    if (std::string(name) == "forecast") {
      sub->add_option("--scenarios", scenarios, "scenarios per window");
      sub->add_option("--checkpoint", checkpoint, "checkpoint directory");
      sub->add_option("--method", method, "flow or ar-noise")->check(CLI::IsMember({"flow", "ar-noise"}));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [&](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) > 0; };
  if (given("--variant")) o.variant = variant;
  if (given("--blocks")) o.blocks = blocks;
  if (given("--beta")) o.beta = beta;
  if (given("--households")) o.households = households;
  if (given("--scenarios")) o.scenarios = scenarios;
  if (given("--seed")) o.seed = seed;
  if (given("--out")) o.out = out;
  if (given("--data")) o.data = data;
  if (given("--checkpoint")) o.checkpoint = checkpoint;
  if (given("--method")) o.method = method;

  try {
    return run(sub->get_name(), config_path, o);
  } catch (const flowcast::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const flowcast::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
