#include "flowcast/training/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>

#include "flowcast/error.hpp"
#include "flowcast/numerics/adam.hpp"
#include "flowcast/numerics/ops.hpp"
#include "flowcast/training/critic.hpp"

namespace flowcast::training {

using namespace numerics;
using flow::FlowConfig;
using flow::FlowModel;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (batch_size < 2) throw InputError("batch size must be at least 2");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be a finite value >= 0");
  if (!(critic_clamp > 0.0)) throw InputError("critic clamp must be positive");
  if (!(critic_learning_rate > 0.0)) throw InputError("critic learning rate must be positive");
  if (critic_hidden == 0) throw InputError("critic hidden width must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InputError("validation fraction must lie in [0, 1)");
  }
}

ConditionalData ConditionalData::rows(std::size_t begin, std::size_t end) const {
  return {x.rows(begin, end), c.rows(begin, end)};
}

ConditionalData ConditionalData::gather(const std::vector<std::size_t>& indices) const {
  const std::size_t dx = x.extent(1);
  const std::size_t dc = c.extent(1);
  ConditionalData out{Array(Shape{indices.size(), dx}), Array(Shape{indices.size(), dc})};
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    std::copy_n(x.data() + i * dx, dx, out.x.data() + r * dx);
    std::copy_n(c.data() + i * dc, dc, out.c.data() + r * dc);
  }
  return out;
}

std::pair<ConditionalData, ConditionalData> split_validation(const ConditionalData& data,
                                                             double fraction) {
  const std::size_t n = data.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (n_val >= n) throw InputError("validation split leaves no training rows");
  return {data.rows(0, n - n_val), data.rows(n - n_val, n)};
}

Var nll(const FlowModel& model, Var x, Var c) {
  if (x.shape().empty() || x.shape()[0] == 0) throw InputError("nll of an empty batch");
  return scale(mean(model.log_prob(x, c)), -1.0);
}

double nll(const FlowModel& model, const Array& x, const Array& c) {
  Graph g;
  Var xv = g.constant(flow::as_batch(x, model.dim(), "nll x"));
  Var cv = g.constant(flow::as_batch(c, model.cond_dim(), "nll c"));
  if (xv.shape()[0] == 0) throw InputError("nll of an empty batch");
  // A non-finite input row would otherwise surface as an anonymous
  // conditioner failure.
  for (Var v : {xv, cv}) {
    const Array a = v.value();
    const std::size_t width = a.extent(1);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(a[i])) {
        throw NumericalError("non-finite log-probability at sample " + std::to_string(width ? i / width : 0) +
                             " (non-finite input)");
      }
    }
  }
  const Array& lp = model.log_prob(xv, cv).value();
  double total = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (!std::isfinite(lp[i])) {
      throw NumericalError("non-finite log-probability at sample " + std::to_string(i));
    }
    total += lp[i];
  }
  return -total / static_cast<double>(lp.size());
}

double evaluate_nll(const FlowModel& model, const ConditionalData& data) {
  constexpr std::size_t chunk = 512;
  const std::size_t n = data.size();
  if (n == 0) throw InputError("nll of an empty dataset");
  double total = 0.0;
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t e = std::min(n, b + chunk);
    const ConditionalData part = data.rows(b, e);
    total += nll(model, part.x, part.c) * static_cast<double>(e - b);
  }
  return total / static_cast<double>(n);
}

namespace {

enum Stream : std::uint64_t { kShuffle = 0, kLatent = 1, kCritic = 2 };

void check_data(const FlowConfig& fc, const ConditionalData& d, const char* what) {
  if (d.size() == 0) return;
  if (d.x.rank() != 2 || d.x.extent(1) != fc.dim || d.c.rank() != 2 ||
      d.c.extent(1) != fc.cond_dim || d.c.extent(0) != d.x.extent(0)) {
    throw DimensionError(std::string(what) + " data does not match the flow dimensions");
  }
}

// Runs the shared loop. The critic and latent streams are only touched when
// beta > 0, which keeps beta = 0 identical to maximum likelihood.
TrainResult run_training(const FlowConfig& flow_config, const ConditionalData& train,
                         const ConditionalData& validation, const TrainConfig& config) {
  config.validate();
  if (train.size() < 2) throw InputError("training needs at least two samples");
  check_data(flow_config, train, "training");
  check_data(flow_config, validation, "validation");

  FlowModel model(flow_config);
  Adam optimizer(model.parameters(), AdamConfig{.learning_rate = config.learning_rate});

  Rng shuffle_rng(derive_seed(config.seed, kShuffle));
  Rng latent_rng(derive_seed(config.seed, kLatent));
  Rng critic_rng(derive_seed(config.seed, kCritic));

  const bool adversarial = config.beta > 0.0;
  std::optional<Critic> critic;
  std::optional<Adam> critic_optimizer;
  if (adversarial) {
    critic.emplace(flow_config.dim, flow_config.cond_dim, config.critic_hidden,
                   config.critic_clamp, critic_rng);
    critic_optimizer.emplace(critic->parameters(),
                             AdamConfig{.learning_rate = config.critic_learning_rate});
  }

  const bool has_validation = validation.size() > 0;
  auto selection_nll = [&](const FlowModel& m) {
    return evaluate_nll(m, has_validation ? validation : train);
  };

  TrainResult result{model.clone(), {}, 0, 0.0};
  const double initial_val = has_validation ? evaluate_nll(model, validation) : 0.0;
  result.history.push_back({0, evaluate_nll(model, train), initial_val, 0.0});
  double best = selection_nll(model);
  result.best_val_nll = best;
  std::vector<Array> best_state = model.snapshot();
  std::size_t since_best = 0;

  const std::size_t n = train.size();
  const std::size_t n_batches = std::max<std::size_t>(1, n / config.batch_size);
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double loss_sum = 0.0;
    double w_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * n / n_batches;
      const std::size_t end = (b + 1) * n / n_batches;
      const ConditionalData batch =
          train.gather(std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                                order.begin() + static_cast<std::ptrdiff_t>(end)));
      const std::size_t bs = end - begin;

      double w_estimate = 0.0;
      if (adversarial) {
        model.set_training(false);
        for (std::size_t s = 0; s < config.critic_steps; ++s) {
          const Array z = latent_rng.normal_array(Shape{bs, flow_config.dim});
          const Array fake = model.sample(batch.c, z);
          w_estimate = critic_step(*critic, *critic_optimizer, batch.x, batch.c, fake, batch.c);
        }
      }

      Graph g;
      Var x = g.constant(batch.x);
      Var c = g.constant(batch.c);
      model.set_training(true);
      Var loss = nll(model, x, c);
      const double batch_nll = loss.value().item();
      if (!std::isfinite(batch_nll) || batch_nll > config.divergence_threshold) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b) + ": nll = " + std::to_string(batch_nll));
      }
      if (adversarial) {
        model.set_training(false);
        Var z = g.constant(latent_rng.normal_array(Shape{bs, flow_config.dim}));
        Var fake = model.inverse(z, c);
        Var w = wasserstein_dual_estimate(*critic, x, c, fake, c);
        w_estimate = w.value().item();
        loss = add(loss, scale(w, config.beta));
      }
      g.backward(loss);
      try {
        optimizer.step();
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": " +
                             e.what());
      }
      if (adversarial) critic_optimizer->zero_grad();
      loss_sum += batch_nll;
      w_sum += w_estimate;
    }
    model.set_training(false);

    EpochRecord record;
    record.epoch = epoch;
    record.train_nll = loss_sum / static_cast<double>(n_batches);
    record.val_nll = has_validation ? evaluate_nll(model, validation) : record.train_nll;
    record.w_estimate = w_sum / static_cast<double>(n_batches);
    result.history.push_back(record);

    const double score = has_validation ? record.val_nll : record.train_nll;
    if (!std::isfinite(score)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                           ": non-finite validation nll");
    }
    if (score < best) {
      best = score;
      best_state = model.snapshot();
      result.best_epoch = epoch;
      result.best_val_nll = score;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  model.restore(best_state);
  model.set_training(false);
  result.model = std::move(model);
  return result;
}

}  // namespace

TrainResult train_mle(const FlowConfig& flow_config, const ConditionalData& train,
                      const ConditionalData& validation, const TrainConfig& config) {
  TrainConfig mle = config;
  mle.beta = 0.0;
  return run_training(flow_config, train, validation, mle);
}

TrainResult train_wflow(const FlowConfig& flow_config, const ConditionalData& train,
                        const ConditionalData& validation, const TrainConfig& config) {
  return run_training(flow_config, train, validation, config);
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

void write_loss_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_nll,val_nll,w_estimate\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.train_nll) << ',' << format_double(r.val_nll) << ','
        << format_double(r.w_estimate) << '\n';
  }
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  write_loss_csv(out, history);
}

}  // namespace flowcast::training
