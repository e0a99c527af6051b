#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "flowcast/flow/flow_model.hpp"

namespace flowcast::training {

using numerics::Array;
using numerics::Var;

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  /// Weight of the Wasserstein term; 0 is plain maximum likelihood.
  double beta = 0.0;
  double critic_clamp = 0.01;
  std::size_t critic_steps = 5;
  std::size_t critic_hidden = 128;
  double critic_learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  std::size_t patience = 10;
  /// A batch nll above this (or non-finite) aborts training.
  double divergence_threshold = 1e6;

  void validate() const;
};

/// Paired rows of data x [N, D] and conditions c [N, D'].
struct ConditionalData {
  Array x;
  Array c;

  std::size_t size() const { return x.rank() == 2 ? x.extent(0) : 0; }
  ConditionalData rows(std::size_t begin, std::size_t end) const;
  ConditionalData gather(const std::vector<std::size_t>& indices) const;
};

/// Chronological split: the last `fraction` of rows become validation data.
std::pair<ConditionalData, ConditionalData> split_validation(const ConditionalData& data,
                                                             double fraction);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  double w_estimate = 0.0;
};

struct TrainResult {
  flow::FlowModel model;
  std::vector<EpochRecord> history;  // entry 0 is the untrained model
  std::size_t best_epoch = 0;
  double best_val_nll = 0.0;
};

/// Mean negative conditional log-likelihood of a batch.
Var nll(const flow::FlowModel& model, Var x, Var c);
/// Evaluated in the model's current mode; reports the first non-finite row.
double nll(const flow::FlowModel& model, const Array& x, const Array& c);
/// Inference-mode nll over a dataset, evaluated in chunks.
double evaluate_nll(const flow::FlowModel& model, const ConditionalData& data);

/// Maximum-likelihood training with Adam and early stopping on validation
/// nll. An empty validation set selects on training nll instead. Returns the
/// best checkpoint, in inference mode.
TrainResult train_mle(const flow::FlowConfig& flow_config, const ConditionalData& train,
                      const ConditionalData& validation, const TrainConfig& config);

/// Minimizes nll + beta * W, where W is the clamped critic's dual estimate
/// between data and pathwise model samples. Shuffling uses the same random
/// stream as train_mle, so beta = 0 reproduces train_mle exactly.
TrainResult train_wflow(const flow::FlowConfig& flow_config, const ConditionalData& train,
                        const ConditionalData& validation, const TrainConfig& config);

void write_loss_csv(std::ostream& out, const std::vector<EpochRecord>& history);
void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace flowcast::training
