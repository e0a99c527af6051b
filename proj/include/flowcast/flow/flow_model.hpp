#pragma once

#include <cstdint>
#include <vector>

#include "flowcast/flow/coupling.hpp"

namespace flowcast::flow {

struct FlowConfig {
  std::size_t dim = 24;       // forecast horizon k
  std::size_t cond_dim = 24;  // history length h
  std::size_t blocks = 9;
  CouplingVariant variant = CouplingVariant::Reinforced;
  NetConfig nets;
  std::uint64_t seed = 0;
};

/// Per-block log-determinants and the final latent for a batch.
struct FlowTrace {
  std::vector<Array> block_logdets;  // each [N]
  Array latent;                      // [N, D]

  Array total_logdet() const;
};

struct LogProbResult {
  Array log_prob;  // [N]
  FlowTrace trace;
};

/// Conditional normalizing flow: K coupling blocks with alternating
/// orientation, mapping x to z under a standard normal prior.
///
/// New models are identity maps in inference mode. Sampling and exact density
/// evaluation expect inference mode; training code switches modes explicitly.
class FlowModel {
 public:
  explicit FlowModel(const FlowConfig& config);

  FlowModel(FlowModel&&) noexcept = default;
  FlowModel& operator=(FlowModel&&) noexcept = default;
  FlowModel(const FlowModel&) = delete;
  FlowModel& operator=(const FlowModel&) = delete;

  /// Deep copy with independent parameters.
  FlowModel clone() const;

  struct Pass {
    Var latent;
    Var logdet;  // [N]
    std::vector<Var> block_logdets;
  };

  Pass forward(Var x, Var c) const;
  Var inverse(Var z, Var c) const;
  /// Exact conditional log-density log p(x | c), one value per row.
  Var log_prob(Var x, Var c) const;

  LogProbResult log_prob(const Array& x, const Array& c) const;
  Array forward(const Array& x, const Array& c) const;
  /// Pushes latent draws z through the inverse flow.
  Array sample(const Array& c, const Array& z) const;

  const FlowConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return config_.dim; }
  std::size_t cond_dim() const noexcept { return config_.cond_dim; }
  const std::vector<CouplingBlock>& blocks() const noexcept { return blocks_; }
  std::vector<CouplingBlock>& blocks() noexcept { return blocks_; }

  bool training() const noexcept { return training_; }
  void set_training(bool on);

  std::vector<ParameterPtr> parameters() const;

  /// Visits parameters and running statistics in checkpoint order
  /// (block index, then net name).
  void visit(const TensorVisitor& visitor);
  void each_tensor(const std::function<void(const std::string&, const Array&)>& visitor) const;

  std::vector<Array> snapshot() const;
  void restore(const std::vector<Array>& state);

 private:
  FlowConfig config_;
  std::vector<CouplingBlock> blocks_;
  bool training_ = false;
};

/// log N(z; 0, I) per row of a [N, D] variable.
Var standard_normal_log_density(Var z);

}  // namespace flowcast::flow
