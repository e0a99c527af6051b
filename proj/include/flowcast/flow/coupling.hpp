#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "flowcast/numerics/batchnorm.hpp"
#include "flowcast/numerics/layers.hpp"

namespace flowcast::flow {

using numerics::Array;
using numerics::ParameterPtr;
using numerics::Var;

enum class CouplingVariant { Vanilla, Reinforced };

std::string_view to_string(CouplingVariant variant);
/// Parses "vanilla" / "reinforced"; throws InputError otherwise.
CouplingVariant parse_variant(std::string_view tag);

struct NetConfig {
  std::size_t conv_channels = 32;
  std::size_t kernel = 3;
  std::size_t dense_hidden = 64;
};

enum class Activation { Tanh, Relu };

/// Callback used to enumerate every stored tensor (parameters and batch-norm
/// running statistics) under a stable dotted name.
using TensorVisitor = std::function<void(const std::string& name, Array& tensor)>;

/// Three-layer 1-D convolutional net mapping [N, C_in, D] to one value per
/// position, [N, D]. Batch normalization precedes the second and third layers.
/// The last layer is zero-initialized; scale nets squash the output with tanh.
class ConvConditioner {
 public:
  ConvConditioner(std::size_t in_channels, const NetConfig& config, Activation activation,
                  bool bounded, numerics::Rng& rng);

  Var operator()(Var input) const;

  void set_training(bool on);
  void collect(std::vector<ParameterPtr>& out) const;
  void visit(const std::string& prefix, const TensorVisitor& visitor);

  numerics::Conv1d conv1;
  numerics::BatchNorm norm1;
  numerics::Conv1d conv2;
  numerics::BatchNorm norm2;
  numerics::Conv1d conv3;

 private:
  Activation activation_;
  bool bounded_;
};

/// One-hidden-layer fully connected net on the condition alone.
class DenseConditioner {
 public:
  DenseConditioner(std::size_t in, std::size_t hidden, std::size_t out, Activation activation,
                   bool bounded, numerics::Rng& rng);

  Var operator()(Var c) const;

  void collect(std::vector<ParameterPtr>& out) const;
  void visit(const std::string& prefix, const TensorVisitor& visitor);

  numerics::Linear hidden;
  numerics::Linear output;

 private:
  Activation activation_;
  bool bounded_;
};

struct CouplingOutput {
  Array y;
  Array logdet;  // one entry per sample
};

/// Conditional affine coupling layer.
///
/// The data vector splits into a contiguous pass-through part A and a
/// transformed part B (split index floor(D/2); `flipped` swaps which half is A).
/// Vanilla:    y_A = x_A,                        y_B = x_B * exp(s(x_A, c)) + t(x_A, c)
/// Reinforced: y_A = x_A * exp(s_c(c)) + t_c(c), y_B as above
/// The Jacobian is triangular, so log|det| is the sum of the applied scales.
class CouplingBlock {
 public:
  CouplingBlock(CouplingVariant variant, std::size_t dim, std::size_t cond_dim, bool flipped,
                const NetConfig& config, numerics::Rng& rng);

  struct Result {
    Var y;
    Var logdet;
  };

  Result forward(Var x, Var c) const;
  Var inverse(Var y, Var c) const;

  /// Array conveniences on [N, D] / [N, D'] batches (rank-1 inputs are a batch of one).
  CouplingOutput forward(const Array& x, const Array& c) const;
  Array inverse(const Array& y, const Array& c) const;

  CouplingVariant variant() const noexcept { return variant_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t cond_dim() const noexcept { return cond_dim_; }
  std::size_t split() const noexcept { return split_; }
  bool flipped() const noexcept { return flipped_; }
  bool training() const noexcept { return training_; }

  /// Half-open index ranges of the pass-through and transformed parts.
  std::pair<std::size_t, std::size_t> pass_range() const noexcept;
  std::pair<std::size_t, std::size_t> transform_range() const noexcept;

  void set_training(bool on);
  std::vector<ParameterPtr> parameters() const;
  void visit(const std::string& prefix, const TensorVisitor& visitor);

  ConvConditioner& scale_net() { return scale_; }
  ConvConditioner& shift_net() { return shift_; }
  DenseConditioner* cond_scale_net() { return cond_scale_ ? &*cond_scale_ : nullptr; }
  DenseConditioner* cond_shift_net() { return cond_shift_ ? &*cond_shift_ : nullptr; }

 private:
  Var conditioner_input(Var x_pass, Var c) const;
  std::pair<Var, Var> transform_coefficients(Var x_pass, Var c) const;
  Var assemble(Var part_a, Var part_b) const;

  CouplingVariant variant_;
  std::size_t dim_;
  std::size_t cond_dim_;
  std::size_t split_;
  std::size_t cond_channels_;
  bool flipped_;
  bool training_ = false;
  ConvConditioner scale_;
  ConvConditioner shift_;
  std::optional<DenseConditioner> cond_scale_;
  std::optional<DenseConditioner> cond_shift_;
};

/// Accepts [D] or [N, D]; returns [N, D]. Throws DimensionError on width mismatch.
Array as_batch(const Array& a, std::size_t width, const char* what);

}  // namespace flowcast::flow
