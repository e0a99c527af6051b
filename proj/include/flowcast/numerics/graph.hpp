#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowcast/numerics/array.hpp"

namespace flowcast::numerics {

/// Trainable value with an accumulated gradient of the same shape.
class Parameter {
 public:
  explicit Parameter(Array value, std::string name = {});

  Array value;
  Array grad;

  std::uint64_t id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  void zero_grad() noexcept { grad.fill(0.0); }

 private:
  std::uint64_t id_;
  std::string name_;
};

using ParameterPtr = std::shared_ptr<Parameter>;

class Graph;

/// Handle to a node recorded in a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t index = 0;

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the record is
/// already topologically sorted.
class Graph {
 public:
  using Inputs = std::span<const Array* const>;
  using ForwardFn = std::function<Array(Inputs)>;
  /// Receives the output gradient, input values and per-input gradient slots
  /// (null when that input does not need a gradient).
  using BackwardFn =
      std::function<void(const Array& out_grad, const Array& out_value, Inputs in_values,
                         std::span<Array* const> in_grads)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Array value);
  Var parameter(const ParameterPtr& param);

  Var record(std::vector<Var> inputs, ForwardFn forward, BackwardFn backward);

  const Array& value(Var v) const { return nodes_[v.index].value; }
  bool requires_grad(Var v) const { return nodes_[v.index].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Accumulates d(output)/d(parameter) into every reachable Parameter::grad.
  void backward(Var output);

  /// Re-evaluates every node from current parameter values.
  void replay();

 private:
  struct Node {
    Array value;
    Array grad;
    std::vector<std::size_t> inputs;
    ForwardFn forward;
    BackwardFn backward;
    std::weak_ptr<Parameter> param;
    bool is_param = false;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
};

}  // namespace flowcast::numerics
