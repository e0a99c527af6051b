#include "flowcast/numerics/graph.hpp"

#include <atomic>

#include "flowcast/error.hpp"

namespace flowcast::numerics {

namespace {
std::atomic<std::uint64_t> next_parameter_id{1};
}

Parameter::Parameter(Array v, std::string name)
    : value(std::move(v)), grad(value.shape()), id_(next_parameter_id++), name_(std::move(name)) {}

const Array& Var::value() const { return graph->value(*this); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Array value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Graph::parameter(const ParameterPtr& param) {
  if (!param) throw InputError("null parameter recorded on graph");
  Node node;
  node.value = param->value;
  node.param = param;
  node.is_param = true;
  node.requires_grad = true;
  return push(std::move(node));
}

Var Graph::record(std::vector<Var> inputs, ForwardFn forward, BackwardFn backward) {
  Node node;
  std::vector<const Array*> in_values;
  in_values.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.graph != this) throw InputError("operation mixes variables from different graphs");
    node.inputs.push_back(v.index);
    in_values.push_back(&nodes_[v.index].value);
    node.requires_grad = node.requires_grad || nodes_[v.index].requires_grad;
  }
  node.value = forward(in_values);
  node.forward = std::move(forward);
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

void Graph::backward(Var output) {
  if (output.graph != this) throw InputError("backward on a variable from another graph");
  Node& out = nodes_[output.index];
  if (out.value.size() != 1) {
    throw DimensionError("backward needs a scalar output, got shape " + to_string(out.value.shape()));
  }
  for (auto& node : nodes_) node.grad = Array();
  out.grad = Array(out.value.shape(), 1.0);

  std::vector<const Array*> in_values;
  std::vector<Array*> in_grads;
  for (std::size_t i = output.index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.is_param) {
      auto param = node.param.lock();
      if (!param) throw InputError("graph references a freed parameter");
      auto g = param->grad.values();
      const auto ng = node.grad.values();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += ng[j];
      continue;
    }
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      Node& src = nodes_[in];
      in_values.push_back(&src.value);
      if (src.requires_grad) {
        if (src.grad.empty()) src.grad = Array(src.value.shape());
        in_grads.push_back(&src.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.backward(node.grad, node.value, in_values, in_grads);
  }
}

void Graph::replay() {
  std::vector<const Array*> in_values;
  for (auto& node : nodes_) {
    if (node.is_param) {
      auto param = node.param.lock();
      if (!param) throw InputError("graph references a freed parameter");
      node.value = param->value;
    } else if (node.forward) {
      in_values.clear();
      for (std::size_t in : node.inputs) in_values.push_back(&nodes_[in].value);
      node.value = node.forward(in_values);
    }
  }
}

}  // namespace flowcast::numerics
