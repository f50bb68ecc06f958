#include "scml/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scml {

Graph& Var::graph() const {
  if (!graph_) throw std::logic_error("var: unbound variable");
  return *graph_;
}

const Tensor& Var::value() const { return graph().nodes_.at(id_).value; }

const Tensor& Var::grad() const {
  auto& node = graph().nodes_.at(id_);
  if (!node.has_grad) {
    node.grad = Tensor::zeros_like(node.value);
    node.has_grad = true;
  }
  return node.grad;
}

bool Var::requires_grad() const { return graph().nodes_.at(id_).requires_grad; }

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.op = requires_grad ? "leaf" : "constant";
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (&in.graph() != this) throw std::logic_error(node.op + ": input belongs to another graph");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var loss) {
  if (nodes_.empty() || !loss.valid() || loss.id() >= nodes_.size() || &loss.graph() != this) {
    throw std::logic_error("backward: no recorded forward pass for this loss");
  }
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_str(lv.shape()));
  }
  for (auto& node : nodes_) node.has_grad = false;

  auto& root = nodes_[loss.id()];
  root.grad = Tensor(lv.shape(), 1.0);
  root.has_grad = true;

  std::vector<const Tensor*> in_vals;
  std::vector<Tensor*> in_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.requires_grad || !node.backward) continue;
    in_vals.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      Node& src = nodes_[in];
      in_vals.push_back(&src.value);
      if (src.requires_grad) {
        if (!src.has_grad) {
          src.grad = Tensor::zeros_like(src.value);
          src.has_grad = true;
        }
        in_grads.push_back(&src.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.backward(BackwardContext{node.value, node.grad, in_vals, in_grads});
  }
}

Tensor finite_diff_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw DomainError("finite_diff_grad: eps must be positive");
  Tensor probe = x;
  Tensor grad = Tensor::zeros_like(x);
  auto eval = [&](const Tensor& at) {
    const Tensor out = f(at);
    if (out.size() != 1) {
      throw ShapeError("finite_diff_grad: function output must be scalar, got " + shape_str(out.shape()));
    }
    return out[0];
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    probe[i] = orig + eps;
    const double up = eval(probe);
    probe[i] = orig - eps;
    const double down = eval(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  if (analytic.size() != numeric.size()) {
    throw ShapeError("max_relative_error: shape mismatch " + shape_str(analytic.shape()) + " vs " +
                     shape_str(numeric.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    if (!std::isfinite(a) || !std::isfinite(n)) return std::numeric_limits<double>::infinity();
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace scml
