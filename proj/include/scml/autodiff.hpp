#ifndef SCML_AUTODIFF_HPP
#define SCML_AUTODIFF_HPP

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scml/tensor.hpp"

namespace scml {

class Graph;

/// Handle to a node recorded on a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const;
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient after Graph::backward; zeros if the node did not receive any.
  const Tensor& grad() const;
  bool requires_grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Everything a backward rule sees: forward values of output and inputs, the incoming
/// gradient, and accumulation targets for inputs (nullptr where no gradient is needed).
struct BackwardContext {
  const Tensor& out;
  const Tensor& out_grad;
  std::span<const Tensor* const> in;
  std::span<Tensor* const> in_grad;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

struct Node {
  std::string op;
  Tensor value;
  Tensor grad;
  std::vector<std::size_t> inputs;
  bool requires_grad = false;
  bool has_grad = false;
  BackwardFn backward;
};

/// Wengert tape. Nodes are appended in evaluation order, so ids are already a topological
/// order and backward is a single reverse sweep.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  /// Reverse sweep from a scalar loss. Gradients of earlier sweeps are cleared first.
  void backward(Var loss);

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  std::deque<Node> nodes_;
};

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every coordinate of x.
/// f must return a single-element tensor.
Tensor finite_diff_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps = 1e-6);

/// |a - n| / max(|a|, |n|, floor), maximised over coordinates.
double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-3);

}  // namespace scml

#endif  // SCML_AUTODIFF_HPP
