#include "dfx/autodiff.hpp"

#include <unordered_set>

#include "dfx/error.hpp"

namespace dfx::nn {

namespace detail {

Tensor* Node::grad_sink() {
  if (!wants_grad()) return nullptr;
  if (!has_grad) {
    grad = Tensor::zeros(value.shape());
    has_grad = true;
  }
  return &grad;
}

}  // namespace detail

Variable Variable::constant(Tensor v) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(v);
  return from_node(std::move(n));
}

Variable Variable::input(Tensor v) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return from_node(std::move(n));
}

const Tensor& Variable::grad() const {
  if (!node_->has_grad) throw MissingGradient("variable has no gradient");
  return node_->grad;
}

Variable Variable::from_node(std::shared_ptr<detail::Node> n) {
  Variable v;
  v.node_ = std::move(n);
  return v;
}

Parameter::Parameter(std::string name, Tensor init, bool frozen) {
  node_ = std::make_shared<detail::Node>();
  node_->value = std::move(init);
  node_->requires_grad = true;
  node_->frozen = frozen;
  node_->name = std::move(name);
}

const Tensor& Parameter::grad() const {
  if (!node_->has_grad) throw MissingGradient("parameter '" + node_->name + "' has no gradient");
  return node_->grad;
}

void Parameter::clear_grad() {
  node_->has_grad = false;
  node_->grad = Tensor();
}

Variable make_op(Tensor value, std::vector<Variable> parents,
                 std::function<void(detail::Node&)> fn) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  for (auto& p : parents) {
    if (!p.defined()) throw ShapeMismatch("undefined variable passed to op");
    if (p.node()->wants_grad()) n->requires_grad = true;
    n->parents.push_back(p.node());
  }
  if (n->requires_grad) n->backprop = std::move(fn);
  return Variable::from_node(std::move(n));
}

void backward(const Variable& loss) {
  if (!loss.defined()) throw NoGraph("backward on undefined variable");
  auto root = loss.node();
  if (root->parents.empty()) throw NoGraph("loss was not produced by a recorded computation");
  if (root->value.size() != 1)
    throw ShapeMismatch("backward requires a scalar loss, got shape " + root->value.shape_str());

  // Post-order DFS for a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  struct Frame {
    detail::Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& frame = stack.back();
    if (frame.next_parent < frame.node->parents.size()) {
      detail::Node* p = frame.node->parents[frame.next_parent++].get();
      if (visited.insert(p).second && !p->parents.empty()) stack.push_back({p, 0});
    } else {
      order.push_back(frame.node);
      stack.pop_back();
    }
  }

  // Fresh sweep: stale gradients from a previous backward are discarded for
  // interior nodes; leaf (parameter) grads are reset lazily via grad_sink.
  for (auto* n : order) {
    n->has_grad = false;
  }
  for (auto* n : order)
    for (auto& p : n->parents)
      if (p->parents.empty()) p->has_grad = false;

  root->grad = Tensor::full(root->value.shape(), 1.0);
  root->has_grad = true;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->has_grad && n->backprop) n->backprop(*n);
  }
}

}  // namespace dfx::nn
