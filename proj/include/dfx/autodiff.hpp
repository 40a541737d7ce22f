#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dfx/tensor.hpp"

namespace dfx::nn {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool frozen = false;
  std::string name;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backprop;

  bool wants_grad() const { return requires_grad && !frozen; }
  // Allocates (zero-filled) on first touch; nullptr when gradient is not wanted.
  Tensor* grad_sink();
};

}  // namespace detail

// Handle into the recorded computation DAG. Ops build child nodes whose
// requires_grad is the OR of the parents' wants_grad at construction time;
// freeze state is therefore read when the graph is built.
class Variable {
 public:
  Variable() = default;

  static Variable constant(Tensor v);
  // Leaf that participates in gradient computation (inputs under test).
  static Variable input(Tensor v);

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->has_grad; }
  const Tensor& grad() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Variable from_node(std::shared_ptr<detail::Node> n);

 private:
  std::shared_ptr<detail::Node> node_;
};

// Named trainable (or frozen) leaf. Copies share the underlying storage.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor init, bool frozen = false);

  const std::string& name() const { return node_->name; }
  bool frozen() const { return node_->frozen; }
  void set_frozen(bool f) { node_->frozen = f; }

  Tensor& tensor() { return node_->value; }
  const Tensor& tensor() const { return node_->value; }

  bool has_grad() const { return node_->has_grad; }
  const Tensor& grad() const;
  void clear_grad();

  Variable var() const { return Variable::from_node(node_); }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Creates an op node. `fn` is invoked during backward with the node itself.
Variable make_op(Tensor value, std::vector<Variable> parents,
                 std::function<void(detail::Node&)> fn);

// Reverse-mode sweep from a scalar loss. Throws NoGraph when the loss was not
// produced by a recorded computation, ShapeMismatch when it is not scalar.
void backward(const Variable& loss);

}  // namespace dfx::nn
